/*  Copyright 2026 The seqann authors.

    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License. */

#ifndef SEQANN_TIERS_HPP
#define SEQANN_TIERS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seqann/diagnostics.hpp"

namespace seqann::tiers {

enum class TierKind { Speech, Sequential, Byplay, Alignment, Label, Other };

const char* tier_kind_name(TierKind k);
std::optional<TierKind> tier_kind_from_name(const std::string& s);

struct Segment {
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  std::string value;

  bool operator==(const Segment&) const = default;
};

struct Tier {
  std::string name;
  TierKind kind = TierKind::Other;
  std::optional<std::string> participant;
  std::vector<Segment> segments;  // sorted by start, non-overlapping

  bool operator==(const Tier&) const = default;
};

// Parsed row of an alignment tier: segment [ref_start,ref_end) on the session
// timeline maps into source_recording_id starting at source_offset_ms.
struct AlignmentEntry {
  std::string source_recording_id;
  int64_t ref_start_ms = 0;
  int64_t ref_end_ms = 0;
  int64_t source_offset_ms = 0;
};

struct AnnotationDocument {
  std::string session_id;
  int64_t timeline_duration_ms = 0;
  std::vector<Tier> tiers;  // kept sorted by name (canonical order)

  const Tier* find_tier(const std::string& name) const;
  Tier& upsert_tier(const std::string& name);

  bool operator==(const AnnotationDocument&) const = default;
};

// Tier naming convention: "speech@<participant>", "seqthread@<A|B|...>",
// "byplay@<A|B|...>", "alignment", "labels"; anything else is Other.
// An override map (name -> kind) wins over the convention.
TierKind infer_tier_kind(const std::string& name);
std::optional<std::string> infer_participant(const std::string& name);

enum class DocumentFormat { EafSubset, Interchange };

// Materializes a document with millisecond times from either supported
// format. session_hint names the session when the input does not.
// Throws ParseError on malformed input; invariant violations (overlaps,
// negative times, dangling references) are reported the same way with the
// offending tier/segment named.
AnnotationDocument import_annotation_document(const std::string& bytes, DocumentFormat format,
                                              const std::string& session_hint = "session");

// Canonical line-delimited text format; byte-deterministic, and
// import(export(d)) == d for valid documents.
std::string export_interchange(const AnnotationDocument& doc);

// Errors for invariant violations, warnings for empty tiers and speech tiers
// without a participant.
std::vector<Diagnostic> validate_tiers(const AnnotationDocument& doc);

// Parses "recording@offset_ms" alignment values from the document's
// alignment tier. Throws if there is no alignment tier.
std::vector<AlignmentEntry> alignment_entries(const AnnotationDocument& doc);

struct SourceRange {
  std::string source_recording_id;
  int64_t start_ms_in_source = 0;
  int64_t end_ms_in_source = 0;
};

struct SourceMapping {
  std::vector<SourceRange> ranges;
  std::vector<Diagnostic> diagnostics;  // "split" / "uncovered" warnings
};

// Intersects the segment's timeline range with the alignment entries and
// translates each piece by offset arithmetic. Requires exactly one alignment
// tier (throws otherwise).
SourceMapping map_to_source(const AnnotationDocument& doc, const Segment& segment);

}  // namespace seqann::tiers

#endif  // SEQANN_TIERS_HPP
