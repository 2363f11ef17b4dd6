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

#ifndef SEQANN_CORPUS_HPP
#define SEQANN_CORPUS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seqann/diagnostics.hpp"
#include "seqann/labels.hpp"
#include "seqann/sequence.hpp"
#include "seqann/tiers.hpp"
#include "seqann/transcript.hpp"

namespace seqann::corpus {

struct ClipRecord {
  std::string clip_id;
  std::string session_id;
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  labels::LabelSequence label_string;
  std::string notes;
};

struct SessionRecord {
  std::string id;
  std::optional<tiers::AnnotationDocument> document;
  std::optional<transcript::Transcript> transcript_data;
};

// Directory layout:
//   <root>/registry.conf                       (optional; defaults used)
//   <root>/sessions/<id>/annotations.itx|.eaf
//   <root>/sessions/<id>/clips.tsv             clip_id <TAB> start <TAB> end <TAB> labels [<TAB> notes]
//   <root>/sessions/<id>/transcript.txt        (optional)
struct CorpusIndex {
  labels::TagRegistry registry;
  seq::CategoryRegistry categories;
  std::map<std::string, SessionRecord> sessions;
  std::vector<ClipRecord> clips;
  std::vector<Diagnostic> diagnostics;
};

// Loads and cross-references everything it can; unreadable or invalid files
// are reported in diagnostics and the partial index is still returned.
CorpusIndex build_index(const std::string& root);

struct ClipMatch {
  const ClipRecord* clip = nullptr;
  std::vector<size_t> spans;
};

// Clips whose label strings match the query, with matched token indices.
std::vector<ClipMatch> query_clips(const CorpusIndex& index, const std::string& pattern);

struct LatencySummary {
  int64_t count = 0;
  int64_t min_ms = 0;
  int64_t max_ms = 0;
  int64_t total_ms = 0;
};

struct StatsOptions {
  bool include_latencies = true;
  bool include_silences = true;
};

struct StatsReport {
  std::map<std::string, int64_t> tag_counts;                    // by base tag
  std::map<std::string, int64_t> direction_counts;              // "h->p" etc.
  std::map<std::string, int64_t> silence_histogram;             // bucket -> count
  std::map<std::string, LatencySummary> latency_by_category;    // satisfier category
  std::vector<Diagnostic> diagnostics;
};

// Tag frequencies over clip label strings, silence-duration histogram from
// session transcripts, and projection-response latencies (response start
// minus opening-turn end) from replayed session ledgers where the
// annotations carry sequential tiers.
StatsReport compute_stats(const CorpusIndex& index, const StatsOptions& options = {});

struct CutlistOptions {
  std::optional<std::string> pattern;          // select by label query
  std::vector<std::string> clip_ids;           // or by explicit ids
};

// TSV manifest: one row per (clip x overlapping source range); rows carry
// clip id, recording, source start/end, the clip's label string and a note
// column for split/uncovered flags. Sessions without an alignment tier yield
// per-clip error rows. Deterministic row order.
std::string emit_cutlist(const CorpusIndex& index, const CutlistOptions& options = {});

// Turn-end based response latencies from a replayed ledger, keyed by the
// satisfier's category. Exposed for the stats pipeline and tests.
std::map<std::string, std::vector<int64_t>> response_latencies(const seq::ThreadLedger& ledger);

}  // namespace seqann::corpus

#endif  // SEQANN_CORPUS_HPP
