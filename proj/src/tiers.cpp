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

#include "seqann/tiers.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cctype>

#include "seqann/strings.hpp"

namespace seqann::tiers {

const char* tier_kind_name(TierKind k) {
  switch (k) {
    case TierKind::Speech: return "speech";
    case TierKind::Sequential: return "sequential";
    case TierKind::Byplay: return "byplay";
    case TierKind::Alignment: return "alignment";
    case TierKind::Label: return "label";
    case TierKind::Other: return "other";
  }
  return "other";
}

std::optional<TierKind> tier_kind_from_name(const std::string& s) {
  for (TierKind k : {TierKind::Speech, TierKind::Sequential, TierKind::Byplay,
                     TierKind::Alignment, TierKind::Label, TierKind::Other})
    if (s == tier_kind_name(k)) return k;
  return std::nullopt;
}

TierKind infer_tier_kind(const std::string& name) {
  if (name.rfind("speech@", 0) == 0) return TierKind::Speech;
  if (name.rfind("seqthread@", 0) == 0) return TierKind::Sequential;
  if (name.rfind("byplay@", 0) == 0) return TierKind::Byplay;
  if (name == "alignment") return TierKind::Alignment;
  if (name == "labels") return TierKind::Label;
  return TierKind::Other;
}

std::optional<std::string> infer_participant(const std::string& name) {
  if (name.rfind("speech@", 0) == 0 && name.size() > 7) return name.substr(7);
  return std::nullopt;
}

const Tier* AnnotationDocument::find_tier(const std::string& name) const {
  for (const auto& t : tiers)
    if (t.name == name) return &t;
  return nullptr;
}

Tier& AnnotationDocument::upsert_tier(const std::string& name) {
  for (auto& t : tiers)
    if (t.name == name) return t;
  Tier t;
  t.name = name;
  t.kind = infer_tier_kind(name);
  t.participant = infer_participant(name);
  tiers.push_back(std::move(t));
  std::sort(tiers.begin(), tiers.end(),
            [](const Tier& a, const Tier& b) { return a.name < b.name; });
  for (auto& tt : tiers)
    if (tt.name == name) return tt;
  throw UsageError("unreachable");
}

namespace {

void canonicalize(AnnotationDocument& doc) {
  std::sort(doc.tiers.begin(), doc.tiers.end(),
            [](const Tier& a, const Tier& b) { return a.name < b.name; });
  for (auto& tier : doc.tiers)
    std::stable_sort(tier.segments.begin(), tier.segments.end(),
                     [](const Segment& a, const Segment& b) {
                       return a.start_ms != b.start_ms ? a.start_ms < b.start_ms
                                                       : a.end_ms < b.end_ms;
                     });
}

void check_structural(const AnnotationDocument& doc) {
  auto ds = validate_tiers(doc);
  for (const auto& d : ds)
    if (d.is_error()) throw ParseError(d.message, d.location);
}

// ---------------------------------------------------------------------------
// Minimal XML reader for the eaf subset. Handles declarations, comments,
// attributes and text content; no entities beyond the five predefined ones,
// no CDATA, no namespaces. ELAN output stays well inside this.

struct XmlNode {
  std::string tag;
  std::map<std::string, std::string> attrs;
  std::vector<XmlNode> children;
  std::string text;
};

struct XmlReader {
  std::string_view in;
  size_t pos = 0;

  void skip_ws() {
    while (pos < in.size() && std::isspace(static_cast<unsigned char>(in[pos]))) ++pos;
  }

  bool consume(std::string_view s) {
    if (in.substr(pos, s.size()) == s) {
      pos += s.size();
      return true;
    }
    return false;
  }

  void skip_misc() {
    while (true) {
      skip_ws();
      if (consume("<?")) {
        size_t e = in.find("?>", pos);
        if (e == std::string_view::npos) throw ParseError("unterminated XML declaration");
        pos = e + 2;
      } else if (consume("<!--")) {
        size_t e = in.find("-->", pos);
        if (e == std::string_view::npos) throw ParseError("unterminated XML comment");
        pos = e + 3;
      } else {
        return;
      }
    }
  }

  static std::string decode_entities(std::string_view s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] != '&') {
        out += s[i];
        continue;
      }
      size_t semi = s.find(';', i);
      std::string_view ent = semi == std::string_view::npos ? s.substr(i + 1)
                                                            : s.substr(i + 1, semi - i - 1);
      if (ent == "amp") out += '&';
      else if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else throw ParseError(fmt::format("unknown XML entity '&{};'", ent));
      i = semi;
    }
    return out;
  }

  std::string read_name() {
    size_t b = pos;
    while (pos < in.size() &&
           (std::isalnum(static_cast<unsigned char>(in[pos])) || in[pos] == '_' ||
            in[pos] == '-' || in[pos] == '.' || in[pos] == ':'))
      ++pos;
    if (pos == b) throw ParseError(fmt::format("expected XML name at offset {}", pos));
    return std::string(in.substr(b, pos - b));
  }

  XmlNode read_element() {
    skip_misc();
    if (!consume("<")) throw ParseError(fmt::format("expected '<' at offset {}", pos));
    XmlNode node;
    node.tag = read_name();
    while (true) {
      skip_ws();
      if (consume("/>")) return node;
      if (consume(">")) break;
      std::string attr = read_name();
      skip_ws();
      if (!consume("=")) throw ParseError(fmt::format("expected '=' after attribute '{}'", attr));
      skip_ws();
      char quote = pos < in.size() ? in[pos] : '\0';
      if (quote != '"' && quote != '\'')
        throw ParseError(fmt::format("expected quoted value for attribute '{}'", attr));
      ++pos;
      size_t e = in.find(quote, pos);
      if (e == std::string_view::npos)
        throw ParseError(fmt::format("unterminated value for attribute '{}'", attr));
      node.attrs[attr] = decode_entities(in.substr(pos, e - pos));
      pos = e + 1;
    }
    // content
    while (true) {
      size_t text_start = pos;
      size_t lt = in.find('<', pos);
      if (lt == std::string_view::npos) throw ParseError("unterminated XML element");
      node.text += decode_entities(trim(in.substr(text_start, lt - text_start)));
      pos = lt;
      if (in.substr(pos, 4) == "<!--") {
        skip_misc();
        continue;
      }
      if (in.substr(pos, 2) == "</") {
        pos += 2;
        std::string closing = read_name();
        if (closing != node.tag)
          throw ParseError(fmt::format("mismatched closing tag </{}> for <{}>", closing, node.tag));
        skip_ws();
        if (!consume(">")) throw ParseError("malformed closing tag");
        return node;
      }
      node.children.push_back(read_element());
    }
  }
};

AnnotationDocument import_eaf(const std::string& bytes, const std::string& session_hint) {
  XmlReader reader{bytes};
  XmlNode root = reader.read_element();
  if (root.tag != "ANNOTATION_DOCUMENT")
    throw ParseError(fmt::format("expected ANNOTATION_DOCUMENT root, got <{}>", root.tag));

  AnnotationDocument doc;
  doc.session_id = session_hint;

  std::map<std::string, int64_t> slots;
  const XmlNode* time_order = nullptr;
  for (const auto& child : root.children)
    if (child.tag == "TIME_ORDER") time_order = &child;
  if (time_order) {
    for (const auto& slot : time_order->children) {
      if (slot.tag != "TIME_SLOT")
        throw ParseError(fmt::format("unsupported element <{}> in TIME_ORDER", slot.tag));
      auto id = slot.attrs.find("TIME_SLOT_ID");
      if (id == slot.attrs.end()) throw ParseError("TIME_SLOT without TIME_SLOT_ID");
      auto value = slot.attrs.find("TIME_VALUE");
      if (value != slot.attrs.end()) slots[id->second] = std::stoll(value->second);
    }
  }

  auto resolve_slot = [&](const std::string& ref, const std::string& where) {
    auto it = slots.find(ref);
    if (it == slots.end())
      throw ParseError(fmt::format("annotation references missing or unaligned time slot '{}'", ref),
                       where);
    return it->second;
  };

  int64_t max_end = 0;
  for (const auto& child : root.children) {
    if (child.tag == "TIME_ORDER" || child.tag == "HEADER" || child.tag == "LINGUISTIC_TYPE" ||
        child.tag == "LOCALE" || child.tag == "LANGUAGE" || child.tag == "CONSTRAINT" ||
        child.tag == "CONTROLLED_VOCABULARY" || child.tag == "EXTERNAL_REF" ||
        child.tag == "LEXICON_REF")
      continue;
    if (child.tag != "TIER")
      throw ParseError(fmt::format("unsupported element <{}>", child.tag));
    auto tier_id = child.attrs.find("TIER_ID");
    if (tier_id == child.attrs.end()) throw ParseError("TIER without TIER_ID");
    Tier tier;
    tier.name = tier_id->second;
    tier.kind = infer_tier_kind(tier.name);
    auto participant = child.attrs.find("PARTICIPANT");
    if (participant != child.attrs.end()) tier.participant = participant->second;
    else tier.participant = infer_participant(tier.name);

    for (const auto& ann : child.children) {
      if (ann.tag != "ANNOTATION")
        throw ParseError(fmt::format("unsupported element <{}> in tier '{}'", ann.tag, tier.name));
      for (const auto& inner : ann.children) {
        if (inner.tag == "REF_ANNOTATION")
          throw ParseError(
              fmt::format("unsupported element <REF_ANNOTATION> in tier '{}': only alignable "
                          "annotations are supported",
                          tier.name));
        if (inner.tag != "ALIGNABLE_ANNOTATION")
          throw ParseError(fmt::format("unsupported element <{}> in tier '{}'", inner.tag,
                                       tier.name));
        auto where = fmt::format("tier '{}'", tier.name);
        auto ts1 = inner.attrs.find("TIME_SLOT_REF1");
        auto ts2 = inner.attrs.find("TIME_SLOT_REF2");
        if (ts1 == inner.attrs.end() || ts2 == inner.attrs.end())
          throw ParseError("ALIGNABLE_ANNOTATION without time slot refs", where);
        Segment seg;
        seg.start_ms = resolve_slot(ts1->second, where);
        seg.end_ms = resolve_slot(ts2->second, where);
        for (const auto& v : inner.children)
          if (v.tag == "ANNOTATION_VALUE") seg.value = v.text;
        tier.segments.push_back(std::move(seg));
        max_end = std::max(max_end, tier.segments.back().end_ms);
      }
    }
    doc.tiers.push_back(std::move(tier));
  }
  // eaf carries no timeline length; use the last annotation end.
  doc.timeline_duration_ms = max_end;
  canonicalize(doc);
  check_structural(doc);
  return doc;
}

// ---------------------------------------------------------------------------
// Interchange format:
//   interchange 1
//   doc <session_id> <timeline_duration_ms>
//   tier <name> <kind> <participant|->
//   seg <start_ms> <end_ms> <value>
// Tab-separated, values escaped, tiers in name order, segments by start.

AnnotationDocument import_interchange(const std::string& bytes) {
  AnnotationDocument doc;
  Tier* current = nullptr;
  bool saw_header = false, saw_doc = false;
  int n = 0;
  for (const auto& line : split_lines(bytes)) {
    ++n;
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    const std::string& kind = fields[0];
    auto where = fmt::format("line {}", n);
    if (!saw_header) {
      if (kind != "interchange" || fields.size() < 2 || fields[1] != "1")
        throw ParseError("expected 'interchange 1' header", where);
      saw_header = true;
      continue;
    }
    if (kind == "doc") {
      if (fields.size() != 3) throw ParseError("doc line needs session and duration", where);
      doc.session_id = unescape_field(fields[1]);
      doc.timeline_duration_ms = std::stoll(fields[2]);
      saw_doc = true;
    } else if (kind == "tier") {
      if (!saw_doc) throw ParseError("tier before doc line", where);
      if (fields.size() != 4) throw ParseError("tier line needs name, kind, participant", where);
      Tier tier;
      tier.name = unescape_field(fields[1]);
      auto k = tier_kind_from_name(fields[2]);
      if (!k) throw ParseError(fmt::format("unknown tier kind '{}'", fields[2]), where);
      tier.kind = *k;
      if (fields[3] != "-") tier.participant = unescape_field(fields[3]);
      doc.tiers.push_back(std::move(tier));
      current = &doc.tiers.back();
    } else if (kind == "seg") {
      if (!current) throw ParseError("seg before any tier line", where);
      if (fields.size() != 4) throw ParseError("seg line needs start, end, value", where);
      Segment seg;
      seg.start_ms = std::stoll(fields[1]);
      seg.end_ms = std::stoll(fields[2]);
      seg.value = unescape_field(fields[3]);
      current->segments.push_back(std::move(seg));
    } else {
      throw ParseError(fmt::format("unknown record '{}'", kind), where);
    }
  }
  if (!saw_doc) throw ParseError("missing doc line");
  canonicalize(doc);
  check_structural(doc);
  return doc;
}

}  // namespace

AnnotationDocument import_annotation_document(const std::string& bytes, DocumentFormat format,
                                              const std::string& session_hint) {
  switch (format) {
    case DocumentFormat::EafSubset: return import_eaf(bytes, session_hint);
    case DocumentFormat::Interchange: return import_interchange(bytes);
  }
  throw UsageError("unknown document format");
}

std::string export_interchange(const AnnotationDocument& doc) {
  AnnotationDocument copy = doc;
  canonicalize(copy);
  std::string out = "interchange\t1\n";
  out += fmt::format("doc\t{}\t{}\n", escape_field(copy.session_id), copy.timeline_duration_ms);
  for (const auto& tier : copy.tiers) {
    out += fmt::format("tier\t{}\t{}\t{}\n", escape_field(tier.name), tier_kind_name(tier.kind),
                       tier.participant ? escape_field(*tier.participant) : "-");
    for (const auto& seg : tier.segments)
      out += fmt::format("seg\t{}\t{}\t{}\n", seg.start_ms, seg.end_ms, escape_field(seg.value));
  }
  return out;
}

std::vector<Diagnostic> validate_tiers(const AnnotationDocument& doc) {
  std::vector<Diagnostic> out;
  std::map<std::string, int> name_count;
  for (const auto& tier : doc.tiers) ++name_count[tier.name];
  for (const auto& [name, count] : name_count)
    if (count > 1)
      out.push_back({Severity::Error, "duplicate_tier",
                     fmt::format("tier '{}' appears {} times", name, count), name});

  for (const auto& tier : doc.tiers) {
    auto loc = fmt::format("tier '{}'", tier.name);
    if (tier.segments.empty())
      out.push_back({Severity::Warning, "empty_tier", "tier has no segments", loc});
    if (tier.kind == TierKind::Speech && !tier.participant)
      out.push_back({Severity::Warning, "speech_without_participant",
                     "speech tier has no participant", loc});
    const Segment* prev = nullptr;
    for (size_t i = 0; i < tier.segments.size(); ++i) {
      const auto& seg = tier.segments[i];
      auto seg_loc = fmt::format("{} segment {}", loc, i + 1);
      if (seg.start_ms < 0 || seg.start_ms >= seg.end_ms)
        out.push_back({Severity::Error, "bad_segment_bounds",
                       fmt::format("segment [{},{}) is not a valid range", seg.start_ms,
                                   seg.end_ms),
                       seg_loc});
      if (seg.end_ms > doc.timeline_duration_ms)
        out.push_back({Severity::Error, "segment_past_timeline",
                       fmt::format("segment ends at {} past timeline {}", seg.end_ms,
                                   doc.timeline_duration_ms),
                       seg_loc});
      if (prev && seg.start_ms < prev->end_ms)
        out.push_back({Severity::Error, "segment_overlap",
                       fmt::format("segment [{},{}) overlaps previous [{},{})", seg.start_ms,
                                   seg.end_ms, prev->start_ms, prev->end_ms),
                       seg_loc});
      if (tier.kind == TierKind::Alignment) {
        auto at = seg.value.find('@');
        if (at == std::string::npos || at == 0 ||
            seg.value.find_first_not_of("0123456789", at + 1) != std::string::npos ||
            at + 1 == seg.value.size())
          out.push_back({Severity::Error, "bad_alignment_value",
                         fmt::format("alignment value '{}' is not '<recording>@<offset_ms>'",
                                     seg.value),
                         seg_loc});
      }
      prev = &seg;
    }
  }
  return out;
}

std::vector<AlignmentEntry> alignment_entries(const AnnotationDocument& doc) {
  const Tier* alignment = nullptr;
  for (const auto& tier : doc.tiers)
    if (tier.kind == TierKind::Alignment) {
      if (alignment) throw UsageError("document has more than one alignment tier");
      alignment = &tier;
    }
  if (!alignment) throw UsageError("document has no alignment tier");
  std::vector<AlignmentEntry> out;
  for (const auto& seg : alignment->segments) {
    auto at = seg.value.find('@');
    if (at == std::string::npos)
      throw ParseError(fmt::format("alignment value '{}' is not '<recording>@<offset_ms>'",
                                   seg.value),
                       fmt::format("tier '{}'", alignment->name));
    AlignmentEntry entry;
    entry.source_recording_id = seg.value.substr(0, at);
    entry.source_offset_ms = std::stoll(seg.value.substr(at + 1));
    entry.ref_start_ms = seg.start_ms;
    entry.ref_end_ms = seg.end_ms;
    out.push_back(std::move(entry));
  }
  return out;
}

SourceMapping map_to_source(const AnnotationDocument& doc, const Segment& segment) {
  auto entries = alignment_entries(doc);
  SourceMapping out;
  int64_t covered = 0;
  for (const auto& entry : entries) {
    int64_t lo = std::max(segment.start_ms, entry.ref_start_ms);
    int64_t hi = std::min(segment.end_ms, entry.ref_end_ms);
    if (lo >= hi) continue;
    SourceRange range;
    range.source_recording_id = entry.source_recording_id;
    range.start_ms_in_source = lo - entry.ref_start_ms + entry.source_offset_ms;
    range.end_ms_in_source = hi - entry.ref_start_ms + entry.source_offset_ms;
    out.ranges.push_back(std::move(range));
    covered += hi - lo;
  }
  if (out.ranges.size() > 1)
    out.diagnostics.push_back({Severity::Warning, "split",
                               fmt::format("segment [{},{}) spans {} alignment entries",
                                           segment.start_ms, segment.end_ms, out.ranges.size()),
                               {}});
  if (covered < segment.end_ms - segment.start_ms)
    out.diagnostics.push_back({Severity::Warning, "uncovered",
                               fmt::format("{} ms of segment [{},{}) not covered by any recording",
                                           segment.end_ms - segment.start_ms - covered,
                                           segment.start_ms, segment.end_ms),
                               {}});
  return out;
}

}  // namespace seqann::tiers
