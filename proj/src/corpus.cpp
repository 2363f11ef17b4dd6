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

#include "seqann/corpus.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "seqann/strings.hpp"

namespace fs = std::filesystem;

namespace seqann::corpus {

namespace {

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void load_clips(const std::string& text, const std::string& session_id,
                const labels::TagRegistry& registry, CorpusIndex& index) {
  int line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty() || line[0] == '#') continue;
    auto where = fmt::format("session '{}' clips.tsv line {}", session_id, line_no);
    auto fields = split(line, '\t');
    if (fields.size() < 4) {
      index.diagnostics.push_back({Severity::Error, "bad_clip_row",
                                   "expected clip_id<TAB>start_ms<TAB>end_ms<TAB>labels", where});
      continue;
    }
    ClipRecord clip;
    clip.clip_id = fields[0];
    clip.session_id = session_id;
    try {
      clip.start_ms = std::stoll(fields[1]);
      clip.end_ms = std::stoll(fields[2]);
    } catch (const std::exception&) {
      index.diagnostics.push_back(
          {Severity::Error, "bad_clip_row", "start/end are not integers", where});
      continue;
    }
    if (clip.start_ms < 0 || clip.start_ms >= clip.end_ms) {
      index.diagnostics.push_back(
          {Severity::Error, "bad_clip_span",
           fmt::format("clip span [{},{}) is not a valid range", clip.start_ms, clip.end_ms),
           where});
      continue;
    }
    try {
      auto parsed = labels::parse_label_string(fields[3], registry);
      clip.label_string = parsed.sequence;
      for (auto d : parsed.diagnostics) {
        d.location = where + ", " + d.location;
        index.diagnostics.push_back(std::move(d));
      }
    } catch (const ParseError& err) {
      index.diagnostics.push_back({Severity::Error, "bad_clip_labels", err.what(), where});
      continue;
    }
    if (fields.size() > 4) clip.notes = unescape_field(fields[4]);

    auto session = index.sessions.find(session_id);
    if (session == index.sessions.end()) {
      index.diagnostics.push_back({Severity::Error, "missing_session",
                                   fmt::format("clip '{}' references unknown session '{}'",
                                               clip.clip_id, session_id),
                                   where});
      continue;
    }
    if (session->second.document &&
        clip.end_ms > session->second.document->timeline_duration_ms)
      index.diagnostics.push_back(
          {Severity::Warning, "clip_past_timeline",
           fmt::format("clip '{}' ends at {} past session timeline {}", clip.clip_id, clip.end_ms,
                       session->second.document->timeline_duration_ms),
           where});
    index.clips.push_back(std::move(clip));
  }
}

}  // namespace

CorpusIndex build_index(const std::string& root) {
  CorpusIndex index;
  index.registry = labels::TagRegistry::defaults();
  index.categories = seq::CategoryRegistry::defaults();

  fs::path root_path(root);
  if (auto text = read_file(root_path / "registry.conf")) {
    try {
      index.registry = labels::TagRegistry::load(*text);
      index.categories = seq::CategoryRegistry::load(*text);
    } catch (const ParseError& err) {
      index.diagnostics.push_back(
          {Severity::Error, "bad_registry", err.what(), "registry.conf"});
    }
  }

  fs::path sessions_dir = root_path / "sessions";
  std::vector<std::string> session_ids;
  if (fs::is_directory(sessions_dir)) {
    for (const auto& entry : fs::directory_iterator(sessions_dir))
      if (entry.is_directory()) session_ids.push_back(entry.path().filename().string());
  }
  std::sort(session_ids.begin(), session_ids.end());
  if (session_ids.empty())
    index.diagnostics.push_back({Severity::Warning, "no_sessions",
                                 fmt::format("no sessions under '{}'", sessions_dir.string()),
                                 {}});

  for (const auto& id : session_ids) {
    SessionRecord session;
    session.id = id;
    fs::path dir = sessions_dir / id;
    auto where = fmt::format("session '{}'", id);

    for (const auto& [file, format] :
         {std::pair{"annotations.itx", tiers::DocumentFormat::Interchange},
          std::pair{"annotations.eaf", tiers::DocumentFormat::EafSubset}}) {
      auto bytes = read_file(dir / file);
      if (!bytes) continue;
      try {
        session.document = tiers::import_annotation_document(*bytes, format, id);
      } catch (const std::exception& err) {
        index.diagnostics.push_back({Severity::Error, "bad_annotations",
                                     fmt::format("{}: {}", file, err.what()), where});
      }
      break;
    }
    if (!session.document)
      index.diagnostics.push_back(
          {Severity::Warning, "no_annotations", "session has no readable annotation document",
           where});

    if (auto text = read_file(dir / "transcript.txt")) {
      try {
        session.transcript_data = transcript::parse_transcript(*text);
      } catch (const std::exception& err) {
        index.diagnostics.push_back({Severity::Error, "bad_transcript",
                                     fmt::format("transcript.txt: {}", err.what()), where});
      }
    }
    index.sessions.emplace(id, std::move(session));
  }

  // Clips load after sessions so cross-references resolve.
  for (const auto& id : session_ids)
    if (auto text = read_file(sessions_dir / id / "clips.tsv"))
      load_clips(*text, id, index.registry, index);

  return index;
}

std::vector<ClipMatch> query_clips(const CorpusIndex& index, const std::string& pattern) {
  auto query = labels::parse_label_query(pattern, index.registry);
  std::vector<ClipMatch> out;
  for (const auto& clip : index.clips) {
    auto result = labels::match_label_query(clip.label_string, query);
    if (result.matched) out.push_back({&clip, std::move(result.spans)});
  }
  return out;
}

std::map<std::string, std::vector<int64_t>> response_latencies(const seq::ThreadLedger& ledger) {
  // End of the opener's turn: the last main event by the same producer
  // reachable through gaps below the turn-gap threshold.
  auto turn_end = [&](int event_index) {
    int64_t end = ledger.events[static_cast<size_t>(event_index)].end_ms;
    const auto* prev = &ledger.events[static_cast<size_t>(event_index)];
    for (size_t i = static_cast<size_t>(event_index) + 1; i < ledger.events.size(); ++i) {
      const auto& e = ledger.events[i];
      if (e.framework != seq::Framework::Main) continue;
      if (e.producer != prev->producer || e.start_ms - prev->end_ms >= seq::kTurnGapMs) break;
      end = std::max(end, e.end_ms);
      prev = &e;
    }
    return end;
  };

  std::map<std::string, std::vector<int64_t>> out;
  for (const auto& p : ledger.projections) {
    if (p.status != seq::Projection::Status::Satisfied || p.is_repair) continue;
    if (p.satisfied_by < 0 || p.opened_by < 0) continue;
    const auto& satisfier = ledger.events[static_cast<size_t>(p.satisfied_by)];
    if (satisfier.framework != seq::Framework::Main) continue;
    int64_t latency = satisfier.start_ms - turn_end(p.opened_by);
    out[satisfier.category].push_back(std::max<int64_t>(latency, 0));
  }
  return out;
}

namespace {

const char* silence_bucket(int64_t ms) {
  if (ms < 500) return "200-499ms";
  if (ms < 1000) return "500-999ms";
  if (ms < 2000) return "1000-1999ms";
  if (ms < 5000) return "2000-4999ms";
  return ">=5000ms";
}

}  // namespace

StatsReport compute_stats(const CorpusIndex& index, const StatsOptions& options) {
  StatsReport report;
  for (const auto& clip : index.clips) {
    for (const auto& tok : clip.label_string.tokens) {
      if (tok.kind == labels::LabelToken::Kind::Plain) {
        ++report.tag_counts[tok.name];
      } else {
        ++report.tag_counts[tok.base];
        ++report.direction_counts[fmt::format("{}->{}", labels::party_code(tok.transmitter),
                                              labels::party_code(tok.recipient))];
      }
    }
  }

  for (const auto& [id, session] : index.sessions) {
    if (options.include_silences && session.transcript_data) {
      for (const auto& e : session.transcript_data->events)
        if (e.kind == transcript::TranscriptEvent::Kind::Silence && e.duration_ms)
          ++report.silence_histogram[silence_bucket(*e.duration_ms)];
    }
    if (options.include_latencies && session.document) {
      bool has_threads = false;
      for (const auto& tier : session.document->tiers)
        if (tier.kind == tiers::TierKind::Sequential || tier.kind == tiers::TierKind::Byplay)
          has_threads = true;
      if (!has_threads) continue;
      try {
        auto input = seq::import_from_tiers(*session.document, index.categories);
        auto ledger = seq::replay(index.categories, input);
        if (options.include_silences)
          for (const auto& s : ledger.silences)
            ++report.silence_histogram[silence_bucket(s.span.end_ms - s.span.start_ms)];
        for (const auto& [category, values] : response_latencies(ledger)) {
          auto& summary = report.latency_by_category[category];
          for (int64_t v : values) {
            if (summary.count == 0 || v < summary.min_ms) summary.min_ms = v;
            if (summary.count == 0 || v > summary.max_ms) summary.max_ms = v;
            summary.total_ms += v;
            ++summary.count;
          }
        }
      } catch (const std::exception& err) {
        report.diagnostics.push_back({Severity::Warning, "replay_failed",
                                      fmt::format("session '{}': {}", id, err.what()),
                                      fmt::format("session '{}'", id)});
      }
    }
  }
  return report;
}

std::string emit_cutlist(const CorpusIndex& index, const CutlistOptions& options) {
  std::vector<const ClipRecord*> selected;
  if (options.pattern) {
    for (const auto& match : query_clips(index, *options.pattern)) selected.push_back(match.clip);
  } else if (!options.clip_ids.empty()) {
    std::set<std::string> wanted(options.clip_ids.begin(), options.clip_ids.end());
    for (const auto& clip : index.clips)
      if (wanted.count(clip.clip_id)) selected.push_back(&clip);
  } else {
    for (const auto& clip : index.clips) selected.push_back(&clip);
  }
  std::sort(selected.begin(), selected.end(), [](const ClipRecord* a, const ClipRecord* b) {
    return std::tie(a->session_id, a->clip_id) < std::tie(b->session_id, b->clip_id);
  });

  std::string out = "clip_id\trecording\tstart_ms\tend_ms\tlabels\tnote\n";
  for (const auto* clip : selected) {
    auto labels_text = labels::serialize_label_sequence(clip->label_string);
    auto session = index.sessions.find(clip->session_id);
    if (session == index.sessions.end() || !session->second.document) {
      out += fmt::format("{}\tERROR\t-\t-\t{}\tsession has no annotation document\n",
                         clip->clip_id, escape_field(labels_text));
      continue;
    }
    tiers::SourceMapping mapping;
    try {
      mapping = tiers::map_to_source(*session->second.document,
                                     {clip->start_ms, clip->end_ms, {}});
    } catch (const std::exception& err) {
      out += fmt::format("{}\tERROR\t-\t-\t{}\t{}\n", clip->clip_id, escape_field(labels_text),
                         escape_field(err.what()));
      continue;
    }
    std::string note;
    for (const auto& d : mapping.diagnostics) note += (note.empty() ? "" : "; ") + d.code;
    for (const auto& range : mapping.ranges)
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", clip->clip_id, range.source_recording_id,
                         range.start_ms_in_source, range.end_ms_in_source,
                         escape_field(labels_text), note.empty() ? "-" : note);
    if (mapping.ranges.empty())
      out += fmt::format("{}\tERROR\t-\t-\t{}\tno alignment coverage\n", clip->clip_id,
                         escape_field(labels_text));
  }
  return out;
}

}  // namespace seqann::corpus
