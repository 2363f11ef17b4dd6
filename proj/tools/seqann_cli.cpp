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

#include <fmt/core.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqann/corpus.hpp"
#include "seqann/labels.hpp"
#include "seqann/sequence.hpp"
#include "seqann/sim.hpp"
#include "seqann/strings.hpp"
#include "seqann/tiers.hpp"
#include "seqann/transcript.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seqann;

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Output {
  bool structured = false;
  std::string out_path;
  std::ostringstream buffer;
  int findings = 0;

  void line(const std::string& human, const json& record) {
    if (structured) buffer << record.dump() << "\n";
    else buffer << human << "\n";
  }

  void raw(const std::string& bytes) { buffer << bytes; }

  void diagnostic(const Diagnostic& d) {
    ++findings;
    line(fmt::format("{}: {} [{}]{}", severity_name(d.severity), d.message, d.code,
                     d.location.empty() ? "" : " at " + d.location),
         json{{"record", "diagnostic"},
              {"severity", severity_name(d.severity)},
              {"code", d.code},
              {"message", d.message},
              {"location", d.location}});
  }

  void diagnostics(const std::vector<Diagnostic>& ds) {
    for (const auto& d : ds) diagnostic(d);
  }

  int flush() {
    if (out_path.empty() || out_path == "-") {
      std::cout << buffer.str();
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw IoError(fmt::format("cannot write '{}'", out_path));
      out << buffer.str();
    }
    return findings ? 1 : 0;
  }
};

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

labels::TagRegistry load_registry(const std::string& path) {
  if (path.empty()) return labels::TagRegistry::defaults();
  return labels::TagRegistry::load(read_input(path));
}

seq::CategoryRegistry load_categories(const std::string& path) {
  if (path.empty()) return seq::CategoryRegistry::defaults();
  return seq::CategoryRegistry::load(read_input(path));
}

tiers::DocumentFormat parse_format(const std::string& name, const std::string& path) {
  if (name == "eaf-subset") return tiers::DocumentFormat::EafSubset;
  if (name == "interchange") return tiers::DocumentFormat::Interchange;
  if (!name.empty()) throw IoError(fmt::format("unknown format '{}'", name));
  if (path.size() > 4 && path.substr(path.size() - 4) == ".eaf")
    return tiers::DocumentFormat::EafSubset;
  return tiers::DocumentFormat::Interchange;
}

json token_record(const labels::LabelToken& tok, size_t index) {
  json j{{"record", "token"}, {"index", index}, {"text", tok.text()}};
  if (tok.kind == labels::LabelToken::Kind::Directed) {
    j["kind"] = "directed";
    j["transmitter"] = std::string(1, labels::party_code(tok.transmitter));
    j["recipient"] = std::string(1, labels::party_code(tok.recipient));
    j["base"] = tok.base;
    if (tok.pair_part) j["pair_part"] = tok.pair_part;
  } else {
    j["kind"] = "plain";
    j["name"] = tok.name;
    j["known"] = tok.known;
  }
  return j;
}

std::string token_human(const labels::LabelToken& tok) {
  if (tok.kind == labels::LabelToken::Kind::Plain)
    return fmt::format("plain    {}{}", tok.name, tok.known ? "" : " (unknown)");
  return fmt::format("directed {} -> {}  {}{}", labels::party_code(tok.transmitter),
                     labels::party_code(tok.recipient), tok.base,
                     tok.pair_part ? fmt::format(" (part {})", tok.pair_part) : "");
}

std::vector<std::string> label_lines(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& line : split_lines(text))
    if (!trim(line).empty() && trim(line)[0] != '#') out.emplace_back(trim(line));
  if (out.empty()) out.emplace_back("");
  return out;
}

void print_ledger(Output& out, const seq::ThreadLedger& ledger) {
  if (!out.structured) {
    out.raw(seq::serialize_ledger(ledger));
    return;
  }
  for (const auto& p : ledger.projections) {
    json j{{"record", "projection"},
           {"id", p.id},
           {"thread", fmt::format("{}:{}", seq::framework_name(p.thread.family),
                                  p.thread.label())},
           {"rank", p.family_rank},
           {"kind", p.is_repair ? "repair" : "wait"},
           {"awaited", p.awaited},
           {"open_ms", p.open_ms},
           {"delays", p.delays.size()}};
    switch (p.status) {
      case seq::Projection::Status::Open: j["status"] = "open"; break;
      case seq::Projection::Status::Satisfied:
        j["status"] = "satisfied";
        j["satisfied_by"] = p.satisfied_by;
        j["close_ms"] = p.close_ms;
        break;
      case seq::Projection::Status::Abandoned:
        j["status"] = "abandoned";
        j["reason"] = p.abandon_reason;
        j["close_ms"] = p.close_ms;
        break;
    }
    if (p.is_repair) j["targets"] = p.repair_targets;
    out.line("", j);
  }
  for (const auto& s : ledger.silences) {
    json awaiting = json::array();
    for (const auto& [thread, cats] : s.awaiting)
      awaiting.push_back({{"thread", thread}, {"awaited", cats}});
    out.line("", json{{"record", "silence"},
                      {"start_ms", s.span.start_ms},
                      {"end_ms", s.span.end_ms},
                      {"class", s.lapse ? "lapse" : "response_gap"},
                      {"awaiting", awaiting}});
  }
}

seq::ThreadLedger replay_document(const std::string& input_path, const std::string& format,
                                  const std::string& registry_path) {
  auto doc = tiers::import_annotation_document(read_input(input_path),
                                               parse_format(format, input_path),
                                               fs::path(input_path).stem().string());
  auto categories = load_categories(registry_path);
  auto input = seq::import_from_tiers(doc, categories);
  return seq::replay(categories, input);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conversation-analytic sequential annotation toolkit"};
  app.require_subcommand(1);

  std::string registry_path, out_path, format, pattern, input_path;
  bool structured = false;
  app.add_option("--registry", registry_path, "tag/category registry config file");
  app.add_flag("--structured", structured, "emit line-delimited JSON records");
  app.add_option("--out", out_path, "write output to this path instead of stdout");

  // labels ------------------------------------------------------------------
  auto* labels_cmd = app.add_subcommand("labels", "shortclip label strings");
  auto* labels_parse = labels_cmd->add_subcommand("parse", "parse label strings");
  labels_parse->add_option("input", input_path, "file with one label string per line, or -")
      ->required();
  auto* labels_lint = labels_cmd->add_subcommand("lint", "lint label strings");
  labels_lint->add_option("input", input_path)->required();
  auto* labels_query = labels_cmd->add_subcommand("query", "match a pattern against label strings");
  labels_query->add_option("input", input_path)->required();
  labels_query->add_option("--pattern", pattern, "query pattern")->required();

  // transcript --------------------------------------------------------------
  auto* transcript_cmd = app.add_subcommand("transcript", "simplified transcript conventions");
  auto* transcript_parse = transcript_cmd->add_subcommand("parse", "parse a transcript");
  transcript_parse->add_option("input", input_path)->required();
  int gap_from = 0, gap_to = 0;
  auto* transcript_gap = transcript_cmd->add_subcommand("gap", "measured silence between lines");
  transcript_gap->add_option("input", input_path)->required();
  transcript_gap->add_option("--from", gap_from, "first line number")->required();
  transcript_gap->add_option("--to", gap_to, "second line number")->required();

  // annot ---------------------------------------------------------------
  auto* annot_cmd = app.add_subcommand("annot", "time-aligned annotation documents");
  auto* annot_import = annot_cmd->add_subcommand("import", "import and summarize a document");
  annot_import->add_option("input", input_path)->required();
  annot_import->add_option("--format", format, "eaf-subset|interchange");
  auto* annot_validate = annot_cmd->add_subcommand("validate", "validate tier invariants");
  annot_validate->add_option("input", input_path)->required();
  annot_validate->add_option("--format", format, "eaf-subset|interchange");
  auto* annot_export = annot_cmd->add_subcommand("export", "re-export as canonical interchange");
  annot_export->add_option("input", input_path)->required();
  annot_export->add_option("--format", format, "eaf-subset|interchange");
  int64_t map_start = 0, map_end = 0;
  auto* annot_map = annot_cmd->add_subcommand("map", "map a timeline range to source recordings");
  annot_map->add_option("input", input_path)->required();
  annot_map->add_option("--format", format, "eaf-subset|interchange");
  annot_map->add_option("--start", map_start, "range start (ms)")->required();
  annot_map->add_option("--end", map_end, "range end (ms)")->required();

  // seq -----------------------------------------------------------------
  auto* seq_cmd = app.add_subcommand("seq", "sequential-projection ledgers");
  auto* seq_replay = seq_cmd->add_subcommand("replay", "replay a document's events");
  seq_replay->add_option("input", input_path)->required();
  seq_replay->add_option("--format", format, "eaf-subset|interchange");
  auto* seq_lint = seq_cmd->add_subcommand("lint", "replay and report diagnostics");
  seq_lint->add_option("input", input_path)->required();
  seq_lint->add_option("--format", format, "eaf-subset|interchange");
  auto* seq_stacking = seq_cmd->add_subcommand("stacking", "stacking-structure string");
  seq_stacking->add_option("input", input_path)->required();
  seq_stacking->add_option("--format", format, "eaf-subset|interchange");

  // corpus --------------------------------------------------------------
  std::string corpus_root, clip_ids;
  auto* corpus_cmd = app.add_subcommand("corpus", "corpus indexing and statistics");
  auto* corpus_index = corpus_cmd->add_subcommand("index", "build and summarize the index");
  corpus_index->add_option("root", corpus_root)->required();
  auto* corpus_query = corpus_cmd->add_subcommand("query", "search clips by label pattern");
  corpus_query->add_option("root", corpus_root)->required();
  corpus_query->add_option("--pattern", pattern)->required();
  auto* corpus_stats = corpus_cmd->add_subcommand("stats", "descriptive statistics");
  corpus_stats->add_option("root", corpus_root)->required();
  auto* corpus_cutlist = corpus_cmd->add_subcommand("cutlist", "clip-extraction manifest");
  corpus_cutlist->add_option("root", corpus_root)->required();
  corpus_cutlist->add_option("--pattern", pattern, "select clips by label query");
  corpus_cutlist->add_option("--clips", clip_ids, "comma-separated clip ids");

  // sim -----------------------------------------------------------------
  std::string machine_path, script_path, session_id = "sim001";
  int64_t delay_ms = 600;
  auto* sim_cmd = app.add_subcommand("sim", "keyword-rule dialogue machine");
  auto* sim_check = sim_cmd->add_subcommand("check", "validate a machine config");
  sim_check->add_option("machine", machine_path)->required();
  auto* sim_run = sim_cmd->add_subcommand("run", "simulate a script");
  sim_run->add_option("machine", machine_path)->required();
  sim_run->add_option("script", script_path)->required();
  sim_run->add_option("--delay", delay_ms, "robot response delay (ms)");
  auto* sim_gen = sim_cmd->add_subcommand("gen", "generate an annotated corpus session");
  sim_gen->add_option("machine", machine_path)->required();
  sim_gen->add_option("script", script_path)->required();
  sim_gen->add_option("--session", session_id, "session id");
  sim_gen->add_option("--delay", delay_ms, "robot response delay (ms)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  Output out;
  out.structured = structured;
  out.out_path = out_path;

  try {
    if (labels_parse->parsed() || labels_lint->parsed() || labels_query->parsed()) {
      auto registry = load_registry(registry_path);
      for (const auto& line : label_lines(read_input(input_path))) {
        auto parsed = labels::parse_label_string(line, registry);
        if (labels_parse->parsed()) {
          for (size_t i = 0; i < parsed.sequence.tokens.size(); ++i)
            out.line(token_human(parsed.sequence.tokens[i]),
                     token_record(parsed.sequence.tokens[i], i));
          out.line(fmt::format("{} tokens", parsed.sequence.tokens.size()),
                   json{{"record", "summary"}, {"tokens", parsed.sequence.tokens.size()}});
          out.diagnostics(parsed.diagnostics);
        } else if (labels_lint->parsed()) {
          out.diagnostics(labels::lint_labels(parsed.sequence, registry));
        } else {
          auto match = labels::match_label_query(parsed.sequence, pattern, registry);
          out.line(fmt::format("{}  spans=[{}]", match.matched ? "match" : "no-match",
                               fmt::format("{}", fmt::join(match.spans, ","))),
                   json{{"record", "match"}, {"matched", match.matched}, {"spans", match.spans}});
        }
      }
    } else if (transcript_parse->parsed()) {
      auto t = transcript::parse_transcript(read_input(input_path));
      for (const auto& e : t.events) {
        switch (e.kind) {
          case transcript::TranscriptEvent::Kind::Turn: {
            std::string words;
            json items = json::array();
            for (const auto& item : e.items) {
              if (item.micro) {
                words += "(.) ";
                items.push_back({{"micro", true}});
              } else {
                words += item.text + " ";
                items.push_back({{"text", item.text},
                                 {"prolongation", item.prolongation},
                                 {"rising", item.rising}});
              }
            }
            out.line(fmt::format("{:>4} turn      {}: {}", e.line_no, e.speaker.value_or("?"),
                                 words),
                     json{{"record", "turn"},
                          {"line", e.line_no},
                          {"speaker", e.speaker.value_or("")},
                          {"items", items}});
            break;
          }
          case transcript::TranscriptEvent::Kind::Silence:
            out.line(fmt::format("{:>4} silence   {}", e.line_no,
                                 e.micro ? "micro (<200ms)"
                                         : fmt::format("{} ms", *e.duration_ms)),
                     json{{"record", "silence"},
                          {"line", e.line_no},
                          {"micro", e.micro},
                          {"duration_ms", e.micro ? json() : json(*e.duration_ms)}});
            break;
          case transcript::TranscriptEvent::Kind::Nonverbal:
            out.line(fmt::format("{:>4} nonverbal {}", e.line_no, e.description),
                     json{{"record", "nonverbal"},
                          {"line", e.line_no},
                          {"speaker", e.speaker.value_or("")},
                          {"description", e.description}});
            break;
        }
      }
    } else if (transcript_gap->parsed()) {
      auto t = transcript::parse_transcript(read_input(input_path));
      auto gap = transcript::measured_gap(t, gap_from, gap_to);
      out.line(fmt::format("{} ms ({})", gap.duration_ms,
                           gap.complete ? "complete" : "lower bound"),
               json{{"record", "gap"},
                    {"from", gap_from},
                    {"to", gap_to},
                    {"duration_ms", gap.duration_ms},
                    {"complete", gap.complete}});
    } else if (annot_import->parsed() || annot_validate->parsed() || annot_export->parsed() ||
               annot_map->parsed()) {
      auto doc = tiers::import_annotation_document(read_input(input_path),
                                                   parse_format(format, input_path),
                                                   fs::path(input_path).stem().string());
      if (annot_export->parsed()) {
        out.raw(tiers::export_interchange(doc));
      } else if (annot_map->parsed()) {
        auto mapping = tiers::map_to_source(doc, {map_start, map_end, {}});
        for (const auto& r : mapping.ranges)
          out.line(fmt::format("{}\t{}\t{}", r.source_recording_id, r.start_ms_in_source,
                               r.end_ms_in_source),
                   json{{"record", "source_range"},
                        {"recording", r.source_recording_id},
                        {"start_ms", r.start_ms_in_source},
                        {"end_ms", r.end_ms_in_source}});
        out.diagnostics(mapping.diagnostics);
      } else {
        if (annot_import->parsed()) {
          out.line(fmt::format("session {}  timeline {} ms  {} tiers", doc.session_id,
                               doc.timeline_duration_ms, doc.tiers.size()),
                   json{{"record", "document"},
                        {"session", doc.session_id},
                        {"timeline_ms", doc.timeline_duration_ms},
                        {"tiers", doc.tiers.size()}});
          for (const auto& tier : doc.tiers)
            out.line(fmt::format("  {} [{}] {} segments{}", tier.name,
                                 tiers::tier_kind_name(tier.kind), tier.segments.size(),
                                 tier.participant ? " participant=" + *tier.participant : ""),
                     json{{"record", "tier"},
                          {"name", tier.name},
                          {"kind", tiers::tier_kind_name(tier.kind)},
                          {"segments", tier.segments.size()},
                          {"participant", tier.participant.value_or("")}});
        }
        out.diagnostics(tiers::validate_tiers(doc));
      }
    } else if (seq_replay->parsed() || seq_lint->parsed() || seq_stacking->parsed()) {
      auto ledger = replay_document(input_path, format, registry_path);
      if (seq_stacking->parsed()) {
        out.line(seq::stacking_string(ledger),
                 json{{"record", "stacking"}, {"value", seq::stacking_string(ledger)}});
      } else if (seq_lint->parsed()) {
        out.diagnostics(ledger.diagnostics);
      } else {
        print_ledger(out, ledger);
        out.diagnostics(ledger.diagnostics);
      }
    } else if (corpus_index->parsed() || corpus_query->parsed() || corpus_stats->parsed() ||
               corpus_cutlist->parsed()) {
      if (!registry_path.empty())
        throw IoError("--registry is not used here; put registry.conf in the corpus root");
      auto index = corpus::build_index(corpus_root);
      if (corpus_index->parsed()) {
        out.line(fmt::format("{} sessions, {} clips", index.sessions.size(), index.clips.size()),
                 json{{"record", "index"},
                      {"sessions", index.sessions.size()},
                      {"clips", index.clips.size()}});
        for (const auto& clip : index.clips)
          out.line(fmt::format("  {} [{} {}..{}] {}", clip.clip_id, clip.session_id,
                               clip.start_ms, clip.end_ms,
                               labels::serialize_label_sequence(clip.label_string)),
                   json{{"record", "clip"},
                        {"clip_id", clip.clip_id},
                        {"session", clip.session_id},
                        {"start_ms", clip.start_ms},
                        {"end_ms", clip.end_ms},
                        {"labels", labels::serialize_label_sequence(clip.label_string)}});
        out.diagnostics(index.diagnostics);
      } else if (corpus_query->parsed()) {
        for (const auto& match : corpus::query_clips(index, pattern))
          out.line(fmt::format("{} [{}] spans=[{}]", match.clip->clip_id, match.clip->session_id,
                               fmt::format("{}", fmt::join(match.spans, ","))),
                   json{{"record", "match"},
                        {"clip_id", match.clip->clip_id},
                        {"session", match.clip->session_id},
                        {"spans", match.spans}});
      } else if (corpus_stats->parsed()) {
        auto report = corpus::compute_stats(index);
        for (const auto& [tag, count] : report.tag_counts)
          out.line(fmt::format("tag {} {}", tag, count),
                   json{{"record", "tag_count"}, {"tag", tag}, {"count", count}});
        for (const auto& [direction, count] : report.direction_counts)
          out.line(fmt::format("direction {} {}", direction, count),
                   json{{"record", "direction_count"}, {"direction", direction}, {"count", count}});
        for (const auto& [bucket, count] : report.silence_histogram)
          out.line(fmt::format("silence {} {}", bucket, count),
                   json{{"record", "silence_bucket"}, {"bucket", bucket}, {"count", count}});
        for (const auto& [category, summary] : report.latency_by_category)
          out.line(fmt::format("latency {} count={} min={} max={} mean={}", category,
                               summary.count, summary.min_ms, summary.max_ms,
                               summary.count ? summary.total_ms / summary.count : 0),
                   json{{"record", "latency"},
                        {"category", category},
                        {"count", summary.count},
                        {"min_ms", summary.min_ms},
                        {"max_ms", summary.max_ms},
                        {"total_ms", summary.total_ms}});
        out.diagnostics(report.diagnostics);
      } else {
        corpus::CutlistOptions options;
        if (!pattern.empty()) options.pattern = pattern;
        if (!clip_ids.empty()) options.clip_ids = split(clip_ids, ',');
        out.raw(corpus::emit_cutlist(index, options));
      }
    } else if (sim_check->parsed()) {
      sim::load_machine(read_input(machine_path));
      out.line("machine ok", json{{"record", "check"}, {"ok", true}});
    } else if (sim_run->parsed()) {
      auto machine = sim::load_machine(read_input(machine_path));
      auto script = sim::load_script(read_input(script_path));
      sim::SimOptions options;
      options.response_delay_ms = delay_ms;
      auto log = sim::simulate(machine, script, options);
      for (const auto& e : log.events) {
        const char* who = e.speaker == sim::SimEvent::Speaker::Robot
                              ? "robot"
                              : (e.speaker == sim::SimEvent::Speaker::User ? "user" : "-");
        if (e.kind == sim::SimEvent::Kind::Silence)
          out.line(fmt::format("{:>7}..{:<7} silence", e.start_ms, e.end_ms),
                   json{{"record", "silence"}, {"start_ms", e.start_ms}, {"end_ms", e.end_ms}});
        else
          out.line(fmt::format("{:>7}..{:<7} {:>5} [{}] {}", e.start_ms, e.end_ms, who,
                               e.category, e.text),
                   json{{"record", "utterance"},
                        {"speaker", who},
                        {"category", e.category},
                        {"text", e.text},
                        {"start_ms", e.start_ms},
                        {"end_ms", e.end_ms},
                        {"fallback", e.via_fallback}});
      }
      auto annotated = sim::annotate_log(log, machine, load_registry(registry_path));
      out.line(fmt::format("labels: {}", annotated.label_string),
               json{{"record", "labels"}, {"value", annotated.label_string}});
    } else if (sim_gen->parsed()) {
      if (out_path.empty()) throw IoError("sim gen requires --out <corpus root dir>");
      auto machine = sim::load_machine(read_input(machine_path));
      auto script = sim::load_script(read_input(script_path));
      sim::SimOptions options;
      options.response_delay_ms = delay_ms;
      auto files = sim::generate_session(machine, script, session_id, options);
      for (const auto& [rel, bytes] : files) {
        fs::path target = fs::path(out_path) / rel;
        fs::create_directories(target.parent_path());
        std::ofstream f(target, std::ios::binary);
        if (!f) throw IoError(fmt::format("cannot write '{}'", target.string()));
        f << bytes;
        std::cerr << fmt::format("wrote {}\n", target.string());
      }
      return 0;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    return out.flush();
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
