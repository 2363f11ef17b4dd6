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

#include "seqann/sequence.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cctype>
#include <functional>

#include "seqann/strings.hpp"

namespace seqann::seq {

CategoryRegistry CategoryRegistry::defaults() {
  CategoryRegistry reg;
  reg.categories = {"greeting1", "greeting2", "offer",    "acceptance",     "rejection",
                    "request",   "question",  "answer",   "proposal",       "howareyou",
                    "repair_init", "repair_account", "laughter", "closing1", "closing2"};
  reg.groups["offer_response"] = {"acceptance", "rejection", "request", "question"};
  return reg;
}

CategoryRegistry CategoryRegistry::load(const std::string& text) {
  CategoryRegistry reg = defaults();
  std::string section;
  int line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    if (section == "categories") {
      reg.categories.insert(std::string(line));
    } else if (section == "groups") {
      auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ParseError("group line must be 'name = member ...'",
                         fmt::format("line {}", line_no));
      std::string name(trim(line.substr(0, eq)));
      auto& members = reg.groups[name];
      for (const auto& m : split_ws(line.substr(eq + 1))) members.insert(m);
    }
  }
  return reg;
}

bool CategoryRegistry::known(const std::string& name) const {
  return categories.count(name) || groups.count(name);
}

bool CategoryRegistry::satisfies(const std::string& cat,
                                 const std::vector<std::string>& awaited) const {
  for (const auto& a : awaited) {
    if (a == cat) return true;
    auto group = groups.find(a);
    if (group != groups.end() && group->second.count(cat)) return true;
  }
  return false;
}

std::string thread_label(int ordinal) {
  // Bijective base-26: A..Z, AA, AB, ...
  std::string out;
  int n = ordinal + 1;
  while (n > 0) {
    int rem = (n - 1) % 26;
    out.insert(out.begin(), static_cast<char>('A' + rem));
    n = (n - 1) / 26;
  }
  return out;
}

int thread_ordinal(const std::string& label) {
  if (label.empty()) throw ParseError("empty thread label");
  long n = 0;
  for (char c : label) {
    if (c < 'A' || c > 'Z') throw ParseError(fmt::format("malformed thread label '{}'", label));
    n = n * 26 + (c - 'A' + 1);
  }
  return static_cast<int>(n - 1);
}

int64_t step_time(const ReplayStep& s) {
  if (const auto* e = std::get_if<ActionEvent>(&s)) return e->start_ms;
  if (const auto* n = std::get_if<NarrowOp>(&s)) return n->at_ms;
  return std::get<AbandonOp>(s).at_ms;
}

const char* effect_kind_name(Effect::Kind k) {
  switch (k) {
    case Effect::Kind::Opened: return "opened";
    case Effect::Kind::Satisfied: return "satisfied";
    case Effect::Kind::RepairResolved: return "repair_resolved";
    case Effect::Kind::Delayed: return "delayed";
    case Effect::Kind::Abandoned: return "abandoned";
    case Effect::Kind::Narrowed: return "narrowed";
    case Effect::Kind::Unattached: return "unattached";
  }
  return "?";
}

const Projection* ThreadLedger::find_open(ThreadRef t) const {
  const auto& family = t.family == Framework::Main ? main_threads : byplay_threads;
  for (const auto& thread : family) {
    if (thread.ref.ordinal != t.ordinal) continue;
    for (int id : thread.projection_ids)
      if (projection(id).open()) return &projection(id);
  }
  return nullptr;
}

Projection& ThreadLedger::projection(int id) { return projections.at(static_cast<size_t>(id - 1)); }

const Projection& ThreadLedger::projection(int id) const {
  return projections.at(static_cast<size_t>(id - 1));
}

ThreadRef ThreadLedger::allocate_thread(Framework family) {
  auto& threads = family == Framework::Main ? main_threads : byplay_threads;
  for (const auto& thread : threads)
    if (!find_open(thread.ref)) return thread.ref;
  ThreadState fresh;
  fresh.ref = ThreadRef{family, static_cast<int>(threads.size())};
  threads.push_back(fresh);
  return threads.back().ref;
}

namespace {

// Import hook: offers the awaited set recorded at (thread, open_ms), if any.
// `repair` asks for a repair() placeholder instead of a wait(...) set.
using WaitSource =
    std::function<std::optional<std::vector<std::string>>(ThreadRef, int64_t, bool repair)>;

std::vector<std::string> awaited_at(const Projection& p, int64_t t) {
  std::vector<std::string> awaited = p.original_awaited;
  for (const auto& n : p.narrows)
    if (n.at_ms <= t) awaited = n.awaited;
  return awaited;
}

void check_reason(const std::string& reason) {
  if (reason.find('(') != std::string::npos || reason.find(')') != std::string::npos)
    throw UsageError(fmt::format("abandon reason '{}' must not contain parentheses", reason));
}

}  // namespace

namespace detail {

struct Applier {
  ThreadLedger& led;

  void check_time(int64_t t, const char* what) {
    if (t < led.last_time)
      throw UsageError(fmt::format("{} at {} precedes already-applied step at {}", what, t,
                                   led.last_time));
    led.last_time = t;
  }

  Projection& open_projection(Framework family, int opener, int64_t open_ms,
                              std::vector<std::string> awaited, bool repair,
                              std::vector<int> targets) {
    ThreadRef thread = led.allocate_thread(family);
    Projection p;
    p.id = static_cast<int>(led.projections.size()) + 1;
    int rank = 0;
    for (const auto& q : led.projections)
      if (q.thread.family == family) ++rank;
    p.family_rank = rank + 1;
    p.thread = thread;
    p.opened_by = opener;
    p.original_awaited = awaited;
    p.awaited = std::move(awaited);
    p.is_repair = repair;
    p.repair_targets = std::move(targets);
    p.open_ms = open_ms;
    p.open_step = led.next_step++;
    led.projections.push_back(std::move(p));
    auto& threads = family == Framework::Main ? led.main_threads : led.byplay_threads;
    threads[static_cast<size_t>(thread.ordinal)].projection_ids.push_back(
        static_cast<int>(led.projections.size()));
    auto& back = led.projections.back();
    led.effects.push_back({Effect::Kind::Opened, back.open_step, open_ms, back.id, opener,
                           fmt::format("thread {}:{}", framework_name(family), thread.label())});
    return back;
  }

  void satisfy(Projection& p, int event_index, int64_t at_ms, Effect::Kind kind) {
    p.status = Projection::Status::Satisfied;
    p.satisfied_by = event_index;
    p.close_ms = std::max(at_ms, p.open_ms);
    p.close_step = led.next_step++;
    led.effects.push_back({kind, p.close_step, at_ms, p.id, event_index, {}});
    // A completed target completes the repairs that were waiting on it.
    for (auto& q : led.projections) {
      if (!q.open() || !q.is_repair || q.thread.family != p.thread.family) continue;
      if (std::find(q.repair_targets.begin(), q.repair_targets.end(), p.id) !=
          q.repair_targets.end())
        satisfy(q, event_index, at_ms, Effect::Kind::RepairResolved);
    }
  }

  void apply(const ActionEvent& e) {
    if (e.start_ms >= e.end_ms)
      throw UsageError(fmt::format("event span [{},{}) is empty", e.start_ms, e.end_ms));
    if (e.producer.empty()) throw UsageError("event has no producer");
    check_time(e.start_ms, "event");
    led.events.push_back(e);
    int ei = static_cast<int>(led.events.size()) - 1;

    if (!led.registry.known(e.category))
      led.diagnostics.push_back({Severity::Warning, "unknown_category",
                                 fmt::format("category '{}' not in registry", e.category),
                                 fmt::format("event {}", ei)});
    for (const auto& a : e.awaited_next)
      if (!led.registry.known(a))
        led.diagnostics.push_back({Severity::Warning, "unknown_category",
                                   fmt::format("awaited category '{}' not in registry", a),
                                   fmt::format("event {}", ei)});

    bool satisfied_something = false;
    bool opened_something = false;

    if (e.category == kRepairInit) {
      std::vector<int> targets;
      for (const auto& p : led.projections)
        if (p.open() && p.thread.family == e.framework) targets.push_back(p.id);
      if (!e.awaited_next.empty())
        led.diagnostics.push_back({Severity::Warning, "ignored_awaited",
                                   "repair_init opens a repair projection; awaited_next ignored",
                                   fmt::format("event {}", ei)});
      if (wait_source) (*wait_source)(led.allocate_thread(e.framework), e.end_ms, true);
      open_projection(e.framework, ei, e.end_ms, {kRepairAccount}, true, std::move(targets));
      opened_something = true;
    } else {
      // Oldest matching open projection of the event's own framework family.
      std::vector<int> matches;
      for (const auto& p : led.projections)
        if (p.open() && p.thread.family == e.framework &&
            led.registry.satisfies(e.category, p.awaited))
          matches.push_back(p.id);
      if (!matches.empty()) {
        if (matches.size() > 1) {
          std::string list;
          for (int id : matches) list += (list.empty() ? "" : ",") + std::to_string(id);
          led.diagnostics.push_back(
              {Severity::Warning, "ambiguous_satisfaction",
               fmt::format("event {} ({}) matched projections {}; satisfying the oldest", ei,
                           e.category, list),
               fmt::format("event {}", ei)});
        }
        satisfy(led.projection(matches.front()), ei, e.start_ms, Effect::Kind::Satisfied);
        satisfied_something = true;
      }

      if (wait_source) {
        ThreadRef predicted = led.allocate_thread(e.framework);
        if (auto cats = (*wait_source)(predicted, e.end_ms, false)) {
          open_projection(e.framework, ei, e.end_ms, *cats, false, {});
          opened_something = true;
        }
      } else if (!e.awaited_next.empty()) {
        open_projection(e.framework, ei, e.end_ms, e.awaited_next, false, {});
        opened_something = true;
      }
    }

    if (e.framework == Framework::Byplay) {
      // Byplay activity accounts for delaying every pending main projection.
      for (auto& p : led.projections)
        if (p.open() && p.thread.family == Framework::Main) {
          p.delays.push_back(ei);
          led.effects.push_back(
              {Effect::Kind::Delayed, led.next_step++, e.start_ms, p.id, ei, {}});
        }
    }

    if (!satisfied_something && !opened_something)
      led.effects.push_back({Effect::Kind::Unattached, led.next_step++, e.start_ms, 0, ei,
                             "candidate new action"});
  }

  void apply(const NarrowOp& op) {
    check_time(op.at_ms, "narrow");
    const Projection* open = led.find_open(op.thread);
    if (!open)
      throw UsageError(fmt::format("narrow: no open projection on thread {}:{}",
                                   framework_name(op.thread.family), op.thread.label()));
    Projection& p = led.projection(open->id);
    if (p.is_repair) throw UsageError("narrow: repair projections have no awaited set to narrow");
    p.narrows.push_back({op.at_ms, op.new_awaited});
    p.awaited = op.new_awaited;
    led.effects.push_back({Effect::Kind::Narrowed, led.next_step++, op.at_ms, p.id, -1, {}});
  }

  void apply(const AbandonOp& op) {
    check_time(op.at_ms, "abandon");
    const Projection* open = led.find_open(op.thread);
    if (!open)
      throw UsageError(fmt::format("abandon: no open projection on thread {}:{}",
                                   framework_name(op.thread.family), op.thread.label()));
    abandon(led.projection(open->id), op.reason, op.at_ms);
  }

  void abandon(Projection& p, const std::string& reason, int64_t at_ms) {
    if (!p.open()) throw UsageError(fmt::format("projection {} is not open", p.id));
    check_reason(reason);
    p.status = Projection::Status::Abandoned;
    p.abandon_reason = reason;
    p.close_ms = std::max(at_ms, p.open_ms);
    p.close_step = led.next_step++;
    led.effects.push_back({Effect::Kind::Abandoned, p.close_step, at_ms, p.id, -1, reason});
  }

  const WaitSource* wait_source = nullptr;
};

}  // namespace detail

void ThreadLedger::apply(const ActionEvent& e) { detail::Applier{*this}.apply(e); }
void ThreadLedger::apply(const NarrowOp& op) { detail::Applier{*this}.apply(op); }
void ThreadLedger::apply(const AbandonOp& op) { detail::Applier{*this}.apply(op); }

void ThreadLedger::abandon_projection(int id, const std::string& reason, int64_t at_ms) {
  if (id < 1 || id > static_cast<int>(projections.size()))
    throw UsageError(fmt::format("no projection {}", id));
  detail::Applier{*this}.abandon(projection(id), reason, at_ms);
}

void ThreadLedger::apply(const ReplayStep& step) {
  std::visit([this](const auto& s) { this->apply(s); }, step);
}

void ThreadLedger::close_out(int64_t at_ms, const std::string& reason) {
  detail::Applier applier{*this};
  // Thread order (main A,B,... then byplay) so a re-import closes in the
  // same order as the original close-out.
  for (auto* family : {&main_threads, &byplay_threads})
    for (auto& thread : *family)
      for (int id : thread.projection_ids)
        if (projection(id).open()) applier.abandon(projection(id), reason, at_ms);
}

SilenceClass ThreadLedger::classify_silence(Span span) const {
  for (size_t i = 0; i < events.size(); ++i)
    if (events[i].start_ms < span.end_ms && span.start_ms < events[i].end_ms)
      throw UsageError(fmt::format("silence [{},{}) overlaps event {} [{},{})", span.start_ms,
                                   span.end_ms, i, events[i].start_ms, events[i].end_ms));
  SilenceClass out;
  out.span = span;
  std::vector<const Projection*> open_main;
  for (const auto& p : projections) {
    if (p.thread.family != Framework::Main) continue;
    int64_t close = p.open() ? INT64_MAX : p.close_ms;
    if (p.open_ms < span.end_ms && span.start_ms < close) open_main.push_back(&p);
  }
  std::sort(open_main.begin(), open_main.end(),
            [](const Projection* a, const Projection* b) {
              return a->thread.ordinal != b->thread.ordinal
                         ? a->thread.ordinal < b->thread.ordinal
                         : a->id < b->id;
            });
  for (const auto* p : open_main)
    out.awaiting.emplace_back(p->thread.label(), awaited_at(*p, span.start_ms));
  out.lapse = out.awaiting.empty();
  return out;
}

void ThreadLedger::finish() {
  for (const auto& p : projections)
    if (p.open())
      diagnostics.push_back({Severity::Warning, "unresolved_projection",
                             fmt::format("projection {} on thread {}:{} still open at end of clip",
                                         p.id, framework_name(p.thread.family), p.thread.label()),
                             fmt::format("projection {}", p.id)});
}

ThreadLedger replay(const CategoryRegistry& registry, const ReplayInput& input) {
  ThreadLedger ledger;
  ledger.registry = registry;
  int64_t prev = INT64_MIN;
  for (const auto& step : input.steps) {
    int64_t t = step_time(step);
    if (t < prev) throw UsageError(fmt::format("replay steps out of order at {}", t));
    prev = t;
  }
  for (const auto& step : input.steps) ledger.apply(step);
  if (input.close_out) {
    int64_t at = input.close_out_at_ms;
    if (at < 0) {
      at = 0;
      for (const auto& e : ledger.events) at = std::max(at, e.end_ms);
      at = std::max(at, ledger.last_time);
    }
    ledger.close_out(at);
  }
  for (const auto& span : input.silences) ledger.silences.push_back(ledger.classify_silence(span));
  ledger.finish();
  return ledger;
}

namespace {

std::string join(const std::vector<std::string>& v, char sep = ',') {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out.empty() ? "-" : out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out.empty() ? "-" : out;
}

}  // namespace

std::string serialize_ledger(const ThreadLedger& ledger) {
  std::string out = "ledger v1\n";
  out += fmt::format("events {}\n", ledger.events.size());
  for (size_t i = 0; i < ledger.events.size(); ++i) {
    const auto& e = ledger.events[i];
    out += fmt::format("e{} {} {} {} {} {} awaited={}\n", i, e.start_ms, e.end_ms,
                       escape_field(e.producer), framework_name(e.framework), e.category,
                       join(e.awaited_next));
  }
  out += fmt::format("projections {}\n", ledger.projections.size());
  for (const auto& p : ledger.projections) {
    std::string status;
    switch (p.status) {
      case Projection::Status::Open: status = "open"; break;
      case Projection::Status::Satisfied:
        status = fmt::format("satisfied:e{}@{}", p.satisfied_by, p.close_ms);
        break;
      case Projection::Status::Abandoned:
        status = fmt::format("abandoned:{}@{}", escape_field(p.abandon_reason), p.close_ms);
        break;
    }
    std::string narrows;
    for (const auto& n : p.narrows)
      narrows += fmt::format("{}{}:{}", narrows.empty() ? "" : ";", n.at_ms, join(n.awaited));
    out += fmt::format(
        "p{} thread={}:{} rank={} opener=e{} kind={} awaited={} original={} open_ms={} "
        "steps={}:{} status={} delays={} narrows={} targets={}\n",
        p.id, framework_name(p.thread.family), p.thread.label(), p.family_rank, p.opened_by,
        p.is_repair ? "repair" : "wait", join(p.awaited), join(p.original_awaited), p.open_ms,
        p.open_step, p.close_step, status, join_ints(p.delays),
        narrows.empty() ? "-" : narrows, join_ints(p.repair_targets));
  }
  out += fmt::format("silences {}\n", ledger.silences.size());
  for (const auto& s : ledger.silences) {
    if (s.lapse) {
      out += fmt::format("s {} {} lapse\n", s.span.start_ms, s.span.end_ms);
    } else {
      std::string awaiting;
      for (const auto& [thread, cats] : s.awaiting)
        awaiting += fmt::format("{}{}:{}", awaiting.empty() ? "" : ";", thread, join(cats, '|'));
      out += fmt::format("s {} {} gap {}\n", s.span.start_ms, s.span.end_ms, awaiting);
    }
  }
  out += fmt::format("effects {}\n", ledger.effects.size());
  for (const auto& f : ledger.effects)
    out += fmt::format("f{} {} @{} p{} e{} {}\n", f.step, effect_kind_name(f.kind), f.at_ms,
                       f.projection_id, f.event_index, escape_field(f.detail));
  out += fmt::format("diagnostics {}\n", ledger.diagnostics.size());
  for (const auto& d : ledger.diagnostics)
    out += fmt::format("d {} {} {} ({})\n", severity_name(d.severity), d.code,
                       escape_field(d.message), escape_field(d.location));
  return out;
}

std::string stacking_string(const ThreadLedger& ledger) {
  // Direct satisfactions / openings per event.
  std::map<int, int> satisfied_rank, opened_rank;
  for (const auto& f : ledger.effects) {
    if (f.kind == Effect::Kind::Satisfied && f.event_index >= 0)
      satisfied_rank.emplace(f.event_index, ledger.projection(f.projection_id).family_rank);
    if (f.kind == Effect::Kind::Opened && f.event_index >= 0)
      opened_rank.emplace(f.event_index, ledger.projection(f.projection_id).family_rank);
  }

  std::string out = "[";
  const ActionEvent* prev = nullptr;
  bool first = true;
  for (size_t i = 0; i < ledger.events.size(); ++i) {
    const auto& e = ledger.events[i];
    if (e.framework != Framework::Main) continue;
    bool same_turn =
        prev && prev->producer == e.producer && e.start_ms - prev->end_ms < kTurnGapMs;
    if (!first) out += same_turn ? "+" : "->";
    first = false;

    char initial = static_cast<char>(std::toupper(static_cast<unsigned char>(e.producer[0])));
    auto sat = satisfied_rank.find(static_cast<int>(i));
    auto opn = opened_rank.find(static_cast<int>(i));
    if (sat != satisfied_rank.end()) out += fmt::format("{}{}", initial, sat->second);
    else if (opn != opened_rank.end()) out += fmt::format("{}{}", initial, opn->second);
    else out += fmt::format("{}?", initial);
    prev = &e;
  }
  out += "]";
  return out;
}

// ---------------------------------------------------------------------------
// Tier representation.

namespace {

std::string thread_tier_name(ThreadRef t) {
  return fmt::format("{}@{}", t.family == Framework::Main ? "seqthread" : "byplay", t.label());
}

std::string render_silence_value(const SilenceClass& s) {
  if (s.lapse) return "lapse";
  std::string awaiting;
  for (const auto& [thread, cats] : s.awaiting)
    awaiting += fmt::format("{}{}:{}", awaiting.empty() ? "" : ";", thread, join(cats, '|'));
  return fmt::format("gap({})", awaiting);
}

struct ParsedCall {
  std::string head;
  std::vector<std::string> args;  // comma-separated, trimmed
};

// Parses "head(a,b,...)"; the value grammar is exact and case-sensitive.
std::optional<ParsedCall> parse_call(const std::string& value) {
  auto open = value.find('(');
  if (open == std::string::npos || value.back() != ')') return std::nullopt;
  ParsedCall call;
  call.head = value.substr(0, open);
  std::string inner = value.substr(open + 1, value.size() - open - 2);
  if (!trim(inner).empty())
    for (const auto& part : split(inner, ',')) call.args.emplace_back(trim(part));
  return call;
}

}  // namespace

tiers::AnnotationDocument export_to_tiers(const ThreadLedger& ledger,
                                          const std::string& session_id, int64_t timeline_ms) {
  int64_t last = 0;
  for (const auto& e : ledger.events) last = std::max(last, e.end_ms);
  for (const auto& p : ledger.projections) last = std::max({last, p.open_ms, p.close_ms});
  for (const auto& s : ledger.silences) last = std::max(last, s.span.end_ms);
  int64_t timeline = timeline_ms > 0 ? timeline_ms : last + 1000;
  if (timeline < last + 1)
    throw UsageError(fmt::format("timeline {} shorter than ledger content ({})", timeline, last));

  tiers::AnnotationDocument doc;
  doc.session_id = session_id;
  doc.timeline_duration_ms = timeline;

  for (const auto& p : ledger.projections) {
    auto& tier = doc.upsert_tier(thread_tier_name(p.thread));
    int64_t close = p.open() ? timeline : p.close_ms;
    std::vector<std::pair<int64_t, std::string>> chain;
    chain.emplace_back(p.open_ms,
                       p.is_repair ? "repair()" : fmt::format("wait({})",
                                                              join(p.original_awaited)));
    for (const auto& n : p.narrows)
      chain.emplace_back(n.at_ms, fmt::format("narrow({})", join(n.awaited)));
    for (size_t i = 0; i < chain.size(); ++i) {
      int64_t seg_start = chain[i].first;
      int64_t seg_end = i + 1 < chain.size() ? chain[i + 1].first : close;
      if (seg_start >= seg_end) {
        // A projection satisfied the instant it opened still needs a carrier
        // segment; import reads only the start and the value.
        if (i == 0 && chain.size() == 1) seg_end = seg_start + 1;
        else continue;
      }
      tier.segments.push_back({seg_start, seg_end, chain[i].second});
    }
    if (p.status == Projection::Status::Abandoned)
      tier.segments.push_back({p.close_ms, p.close_ms + 1,
                               fmt::format("abandon({})", p.abandon_reason)});
  }

  for (size_t i = 0; i < ledger.events.size(); ++i) {
    const auto& e = ledger.events[i];
    auto& tier = doc.upsert_tier(fmt::format("speech@{}", e.producer));
    std::string value = e.framework == Framework::Byplay
                            ? fmt::format("act({},{},byplay)", e.producer, e.category)
                            : fmt::format("act({},{})", e.producer, e.category);
    tier.segments.push_back({e.start_ms, e.end_ms, std::move(value)});
  }

  if (!ledger.silences.empty()) {
    auto& tier = doc.upsert_tier("silences");
    for (const auto& s : ledger.silences)
      tier.segments.push_back({s.span.start_ms, s.span.end_ms, render_silence_value(s)});
  }

  for (auto& tier : doc.tiers)
    std::sort(tier.segments.begin(), tier.segments.end(),
              [](const tiers::Segment& a, const tiers::Segment& b) {
                return a.start_ms != b.start_ms ? a.start_ms < b.start_ms : a.end_ms < b.end_ms;
              });

  auto problems = tiers::validate_tiers(doc);
  for (const auto& d : problems)
    if (d.is_error())
      throw UsageError(fmt::format("ledger does not fit the tier representation: {} ({})",
                                   d.message, d.location));
  return doc;
}

ReplayInput import_from_tiers(const tiers::AnnotationDocument& doc,
                              const CategoryRegistry& registry) {
  struct WaitEntry {
    ThreadRef thread;
    int64_t start_ms;
    std::vector<std::string> cats;
    bool repair = false;
    bool consumed = false;
    std::string where;
  };
  std::vector<WaitEntry> waits;
  std::vector<ActionEvent> acts;
  std::vector<NarrowOp> narrows;
  std::vector<AbandonOp> abandons;
  std::vector<Span> silences;

  for (const auto& tier : doc.tiers) {
    bool thread_tier =
        tier.kind == tiers::TierKind::Sequential || tier.kind == tiers::TierKind::Byplay;
    ThreadRef thread;
    if (thread_tier) {
      auto at = tier.name.find('@');
      if (at == std::string::npos)
        throw ParseError(fmt::format("thread tier '{}' has no @<label>", tier.name));
      thread.family = tier.kind == tiers::TierKind::Sequential ? Framework::Main
                                                               : Framework::Byplay;
      thread.ordinal = thread_ordinal(tier.name.substr(at + 1));
    }
    for (size_t i = 0; i < tier.segments.size(); ++i) {
      const auto& seg = tier.segments[i];
      auto where = fmt::format("tier '{}' segment {} [{},{})", tier.name, i + 1, seg.start_ms,
                               seg.end_ms);
      if (tier.kind == tiers::TierKind::Other && tier.name == "silences") {
        silences.push_back({seg.start_ms, seg.end_ms});
        continue;
      }
      if (tier.kind == tiers::TierKind::Alignment || tier.kind == tiers::TierKind::Label ||
          tier.kind == tiers::TierKind::Other)
        continue;

      auto call = parse_call(seg.value);
      if (!call) throw ParseError(fmt::format("value '{}' is not in the event grammar", seg.value),
                                  where);
      if (call->head == "act") {
        if (call->args.size() < 2 || call->args.size() > 3 ||
            (call->args.size() == 3 && call->args[2] != "byplay"))
          throw ParseError(fmt::format("malformed act value '{}'", seg.value), where);
        ActionEvent e;
        e.start_ms = seg.start_ms;
        e.end_ms = seg.end_ms;
        e.producer = call->args[0];
        e.category = call->args[1];
        e.framework = call->args.size() == 3 ? Framework::Byplay : Framework::Main;
        acts.push_back(std::move(e));
        continue;
      }
      if (!thread_tier)
        throw ParseError(fmt::format("value '{}' only belongs on a thread tier", seg.value),
                         where);
      if (call->head == "wait") {
        waits.push_back({thread, seg.start_ms, call->args, false, false, where});
      } else if (call->head == "repair") {
        if (!call->args.empty())
          throw ParseError(fmt::format("repair() takes no arguments, got '{}'", seg.value), where);
        waits.push_back({thread, seg.start_ms, {}, true, false, where});
      } else if (call->head == "narrow") {
        narrows.push_back({seg.start_ms, thread, call->args});
      } else if (call->head == "abandon") {
        if (call->args.size() != 1)
          throw ParseError(fmt::format("abandon takes one reason, got '{}'", seg.value), where);
        abandons.push_back({seg.start_ms, thread, call->args[0]});
      } else {
        throw ParseError(fmt::format("value '{}' is not in the event grammar", seg.value), where);
      }
    }
  }

  // Deterministic merge: time, then acts before narrows before abandons,
  // then stable detail ordering.
  std::sort(acts.begin(), acts.end(), [](const ActionEvent& a, const ActionEvent& b) {
    return std::tie(a.start_ms, a.end_ms, a.producer, a.category) <
           std::tie(b.start_ms, b.end_ms, b.producer, b.category);
  });
  std::sort(narrows.begin(), narrows.end(), [](const NarrowOp& a, const NarrowOp& b) {
    return std::tie(a.at_ms, a.thread) < std::tie(b.at_ms, b.thread);
  });
  std::sort(abandons.begin(), abandons.end(), [](const AbandonOp& a, const AbandonOp& b) {
    return std::tie(a.at_ms, a.thread) < std::tie(b.at_ms, b.thread);
  });

  std::vector<ReplayStep> merged;
  {
    size_t ai = 0, ni = 0, bi = 0;
    auto next_time = [&](size_t idx, auto& v) {
      return idx < v.size() ? step_time(ReplayStep(v[idx])) : INT64_MAX;
    };
    while (ai < acts.size() || ni < narrows.size() || bi < abandons.size()) {
      int64_t ta = next_time(ai, acts), tn = next_time(ni, narrows), tb = next_time(bi, abandons);
      if (ta <= tn && ta <= tb) merged.emplace_back(acts[ai++]);
      else if (tn <= tb) merged.emplace_back(narrows[ni++]);
      else merged.emplace_back(abandons[bi++]);
    }
  }

  // Re-run the fold, attaching each wait segment to the action whose opening
  // the engine would place on that thread at that instant.
  ThreadLedger fold;
  fold.registry = registry;
  WaitSource source = [&](ThreadRef thread, int64_t open_ms,
                          bool repair) -> std::optional<std::vector<std::string>> {
    for (auto& w : waits) {
      if (w.consumed || !(w.thread == thread) || w.start_ms != open_ms) continue;
      if (w.repair != repair) continue;
      w.consumed = true;
      return w.cats;
    }
    return std::nullopt;
  };

  std::vector<ReplayStep> steps;
  for (const auto& step : merged) {
    if (const auto* e = std::get_if<ActionEvent>(&step)) {
      ActionEvent resolved = *e;
      detail::Applier applier{fold};
      applier.wait_source = &source;
      applier.apply(resolved);
      // The applier consumed the wait (if any); recover the awaited set from
      // the projection it opened.
      if (!fold.projections.empty()) {
        const auto& p = fold.projections.back();
        if (p.opened_by == static_cast<int>(fold.events.size()) - 1 && !p.is_repair)
          resolved.awaited_next = p.original_awaited;
      }
      steps.emplace_back(std::move(resolved));
    } else {
      fold.apply(step);
      steps.push_back(step);
    }
  }

  for (const auto& w : waits)
    if (!w.consumed)
      throw ParseError("projection segment has no opening action at its start time", w.where);

  ReplayInput input;
  input.steps = std::move(steps);
  input.silences = std::move(silences);
  return input;
}

}  // namespace seqann::seq
