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

#include "seqann/sim.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cctype>

#include "seqann/strings.hpp"
#include "seqann/tiers.hpp"

namespace seqann::sim {

namespace {

std::set<std::string> utterance_words(const std::string& text) {
  std::set<std::string> words;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!current.empty()) {
      words.insert(current);
      current.clear();
    }
  }
  if (!current.empty()) words.insert(current);
  return words;
}

int64_t word_count(const std::string& text) {
  int64_t n = 0;
  bool in_word = false;
  for (char c : text) {
    bool w = !std::isspace(static_cast<unsigned char>(c));
    if (w && !in_word) ++n;
    in_word = w;
  }
  return std::max<int64_t>(n, 1);
}

}  // namespace

DialogueMachine load_machine(const std::string& config) {
  DialogueMachine machine;
  std::string state;
  int line_no = 0;
  for (const auto& raw : split_lines(config)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto where = fmt::format("line {}", line_no);

    if (line.front() == '[' && line.back() == ']') {
      auto inner = split_ws(line.substr(1, line.size() - 2));
      if (inner.size() != 2 || inner[0] != "state")
        throw ParseError(fmt::format("expected [state <name>], got '{}'", std::string(line)),
                         where);
      state = inner[1];
      machine.states.insert(state);
      continue;
    }

    auto words = split_ws(line);
    const std::string& head = words[0];
    std::string rest(trim(line.substr(head.size())));

    if (head == "initial") {
      if (words.size() != 2) throw ParseError("initial takes one state name", where);
      machine.initial = words[1];
    } else if (head == "fallback") {
      if (words.size() >= 2 && words[1] == "silent") {
        machine.fallback.kind = FallbackPolicy::Kind::StaySilent;
      } else if (words.size() >= 2 && words[1] == "reissue") {
        machine.fallback.kind = FallbackPolicy::Kind::ReissuePrompt;
        std::string payload(trim(rest.substr(std::string("reissue").size())));
        auto at = payload.rfind(" @");
        if (at == std::string::npos)
          throw ParseError("fallback reissue needs '<text> @<category>'", where);
        machine.fallback.text = std::string(trim(payload.substr(0, at)));
        machine.fallback.category = std::string(trim(payload.substr(at + 2)));
        if (machine.fallback.text.empty() || machine.fallback.category.empty())
          throw ParseError("fallback reissue needs '<text> @<category>'", where);
      } else {
        throw ParseError("fallback is 'silent' or 'reissue <text> @<category>'", where);
      }
    } else if (head == "awaits") {
      if (words.size() < 2) throw ParseError("awaits needs a category", where);
      machine.awaits[words[1]] = {words.begin() + 2, words.end()};
    } else if (head == "label") {
      if (words.size() != 3) throw ParseError("label needs '<category> <base[digit]>'", where);
      machine.label_overrides[words[1]] = words[2];
    } else if (head == "robot_name") {
      if (words.size() != 2) throw ParseError("robot_name takes one id", where);
      machine.robot_name = words[1];
    } else if (head == "user_name") {
      if (words.size() != 2) throw ParseError("user_name takes one id", where);
      machine.user_name = words[1];
    } else if (head == "silence_threshold_ms") {
      if (words.size() != 2) throw ParseError("silence_threshold_ms takes one integer", where);
      machine.silence_threshold_ms = std::stoll(words[1]);
    } else if (head == "rule") {
      if (state.empty()) throw ParseError("rule outside any [state] section", where);
      auto arrow = rest.find("->");
      if (arrow == std::string::npos) throw ParseError("rule needs '-> <target>'", where);
      Rule rule;
      rule.source_state = state;
      for (const auto& kw : split_ws(std::string_view(rest).substr(0, arrow)))
        rule.trigger.insert(kw);
      if (rule.trigger.empty()) throw ParseError("rule has an empty trigger", where);
      for (const auto& kw : rule.trigger)
        if (!is_lower_alpha(kw))
          throw ParseError(fmt::format("trigger keyword '{}' must be lowercase letters", kw),
                           where);
      std::string after(trim(std::string_view(rest).substr(arrow + 2)));
      auto colon = after.find(':');
      if (colon == std::string::npos) throw ParseError("rule needs ': <response>'", where);
      rule.target_state = std::string(trim(after.substr(0, colon)));
      std::string payload(trim(after.substr(colon + 1)));
      auto at = payload.rfind(" @");
      if (at == std::string::npos)
        throw ParseError("rule response needs a trailing @<category>", where);
      rule.response = std::string(trim(payload.substr(0, at)));
      rule.action_category = std::string(trim(payload.substr(at + 2)));
      if (rule.response.empty() || rule.action_category.empty())
        throw ParseError("rule response needs '<text> @<category>'", where);
      machine.rules.push_back(std::move(rule));
    } else {
      throw ParseError(fmt::format("unknown directive '{}'", head), where);
    }
  }

  if (machine.initial.empty()) throw ParseError("machine has no initial state");
  if (!machine.states.count(machine.initial))
    throw ParseError(fmt::format("initial state '{}' is not declared", machine.initial));
  std::map<std::string, std::set<std::string>> seen;  // state -> keywords
  for (const auto& rule : machine.rules) {
    if (!machine.states.count(rule.target_state))
      throw ParseError(fmt::format("rule targets undeclared state '{}'", rule.target_state));
    auto& keywords = seen[rule.source_state];
    for (const auto& kw : rule.trigger) {
      if (keywords.count(kw))
        throw ParseError(fmt::format(
            "ambiguous trigger: keyword '{}' appears on two rules from state '{}'", kw,
            rule.source_state));
      keywords.insert(kw);
    }
  }
  return machine;
}

StepResult step(const DialogueMachine& machine, const std::string& state,
                const std::string& utterance) {
  if (!machine.states.count(state))
    throw UsageError(fmt::format("unknown state '{}'", state));
  auto words = utterance_words(utterance);
  for (const auto& rule : machine.rules) {
    if (rule.source_state != state) continue;
    bool hit = false;
    for (const auto& kw : rule.trigger)
      if (words.count(kw)) {
        hit = true;
        break;
      }
    if (!hit) continue;
    StepResult result;
    result.response = rule.response;
    result.response_category = rule.action_category;
    result.next_state = rule.target_state;
    return result;
  }
  StepResult result;
  result.next_state = state;
  result.via_fallback = true;
  if (machine.fallback.kind == FallbackPolicy::Kind::ReissuePrompt) {
    result.response = machine.fallback.text;
    result.response_category = machine.fallback.category;
  }
  return result;
}

SimScript load_script(const std::string& text) {
  SimScript script;
  int line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto where = fmt::format("line {}", line_no);
    auto words = split_ws(line);
    ScriptItem item;
    if (words[0] == "pause") {
      if (words.size() != 2) throw ParseError("pause takes one integer (ms)", where);
      item.kind = ScriptItem::Kind::Pause;
      item.pause_ms = std::stoll(words[1]);
      if (item.pause_ms <= 0) throw ParseError("pause must be positive", where);
    } else if (words[0] == "say") {
      if (words.size() < 3) throw ParseError("say needs '<category> <text...>'", where);
      item.kind = ScriptItem::Kind::Say;
      item.category = words[1];
      std::string_view rest = trim(line.substr(3));
      item.text = std::string(trim(rest.substr(item.category.size())));
    } else {
      throw ParseError(fmt::format("unknown script line '{}'", words[0]), where);
    }
    script.items.push_back(std::move(item));
  }
  return script;
}

SimLog simulate(const DialogueMachine& machine, const SimScript& script,
                const SimOptions& options) {
  SimLog log;
  std::string state = machine.initial;
  int64_t clock = 0;
  for (const auto& item : script.items) {
    if (item.kind == ScriptItem::Kind::Pause) {
      SimEvent e;
      e.speaker = SimEvent::Speaker::None;
      e.kind = SimEvent::Kind::Silence;
      e.start_ms = clock;
      e.end_ms = clock + item.pause_ms;
      clock = e.end_ms;
      log.events.push_back(std::move(e));
      continue;
    }
    SimEvent user;
    user.speaker = SimEvent::Speaker::User;
    user.kind = SimEvent::Kind::Utterance;
    user.text = item.text;
    user.category = item.category;
    user.start_ms = clock;
    user.end_ms = clock + word_count(item.text) * options.per_word_ms;
    clock = user.end_ms;
    log.events.push_back(user);

    auto result = step(machine, state, item.text);
    state = result.next_state;
    if (result.response) {
      SimEvent robot;
      robot.speaker = SimEvent::Speaker::Robot;
      robot.kind = SimEvent::Kind::Utterance;
      robot.text = *result.response;
      robot.category = result.response_category.value_or("");
      robot.via_fallback = result.via_fallback;
      robot.start_ms = clock + options.response_delay_ms;
      robot.end_ms = robot.start_ms + word_count(robot.text) * options.per_word_ms;
      clock = robot.end_ms;
      log.events.push_back(std::move(robot));
    }
  }
  log.final_state = state;
  return log;
}

namespace {

labels::LabelToken token_for(const SimEvent& e, const DialogueMachine& machine,
                             const labels::TagRegistry& registry) {
  std::string base = e.category;
  int part = 0;
  auto override_it = machine.label_overrides.find(e.category);
  if (override_it != machine.label_overrides.end()) {
    base = override_it->second;
  }
  if (!base.empty() && (base.back() == '1' || base.back() == '2')) {
    std::string stem = base.substr(0, base.size() - 1);
    if (registry.pairable.count(stem)) {
      part = base.back() - '0';
      base = stem;
    }
  }
  if (!registry.directed.count(base)) return labels::LabelToken::plain(base, false);
  bool robot = e.speaker == SimEvent::Speaker::Robot;
  return labels::LabelToken::directed(robot ? labels::Party::Robot : labels::Party::Human,
                                      base, part,
                                      robot ? labels::Party::Human : labels::Party::Robot);
}

}  // namespace

AnnotatedLog annotate_log(const SimLog& log, const DialogueMachine& machine,
                          const labels::TagRegistry& registry) {
  AnnotatedLog out;
  const SimEvent* prev_speech = nullptr;
  for (const auto& e : log.events) {
    if (e.kind != SimEvent::Kind::Utterance) continue;
    if (e.category.empty())
      throw UsageError(fmt::format("log event at {} carries no action category", e.start_ms));
    if (prev_speech && e.start_ms - prev_speech->end_ms >= machine.silence_threshold_ms) {
      out.label_sequence.tokens.push_back(labels::LabelToken::plain("silence"));
      out.silences.push_back({prev_speech->end_ms, e.start_ms});
    }
    out.label_sequence.tokens.push_back(token_for(e, machine, registry));

    seq::ActionEvent action;
    action.start_ms = e.start_ms;
    action.end_ms = e.end_ms;
    action.producer =
        e.speaker == SimEvent::Speaker::Robot ? machine.robot_name : machine.user_name;
    action.framework = seq::Framework::Main;
    action.category = e.category;
    auto awaits = machine.awaits.find(e.category);
    if (awaits != machine.awaits.end()) action.awaited_next = awaits->second;
    out.events.push_back(std::move(action));
    prev_speech = &e;
  }
  out.label_string = labels::serialize_label_sequence(out.label_sequence);
  out.label_sequence.source_text = out.label_string;
  return out;
}

std::map<std::string, std::string> generate_session(const DialogueMachine& machine,
                                                    const SimScript& script,
                                                    const std::string& session_id,
                                                    const SimOptions& options) {
  auto log = simulate(machine, script, options);
  auto annotated = annotate_log(log, machine, labels::TagRegistry::defaults());

  seq::ReplayInput input;
  for (const auto& e : annotated.events) input.steps.emplace_back(e);
  input.silences = annotated.silences;
  auto ledger = seq::replay(seq::CategoryRegistry::defaults(), input);

  int64_t last = 1000;
  for (const auto& e : log.events) last = std::max(last, e.end_ms);
  int64_t timeline = last + 1000;

  auto doc = seq::export_to_tiers(ledger, session_id, timeline);
  auto& alignment = doc.upsert_tier("alignment");
  alignment.segments.push_back({0, timeline, fmt::format("{}-cam@0", session_id)});

  std::map<std::string, std::string> files;
  files[fmt::format("sessions/{}/annotations.itx", session_id)] = tiers::export_interchange(doc);
  files[fmt::format("sessions/{}/clips.tsv", session_id)] =
      fmt::format("{}-clip1\t0\t{}\t{}\tsimulated interaction\n", session_id, last,
                  annotated.label_string);
  files["registry.conf"] = labels::TagRegistry::defaults().serialize();
  return files;
}

}  // namespace seqann::sim
