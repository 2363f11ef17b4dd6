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

#ifndef SEQANN_SIM_HPP
#define SEQANN_SIM_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seqann/diagnostics.hpp"
#include "seqann/labels.hpp"
#include "seqann/sequence.hpp"

namespace seqann::sim {

struct Rule {
  std::string source_state;
  std::set<std::string> trigger;  // lowercase keywords, word-boundary matched
  std::string response;
  std::string action_category;
  std::string target_state;
};

struct FallbackPolicy {
  enum class Kind { StaySilent, ReissuePrompt };
  Kind kind = Kind::StaySilent;
  std::string text;
  std::string category;
};

// Keyword-rule state machine. Config format:
//   initial <state>
//   fallback silent | fallback reissue <text> @<category>
//   awaits <category> <cat> [<cat>...]     (what a produced action projects)
//   label <category> <base>[1|2]           (label-token override)
//   robot_name <id> / user_name <id>
//   silence_threshold_ms <ms>
//   [state <name>]
//   rule <keyword...> -> <target> : <response> @<category>
struct DialogueMachine {
  std::set<std::string> states;
  std::string initial;
  std::vector<Rule> rules;
  FallbackPolicy fallback;

  std::map<std::string, std::vector<std::string>> awaits;  // category -> projected
  std::map<std::string, std::string> label_overrides;      // category -> base[digit]
  std::string robot_name = "robot";
  std::string user_name = "user";
  int64_t silence_threshold_ms = 1000;
};

// Validates states, targets, triggers; duplicate keywords on rules from one
// state are rejected as ambiguous so every step is deterministic.
DialogueMachine load_machine(const std::string& config);

struct StepResult {
  std::optional<std::string> response;
  std::optional<std::string> response_category;
  std::string next_state;
  bool via_fallback = false;
};

// Fires the rule from `state` whose keyword set intersects the utterance's
// word set (case-insensitive, word boundaries); falls back otherwise with
// the state unchanged. Throws UsageError for unknown states.
StepResult step(const DialogueMachine& machine, const std::string& state,
                const std::string& utterance);

struct ScriptItem {
  enum class Kind { Say, Pause };
  Kind kind = Kind::Say;
  std::string category;  // Say
  std::string text;      // Say
  int64_t pause_ms = 0;  // Pause
};

struct SimScript {
  std::vector<ScriptItem> items;
};

// Script file: "say <category> <text...>" / "pause <ms>" lines.
SimScript load_script(const std::string& text);

struct SimEvent {
  enum class Speaker { User, Robot, None };
  enum class Kind { Utterance, Silence };
  Speaker speaker = Speaker::None;
  Kind kind = Kind::Utterance;
  std::string text;
  std::string category;
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  bool via_fallback = false;
};

struct SimLog {
  std::vector<SimEvent> events;
  std::string final_state;
};

struct SimOptions {
  int64_t response_delay_ms = 600;
  int64_t per_word_ms = 300;  // utterance duration model
};

// Deterministic interleaving: user events at script pace, robot replies
// response_delay_ms after each user utterance ends, pauses advance the clock.
SimLog simulate(const DialogueMachine& machine, const SimScript& script,
                const SimOptions& options = {});

struct AnnotatedLog {
  labels::LabelSequence label_sequence;
  std::string label_string;
  std::vector<seq::ActionEvent> events;
  std::vector<seq::Span> silences;  // inter-utterance gaps >= threshold
};

// Directed label tokens in appearance order (robot p..h, user h..p, silences
// over the threshold as plain "silence"), plus the replayable event list with
// awaited sets from the machine's category map.
AnnotatedLog annotate_log(const SimLog& log, const DialogueMachine& machine,
                          const labels::TagRegistry& registry);

// Session directory contents for a simulated interaction: an identity-aligned
// interchange annotation document, a clips.tsv with one clip over the whole
// log, and a registry.conf. Keys are paths relative to the corpus root.
std::map<std::string, std::string> generate_session(const DialogueMachine& machine,
                                                    const SimScript& script,
                                                    const std::string& session_id,
                                                    const SimOptions& options = {});

}  // namespace seqann::sim

#endif  // SEQANN_SIM_HPP
