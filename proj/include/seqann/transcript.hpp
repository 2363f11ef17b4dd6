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

#ifndef SEQANN_TRANSCRIPT_HPP
#define SEQANN_TRANSCRIPT_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seqann/diagnostics.hpp"

namespace seqann::transcript {

// One item inside a turn: a word (with prolongation colons counted and a
// rising-intonation flag from a trailing '?') or an embedded micro-pause "(.)" .
struct TurnItem {
  bool micro = false;
  std::string text;
  int prolongation = 0;
  bool rising = false;

  bool operator==(const TurnItem&) const = default;
};

struct TranscriptEvent {
  enum class Kind { Turn, Silence, Nonverbal };
  Kind kind = Kind::Turn;
  int line_no = 0;  // 0 = no number in source
  std::optional<std::string> speaker;
  std::vector<TurnItem> items;            // Turn
  std::optional<int64_t> duration_ms;     // Silence; absent <=> micro
  bool micro = false;                     // Silence: "(.)" standing alone
  std::string description;                // Nonverbal

  bool operator==(const TranscriptEvent&) const = default;
};

struct Transcript {
  std::vector<TranscriptEvent> events;
  std::set<std::string> participants;
};

// Parses the simplified transcript conventions: optional line number,
// optional "Speaker:" label, then a mix of words, (.), (N.N) seconds and
// ((event)) descriptions. A measured silence inside a speaker line becomes
// its own unattributed Silence event at that position; micro-pauses adjacent
// to words stay embedded in the Turn. Comma decimals ("6,6") are accepted.
// Throws ParseError with the line number on malformed input.
Transcript parse_transcript(const std::string& text);

// One line per source line; events that shared a line are re-joined.
// parse(serialize(t)) yields an equal event list.
std::string serialize_transcript(const Transcript& t);

struct GapResult {
  int64_t duration_ms = 0;
  // False when a turn, nonverbal event or micro-pause of unknown duration
  // lies in the interval: the sum is then only a lower bound.
  bool complete = true;
};

// Sum of measured silence durations strictly between the two lines (events on
// the boundary lines themselves are excluded). Throws UsageError for unknown
// line numbers or from_line >= to_line.
GapResult measured_gap(const Transcript& t, int from_line, int to_line);

}  // namespace seqann::transcript

#endif  // SEQANN_TRANSCRIPT_HPP
