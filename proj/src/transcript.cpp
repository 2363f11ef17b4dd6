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

#include "seqann/transcript.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cctype>
#include <cmath>

#include "seqann/strings.hpp"

namespace seqann::transcript {

namespace {

struct Atom {
  enum class Kind { Word, Micro, Measured, Nonverbal };
  Kind kind;
  TurnItem word;          // Word
  int64_t duration_ms{};  // Measured
  std::string text;       // Nonverbal
};

bool is_word_char(char c) {
  // Anything that is not whitespace or reserved punctuation belongs to the
  // word, so "I'm", "book." and hyphenated forms survive a round trip.
  return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' &&
         c != ':' && c != '?';
}

int64_t parse_duration_seconds(std::string_view s, int line_no) {
  std::string norm(s);
  std::replace(norm.begin(), norm.end(), ',', '.');
  if (norm.empty() || norm.front() == '.' || norm.back() == '.')
    throw ParseError(fmt::format("malformed duration '({})'", s), fmt::format("line {}", line_no));
  int dots = 0;
  for (char c : norm) {
    if (c == '.') {
      ++dots;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ParseError(fmt::format("malformed duration '({})'", s),
                       fmt::format("line {}", line_no));
  }
  if (dots > 1)
    throw ParseError(fmt::format("malformed duration '({})'", s), fmt::format("line {}", line_no));
  return static_cast<int64_t>(std::llround(std::stod(norm) * 1000.0));
}

std::vector<Atom> tokenize_payload(std::string_view payload, int line_no) {
  std::vector<Atom> atoms;
  size_t i = 0;
  while (i < payload.size()) {
    char c = payload[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '(') {
      if (i + 1 < payload.size() && payload[i + 1] == '(') {
        size_t close = payload.find("))", i + 2);
        if (close == std::string_view::npos)
          throw ParseError("unmatched '(('", fmt::format("line {}", line_no));
        Atom a;
        a.kind = Atom::Kind::Nonverbal;
        a.text = std::string(trim(payload.substr(i + 2, close - i - 2)));
        atoms.push_back(std::move(a));
        i = close + 2;
        continue;
      }
      size_t close = payload.find(')', i + 1);
      if (close == std::string_view::npos)
        throw ParseError("unmatched '('", fmt::format("line {}", line_no));
      std::string_view inner = trim(payload.substr(i + 1, close - i - 1));
      Atom a;
      if (inner == ".") {
        a.kind = Atom::Kind::Micro;
      } else {
        a.kind = Atom::Kind::Measured;
        a.duration_ms = parse_duration_seconds(inner, line_no);
        if (a.duration_ms < 200)
          throw ParseError(
              fmt::format("measured silence ({}) is under 200 ms; use (.) below that", inner),
              fmt::format("line {}", line_no));
      }
      atoms.push_back(std::move(a));
      i = close + 1;
      continue;
    }
    if (c == ')')
      throw ParseError("unmatched ')'", fmt::format("line {}", line_no));
    if (c == ':' || c == '?')
      throw ParseError(fmt::format("'{}' must follow a word", c), fmt::format("line {}", line_no));

    Atom a;
    a.kind = Atom::Kind::Word;
    std::string text;
    int prolongation = 0;
    bool rising = false;
    while (i < payload.size()) {
      char w = payload[i];
      if (is_word_char(w)) {
        if (rising)
          break;  // '?' ends the word
        text += w;
        ++i;
      } else if (w == ':') {
        ++prolongation;
        ++i;
      } else if (w == '?') {
        rising = true;
        ++i;
      } else {
        break;
      }
    }
    a.word.text = std::move(text);
    a.word.prolongation = prolongation;
    a.word.rising = rising;
    atoms.push_back(std::move(a));
  }
  return atoms;
}

// A speaker label is an identifier followed by ':' before any payload; a ':'
// that is itself followed by ':' is sound prolongation, not a label.
std::optional<std::string> take_speaker(std::string_view& rest) {
  size_t i = 0;
  while (i < rest.size() && (std::isalnum(static_cast<unsigned char>(rest[i])) || rest[i] == '_'))
    ++i;
  if (i == 0 || !std::isalpha(static_cast<unsigned char>(rest[0]))) return std::nullopt;
  size_t j = i;
  while (j < rest.size() && (rest[j] == ' ' || rest[j] == '\t')) ++j;
  if (j >= rest.size() || rest[j] != ':') return std::nullopt;
  if (j + 1 < rest.size() && rest[j + 1] == ':') return std::nullopt;
  std::string speaker(rest.substr(0, i));
  rest = rest.substr(j + 1);
  return speaker;
}

}  // namespace

Transcript parse_transcript(const std::string& text) {
  Transcript out;
  int last_line_no = 0;
  int physical_line = 0;
  for (const auto& raw : split_lines(text)) {
    ++physical_line;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    int line_no = 0;
    size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && (i == line.size() || std::isspace(static_cast<unsigned char>(line[i])))) {
      line_no = std::stoi(std::string(line.substr(0, i)));
      line = trim(line.substr(i));
    }
    int effective_line = line_no ? line_no : physical_line;
    if (line_no) {
      if (line_no <= last_line_no)
        throw ParseError(fmt::format("line numbers must increase ({} after {})", line_no,
                                     last_line_no),
                         fmt::format("line {}", line_no));
      last_line_no = line_no;
    }

    auto speaker = take_speaker(line);
    if (speaker) out.participants.insert(*speaker);

    auto atoms = tokenize_payload(trim(line), effective_line);
    if (atoms.empty())
      throw ParseError("empty payload", fmt::format("line {}", effective_line));

    // Group word/micro runs into Turn events; a micro-pause run with no word
    // stands alone as an unmeasured Silence.
    size_t a = 0;
    while (a < atoms.size()) {
      const Atom& atom = atoms[a];
      if (atom.kind == Atom::Kind::Measured) {
        TranscriptEvent e;
        e.kind = TranscriptEvent::Kind::Silence;
        e.line_no = line_no;
        e.duration_ms = atom.duration_ms;
        out.events.push_back(std::move(e));
        ++a;
        continue;
      }
      if (atom.kind == Atom::Kind::Nonverbal) {
        TranscriptEvent e;
        e.kind = TranscriptEvent::Kind::Nonverbal;
        e.line_no = line_no;
        e.speaker = speaker;
        e.description = atom.text;
        out.events.push_back(std::move(e));
        ++a;
        continue;
      }
      size_t b = a;
      bool has_word = false;
      while (b < atoms.size() &&
             (atoms[b].kind == Atom::Kind::Word || atoms[b].kind == Atom::Kind::Micro)) {
        if (atoms[b].kind == Atom::Kind::Word) has_word = true;
        ++b;
      }
      if (!has_word) {
        for (size_t k = a; k < b; ++k) {
          TranscriptEvent e;
          e.kind = TranscriptEvent::Kind::Silence;
          e.line_no = line_no;
          e.micro = true;
          out.events.push_back(std::move(e));
        }
      } else {
        TranscriptEvent e;
        e.kind = TranscriptEvent::Kind::Turn;
        e.line_no = line_no;
        e.speaker = speaker;
        for (size_t k = a; k < b; ++k) {
          if (atoms[k].kind == Atom::Kind::Micro) {
            TurnItem item;
            item.micro = true;
            e.items.push_back(item);
          } else {
            e.items.push_back(atoms[k].word);
          }
        }
        if (!e.speaker)
          throw ParseError("turn without a speaker label", fmt::format("line {}", effective_line));
        out.events.push_back(std::move(e));
      }
      a = b;
    }
  }
  return out;
}

namespace {

std::string render_event_payload(const TranscriptEvent& e) {
  switch (e.kind) {
    case TranscriptEvent::Kind::Turn: {
      std::string out;
      for (size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ' ';
        const auto& item = e.items[i];
        if (item.micro) {
          out += "(.)";
          continue;
        }
        out += item.text;
        out.append(static_cast<size_t>(item.prolongation), ':');
        if (item.rising) out += '?';
      }
      return out;
    }
    case TranscriptEvent::Kind::Silence: {
      if (e.micro) return "(.)";
      double sec = static_cast<double>(*e.duration_ms) / 1000.0;
      return fmt::format("({:.1f})", sec);
    }
    case TranscriptEvent::Kind::Nonverbal:
      return fmt::format("(({}))", e.description);
  }
  return {};
}

}  // namespace

std::string serialize_transcript(const Transcript& t) {
  std::string out;
  size_t i = 0;
  while (i < t.events.size()) {
    size_t j = i + 1;
    // Events parsed from one numbered source line are re-joined.
    if (t.events[i].line_no != 0)
      while (j < t.events.size() && t.events[j].line_no == t.events[i].line_no) ++j;

    std::optional<std::string> speaker;
    for (size_t k = i; k < j; ++k)
      if (t.events[k].speaker) {
        speaker = t.events[k].speaker;
        break;
      }
    std::string line;
    if (t.events[i].line_no != 0) line += fmt::format("{} ", t.events[i].line_no);
    if (speaker) line += fmt::format("{}: ", *speaker);
    for (size_t k = i; k < j; ++k) {
      if (k > i) line += ' ';
      line += render_event_payload(t.events[k]);
    }
    out += line;
    out += '\n';
    i = j;
  }
  return out;
}

GapResult measured_gap(const Transcript& t, int from_line, int to_line) {
  if (from_line >= to_line)
    throw UsageError(fmt::format("from_line {} must precede to_line {}", from_line, to_line));
  ptrdiff_t from_last = -1, to_first = -1;
  for (size_t i = 0; i < t.events.size(); ++i) {
    if (t.events[i].line_no == from_line) from_last = static_cast<ptrdiff_t>(i);
    if (t.events[i].line_no == to_line && to_first < 0) to_first = static_cast<ptrdiff_t>(i);
  }
  if (from_last < 0) throw UsageError(fmt::format("no line {} in transcript", from_line));
  if (to_first < 0) throw UsageError(fmt::format("no line {} in transcript", to_line));

  GapResult gap;
  for (ptrdiff_t i = from_last + 1; i < to_first; ++i) {
    const auto& e = t.events[static_cast<size_t>(i)];
    switch (e.kind) {
      case TranscriptEvent::Kind::Silence:
        if (e.duration_ms) gap.duration_ms += *e.duration_ms;
        else gap.complete = false;  // micro-pause: bounded only as <200ms
        break;
      case TranscriptEvent::Kind::Turn:
      case TranscriptEvent::Kind::Nonverbal:
        gap.complete = false;
        break;
    }
  }
  return gap;
}

}  // namespace seqann::transcript
