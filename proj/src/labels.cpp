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

#include "seqann/labels.hpp"

#include <fmt/core.h>

#include <algorithm>

#include "seqann/strings.hpp"

namespace seqann::labels {

TagRegistry TagRegistry::defaults() {
  TagRegistry reg;
  reg.directed = {"greeting", "question", "offer",  "request", "proposal", "answer",
                  "acceptance", "rejection", "repair", "repeat", "closing"};
  reg.plain = {"silence", "overlap", "laughter", "gazeaway", "eyecontact", "torque", "inhale"};
  reg.pairable = {"greeting", "closing"};
  return reg;
}

TagRegistry TagRegistry::load(const std::string& text) {
  TagRegistry reg;
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
    if (section != "directed" && section != "plain" && section != "pairable")
      continue;  // other sections belong to other modules
    std::string tag(line);
    if (!is_lower_alpha(tag))
      throw ParseError(fmt::format("tag '{}' is not lowercase ASCII letters", tag),
                       fmt::format("line {}", line_no));
    if (section == "directed") reg.directed.insert(tag);
    else if (section == "plain") reg.plain.insert(tag);
    else reg.pairable.insert(tag);
  }
  reg.validate();
  return reg;
}

std::string TagRegistry::serialize() const {
  std::string out = "[directed]\n";
  for (const auto& t : directed) out += t + "\n";
  out += "[plain]\n";
  for (const auto& t : plain) out += t + "\n";
  out += "[pairable]\n";
  for (const auto& t : pairable) out += t + "\n";
  return out;
}

void TagRegistry::validate() const {
  for (const auto& t : directed)
    if (plain.count(t))
      throw ParseError(fmt::format("tag '{}' is both directed and plain", t));
  for (const auto& t : pairable)
    if (!directed.count(t))
      throw ParseError(fmt::format("pairable tag '{}' is not a directed tag", t));
  for (const auto* set : {&directed, &plain})
    for (const auto& t : *set)
      if (!is_lower_alpha(t))
        throw ParseError(fmt::format("tag '{}' is not lowercase ASCII letters", t));
}

std::string LabelToken::text() const {
  if (kind == Kind::Plain) return name;
  std::string out;
  out += party_code(transmitter);
  out += base;
  if (pair_part) out += static_cast<char>('0' + pair_part);
  out += party_code(recipient);
  return out;
}

namespace {

bool is_party(char c) { return c == 'h' || c == 'p'; }

Party to_party(char c) { return c == 'h' ? Party::Human : Party::Robot; }

// Splits a trailing pair digit off an interior like "greeting1".
std::pair<std::string_view, int> split_pair_digit(std::string_view interior) {
  if (!interior.empty() && (interior.back() == '1' || interior.back() == '2'))
    return {interior.substr(0, interior.size() - 1), interior.back() - '0'};
  return {interior, 0};
}

std::optional<LabelToken> try_directed(std::string_view field, const TagRegistry& reg) {
  if (field.size() < 3) return std::nullopt;
  if (!is_party(field.front()) || !is_party(field.back())) return std::nullopt;
  std::string_view interior = field.substr(1, field.size() - 2);
  auto [base, part] = split_pair_digit(interior);
  std::string base_s(base);
  if (!reg.directed.count(base_s)) return std::nullopt;
  if (part != 0 && !reg.pairable.count(base_s)) return std::nullopt;
  return LabelToken::directed(to_party(field.front()), base_s, part, to_party(field.back()));
}

}  // namespace

ParseResult parse_label_string(const std::string& text, const TagRegistry& registry) {
  ParseResult result;
  result.sequence.source_text = text;
  if (trim(text).empty()) return result;

  auto fields = split(text, ',');
  for (size_t i = 0; i < fields.size(); ++i) {
    std::string_view field = trim(fields[i]);
    if (field.empty())
      throw ParseError("empty label field", fmt::format("field {}", i + 1));
    for (char c : field)
      if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')))
        throw ParseError(fmt::format("illegal character '{}' in '{}'", c, field),
                         fmt::format("field {}", i + 1));

    if (auto tok = try_directed(field, registry)) {
      result.sequence.tokens.push_back(*tok);
      continue;
    }
    std::string name(field);
    bool known = registry.plain.count(name) > 0;
    result.sequence.tokens.push_back(LabelToken::plain(name, known));
    if (!known)
      result.diagnostics.push_back({Severity::Warning, "unknown_tag",
                                    fmt::format("unknown tag '{}'", name),
                                    fmt::format("field {}", i + 1)});
  }
  return result;
}

std::string serialize_label_sequence(const LabelSequence& seq) {
  std::string out;
  for (size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i) out += ", ";
    out += seq.tokens[i].text();
  }
  return out;
}

std::vector<Diagnostic> lint_labels(const LabelSequence& seq, const TagRegistry& registry) {
  std::vector<Diagnostic> out;
  const auto& toks = seq.tokens;
  for (size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    auto at = fmt::format("token {}", i + 1);
    if (t.kind == LabelToken::Kind::Plain) {
      if (!registry.plain.count(t.name))
        out.push_back({Severity::Warning, "unknown_tag",
                       fmt::format("unknown tag '{}'", t.name), at});
      continue;
    }
    if (t.transmitter == t.recipient)
      out.push_back({Severity::Warning, "self_addressed",
                     fmt::format("self-addressed token '{}'", t.text()), at});
    if (t.pair_part == 1) {
      bool answered = false;
      for (size_t j = i + 1; j < toks.size(); ++j)
        if (toks[j].kind == LabelToken::Kind::Directed && toks[j].base == t.base &&
            toks[j].pair_part == 2) {
          answered = true;
          break;
        }
      if (!answered)
        out.push_back({Severity::Warning, "unpaired_pair_part",
                       fmt::format("unpaired {}1", t.base), at});
    } else if (t.pair_part == 2) {
      bool initiated = false;
      for (size_t j = 0; j < i; ++j)
        if (toks[j].kind == LabelToken::Kind::Directed && toks[j].base == t.base &&
            toks[j].pair_part == 1) {
          initiated = true;
          break;
        }
      if (!initiated)
        out.push_back({Severity::Warning, "unpaired_pair_part",
                       fmt::format("unpaired {}2", t.base), at});
    }
  }
  return out;
}

bool PatternToken::matches(const LabelToken& tok) const {
  switch (kind) {
    case Kind::Any:
      return true;
    case Kind::Plain:
      return tok.kind == LabelToken::Kind::Plain && tok.name == name;
    case Kind::Directed: {
      if (tok.kind != LabelToken::Kind::Directed) return false;
      if (transmitter && *transmitter != tok.transmitter) return false;
      if (recipient && *recipient != tok.recipient) return false;
      if (base == "*") {
        if (pair_part != 0 && pair_part != tok.pair_part) return false;
        return true;
      }
      return base == tok.base && pair_part == tok.pair_part;
    }
  }
  return false;
}

namespace {

bool is_party_or_wild(char c) { return is_party(c) || c == '?'; }

std::optional<Party> pattern_party(char c) {
  if (c == '?') return std::nullopt;
  return to_party(c);
}

}  // namespace

LabelQuery parse_label_query(const std::string& pattern, const TagRegistry& registry) {
  LabelQuery query;
  for (const auto& word : split_ws(pattern)) {
    if (word == "*") {
      PatternToken p;
      p.kind = PatternToken::Kind::Any;
      query.tokens.push_back(p);
      continue;
    }
    if (word.size() >= 3 && is_party_or_wild(word.front()) && is_party_or_wild(word.back())) {
      std::string_view interior = std::string_view(word).substr(1, word.size() - 2);
      auto [base, part] = split_pair_digit(interior);
      std::string base_s(base);
      bool wild_base = base_s == "*";
      if (wild_base || registry.directed.count(base_s)) {
        if (!wild_base && part != 0 && !registry.pairable.count(base_s))
          throw ParseError(fmt::format("tag '{}' does not take a pair part", base_s),
                           fmt::format("pattern token '{}'", word));
        PatternToken p;
        p.kind = PatternToken::Kind::Directed;
        p.transmitter = pattern_party(word.front());
        p.recipient = pattern_party(word.back());
        p.base = base_s;
        p.pair_part = part;
        query.tokens.push_back(p);
        continue;
      }
      if (word.front() == '?' || word.back() == '?' || base_s.find('*') != std::string::npos)
        throw ParseError(fmt::format("unknown directed tag in pattern token '{}'", word));
    }
    if (!is_lower_alpha(word))
      throw ParseError(fmt::format("malformed pattern token '{}'", word));
    PatternToken p;
    p.kind = PatternToken::Kind::Plain;
    p.name = word;
    query.tokens.push_back(p);
  }
  return query;
}

MatchResult match_label_query(const LabelSequence& seq, const LabelQuery& query) {
  MatchResult result;
  size_t pos = 0;
  for (const auto& pat : query.tokens) {
    bool found = false;
    for (; pos < seq.tokens.size(); ++pos) {
      if (pat.matches(seq.tokens[pos])) {
        result.spans.push_back(pos);
        ++pos;
        found = true;
        break;
      }
    }
    if (!found) {
      result.spans.clear();
      return result;
    }
  }
  result.matched = true;
  return result;
}

MatchResult match_label_query(const LabelSequence& seq, const std::string& pattern,
                              const TagRegistry& registry) {
  return match_label_query(seq, parse_label_query(pattern, registry));
}

}  // namespace seqann::labels
