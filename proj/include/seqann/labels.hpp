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

#ifndef SEQANN_LABELS_HPP
#define SEQANN_LABELS_HPP

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seqann/diagnostics.hpp"

namespace seqann::labels {

// Shortclip label vocabulary. Directed tags carry a transmitter prefix and a
// recipient suffix ('h' = human, 'p' = robot); pairable tags additionally
// admit a first/second pair-part digit.
struct TagRegistry {
  std::set<std::string> directed;
  std::set<std::string> plain;
  std::set<std::string> pairable;  // subset of directed

  // Canonical tags named in the labelling scheme, user-extensible via config.
  static TagRegistry defaults();

  // Config file: one tag per line under [directed] / [plain] / [pairable]
  // sections. '#' starts a comment. Unknown sections are ignored so the same
  // file can carry the action-category sections used by the sequence engine.
  static TagRegistry load(const std::string& text);

  std::string serialize() const;

  // Checks the registry invariants (disjointness, pairable subset,
  // lowercase identifiers); throws ParseError on violation.
  void validate() const;
};

enum class Party : char { Human = 'h', Robot = 'p' };

inline char party_code(Party p) { return static_cast<char>(p); }

struct LabelToken {
  enum class Kind { Directed, Plain };
  Kind kind = Kind::Plain;
  // Directed
  Party transmitter = Party::Human;
  Party recipient = Party::Human;
  std::string base;
  int pair_part = 0;  // 0 = none, else 1 or 2
  // Plain
  std::string name;
  bool known = true;

  static LabelToken directed(Party t, std::string base, int part, Party r) {
    LabelToken tok;
    tok.kind = Kind::Directed;
    tok.transmitter = t;
    tok.recipient = r;
    tok.base = std::move(base);
    tok.pair_part = part;
    return tok;
  }
  static LabelToken plain(std::string name, bool known = true) {
    LabelToken tok;
    tok.kind = Kind::Plain;
    tok.name = std::move(name);
    tok.known = known;
    return tok;
  }

  std::string text() const;
  bool operator==(const LabelToken& o) const {
    if (kind != o.kind) return false;
    if (kind == Kind::Plain) return name == o.name;
    return transmitter == o.transmitter && recipient == o.recipient &&
           base == o.base && pair_part == o.pair_part;
  }
};

struct LabelSequence {
  std::vector<LabelToken> tokens;
  std::string source_text;

  bool operator==(const LabelSequence& o) const { return tokens == o.tokens; }
};

struct ParseResult {
  LabelSequence sequence;
  std::vector<Diagnostic> diagnostics;  // unknown-tag notes; never fatal
};

// Splits on commas, trims whitespace, and classifies each field. A field is
// Directed iff its first and last characters are in {h,p} and the interior
// (with any trailing pair digit split off) is a registered directed tag;
// anything else is Plain. Unknown plain names are kept and flagged.
// Throws ParseError for empty fields and illegal characters.
ParseResult parse_label_string(const std::string& text, const TagRegistry& registry);

// Canonical form: token texts joined by ", ". parse(serialize(s)) == s.
std::string serialize_label_sequence(const LabelSequence& seq);

// Non-blocking checks: unpaired pair parts, unknown tags, self-addressed
// directed tokens.
std::vector<Diagnostic> lint_labels(const LabelSequence& seq, const TagRegistry& registry);

// One element of a search pattern. '*' in the tag position matches any base
// (and any pair part); '?' in a party position matches either party. A bare
// '*' matches any token.
struct PatternToken {
  enum class Kind { Any, Directed, Plain };
  Kind kind = Kind::Any;
  std::optional<Party> transmitter;  // nullopt = '?'
  std::optional<Party> recipient;
  std::string base;                  // "*" = any base
  int pair_part = 0;                 // 0 = unspecified
  std::string name;                  // Plain

  bool matches(const LabelToken& tok) const;
};

struct LabelQuery {
  std::vector<PatternToken> tokens;
};

// Pattern syntax: whitespace-separated token patterns. Throws ParseError on
// malformed patterns.
LabelQuery parse_label_query(const std::string& pattern, const TagRegistry& registry);

struct MatchResult {
  bool matched = false;
  std::vector<size_t> spans;  // indices of matched tokens, in order
};

// Ordered subsequence match: every pattern token must match a distinct token
// of seq, in order. Empty pattern matches vacuously with empty spans.
MatchResult match_label_query(const LabelSequence& seq, const std::string& pattern,
                              const TagRegistry& registry);
MatchResult match_label_query(const LabelSequence& seq, const LabelQuery& query);

}  // namespace seqann::labels

#endif  // SEQANN_LABELS_HPP
