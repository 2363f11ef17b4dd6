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

#ifndef SEQANN_DIAGNOSTICS_HPP
#define SEQANN_DIAGNOSTICS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace seqann {

enum class Severity { Info, Warning, Error };

// A non-fatal finding attached to some location in the input. Parsers throw
// ParseError for unrecoverable syntax problems and collect Diagnostics for
// everything that can be reported without aborting.
struct Diagnostic {
  Severity severity = Severity::Warning;
  std::string code;      // stable machine-readable id, e.g. "unpaired_pair_part"
  std::string message;   // human-readable detail
  std::string location;  // free-form: "field 3", "line 12", "tier seqthread@A"

  bool is_error() const { return severity == Severity::Error; }
};

inline const char* severity_name(Severity s) {
  switch (s) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Error: return "error";
  }
  return "?";
}

inline bool has_errors(const std::vector<Diagnostic>& ds) {
  for (const auto& d : ds)
    if (d.is_error()) return true;
  return false;
}

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what, std::string where = {})
      : std::runtime_error(where.empty() ? what : what + " (" + where + ")"),
        location(std::move(where)) {}
  std::string location;
};

// Violation of an operation precondition (unknown line, projection not open,
// out-of-order event, ...).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace seqann

#endif  // SEQANN_DIAGNOSTICS_HPP
