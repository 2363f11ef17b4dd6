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

#ifndef SEQANN_SEQUENCE_HPP
#define SEQANN_SEQUENCE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "seqann/diagnostics.hpp"
#include "seqann/tiers.hpp"

namespace seqann::seq {

// Action categories and what each category can satisfy. Group names expand
// to their members inside awaited sets, so a projection can await
// "offer_response" and be satisfied by any acceptance/rejection/request/
// question event.
struct CategoryRegistry {
  std::set<std::string> categories;
  std::map<std::string, std::set<std::string>> groups;

  static CategoryRegistry defaults();

  // Reads [categories] and [groups] sections; a group line is
  // "name = member member ...". Other sections are ignored.
  static CategoryRegistry load(const std::string& text);

  bool known(const std::string& name) const;
  // True iff an event of category `cat` satisfies a projection awaiting `awaited`.
  bool satisfies(const std::string& cat, const std::vector<std::string>& awaited) const;
};

// Two consecutive same-speaker actions separated by less than this belong to
// one turn (a micro-pause); a measured silence of >=200ms separates turns.
constexpr int64_t kTurnGapMs = 200;

// An event of this category opens a repair projection over the currently
// open projections instead of matching awaited sets.
inline const char* kRepairInit = "repair_init";
inline const char* kRepairAccount = "repair_account";

enum class Framework { Main, Byplay };

inline const char* framework_name(Framework f) { return f == Framework::Main ? "main" : "byplay"; }

// Threads are labelled A, B, C, ... then AA, AB, ... per participation
// framework family.
std::string thread_label(int ordinal);
int thread_ordinal(const std::string& label);  // throws on malformed label

struct ThreadRef {
  Framework family = Framework::Main;
  int ordinal = 0;

  std::string label() const { return thread_label(ordinal); }
  bool operator==(const ThreadRef&) const = default;
  bool operator<(const ThreadRef& o) const {
    if (family != o.family) return family < o.family;
    return ordinal < o.ordinal;
  }
};

struct ActionEvent {
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  std::string producer;
  Framework framework = Framework::Main;
  std::string category;
  std::vector<std::string> awaited_next;  // projection this action opens
};

// Replaces the awaited set of the projection open on `thread` at `at_ms`
// (the withdrawn-option case: an awaited alternative stops being relevant).
struct NarrowOp {
  int64_t at_ms = 0;
  ThreadRef thread;
  std::vector<std::string> new_awaited;
};

struct AbandonOp {
  int64_t at_ms = 0;
  ThreadRef thread;
  std::string reason;
};

using ReplayStep = std::variant<ActionEvent, NarrowOp, AbandonOp>;

int64_t step_time(const ReplayStep& s);

struct Span {
  int64_t start_ms = 0;
  int64_t end_ms = 0;
};

struct NarrowRecord {
  int64_t at_ms = 0;
  std::vector<std::string> awaited;
};

struct Projection {
  enum class Status { Open, Satisfied, Abandoned };

  int id = 0;           // global creation order, 1-based
  int family_rank = 0;  // creation order within the framework family
  ThreadRef thread;
  int opened_by = -1;  // index into ledger.events
  std::vector<std::string> awaited;  // current (after narrowing)
  std::vector<std::string> original_awaited;
  bool is_repair = false;
  std::vector<int> repair_targets;  // projection ids open at repair creation

  Status status = Status::Open;
  int satisfied_by = -1;          // event index
  std::string abandon_reason;
  int64_t open_ms = 0;            // opener's end: when awaiting begins
  int64_t close_ms = -1;          // satisfier's start / abandon time
  int open_step = 0;              // global effect-order counters; the ground
  int close_step = -1;            // truth for allocation-order questions
  std::vector<int> delays;        // byplay event indices recorded while open
  std::vector<NarrowRecord> narrows;

  bool open() const { return status == Status::Open; }
};

struct Effect {
  enum class Kind {
    Opened,
    Satisfied,
    RepairResolved,  // repair satisfied because a target completed
    Delayed,
    Abandoned,
    Narrowed,
    Unattached,  // candidate new action: satisfied nothing, opened nothing
  };
  Kind kind;
  int step = 0;
  int64_t at_ms = 0;
  int projection_id = 0;  // 0 when not applicable
  int event_index = -1;
  std::string detail;
};

const char* effect_kind_name(Effect::Kind k);

struct ThreadState {
  ThreadRef ref;
  std::vector<int> projection_ids;
};

struct SilenceClass {
  Span span;
  bool lapse = false;  // true: no main projection open during the span
  // thread label -> awaited categories, for each open main projection
  std::vector<std::pair<std::string, std::vector<std::string>>> awaiting;
};

struct ThreadLedger {
  CategoryRegistry registry;
  std::vector<ActionEvent> events;
  std::vector<Projection> projections;  // indexed by id-1
  std::vector<ThreadState> main_threads;
  std::vector<ThreadState> byplay_threads;
  std::vector<Effect> effects;
  std::vector<SilenceClass> silences;
  std::vector<Diagnostic> diagnostics;

  int next_step = 1;
  int64_t last_time = INT64_MIN;

  const Projection* find_open(ThreadRef t) const;
  Projection& projection(int id);
  const Projection& projection(int id) const;

  // Lowest-ordinal thread of the family with no open projection; extends the
  // family when all are busy.
  ThreadRef allocate_thread(Framework family);

  void apply(const ActionEvent& e);
  void apply(const NarrowOp& op);
  // Throws UsageError if the thread holds no open projection.
  void apply(const AbandonOp& op);
  void apply(const ReplayStep& step);

  // Throws UsageError unless the projection is open.
  void abandon_projection(int id, const std::string& reason, int64_t at_ms);

  // Abandons every open projection (both families) with the given reason.
  void close_out(int64_t at_ms, const std::string& reason = "clip_end");

  // ResponseGap vs Lapse for a silence span; throws if the span overlaps an
  // applied event.
  SilenceClass classify_silence(Span span) const;

  // End-of-replay diagnostics (unresolved projections).
  void finish();
};

struct ReplayInput {
  std::vector<ReplayStep> steps;    // must be ordered by step_time
  std::vector<Span> silences;
  bool close_out = false;
  int64_t close_out_at_ms = -1;     // -1: after the last event
};

// Deterministic fold of the steps; silences are classified against the
// resulting projection intervals. Throws UsageError on out-of-order steps.
ThreadLedger replay(const CategoryRegistry& registry, const ReplayInput& input);

// Canonical text dump; byte-identical for equal ledgers (the determinism and
// round-trip checks compare these).
std::string serialize_ledger(const ThreadLedger& ledger);

// Temporal rendering of the main framework: "<Participant><rank>" per action
// (rank of the projection it satisfies, else the one it opens, else '?'),
// '+' within a turn, "->" between turns, wrapped in [ ].
std::string stacking_string(const ThreadLedger& ledger);

// Tier representation. Projections render as wait(...)/repair() segments on
// seqthread@X / byplay@X tiers (narrowed spans as narrow(...), abandonment as
// a 1 ms abandon(reason) marker); actions render as act(producer,category
// [,byplay]) segments on speech@<producer> tiers; classified silences render
// on a "silences" tier. timeline_ms <= 0 means "last event end + 1000".
tiers::AnnotationDocument export_to_tiers(const ThreadLedger& ledger,
                                          const std::string& session_id,
                                          int64_t timeline_ms = -1);

// Inverts export_to_tiers: reconstructs the replay input from a document
// following the tier convention. Throws ParseError for values that do not
// match the act/wait/narrow/abandon/repair grammar, naming the segment.
ReplayInput import_from_tiers(const tiers::AnnotationDocument& doc,
                              const CategoryRegistry& registry);

}  // namespace seqann::seq

#endif  // SEQANN_SEQUENCE_HPP
