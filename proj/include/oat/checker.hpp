#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "oat/hlpsl.hpp"
#include "oat/trace.hpp"

namespace oat {

struct Bounds {
  /// Number of environment session calls to run; calls are reused in order
  /// when this exceeds how many the environment declares.
  std::size_t sessions = 1;
  /// Maximum number of transitions fired along any path.
  std::size_t depth = 12;
};

struct CheckOptions {
  Bounds bounds;
  bool injective = true;
  /// Worker threads for successor generation. Results do not depend on it.
  std::size_t jobs = 1;
  /// Restrict to these goals; empty means every declared goal.
  std::vector<std::string> goals;
  /// Terms that must stay out of the intruder's reach.
  std::vector<Term> secrets;
};

/// One fired transition on an attack path.
struct Step {
  std::size_t instance = 0;
  std::string instance_name;
  std::string transition;
  std::optional<Term> input;
  std::optional<Term> output;
  std::vector<GroundEvent> events;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Safe {
  std::size_t states_explored = 0;
  std::size_t depth_reached = 0;
};

struct Attack {
  std::string goal;
  std::string description;
  std::vector<Step> steps;
};

using Verdict = std::variant<Safe, Attack>;

struct GoalVerdict {
  std::string goal;
  Verdict verdict;
};

struct CheckReport {
  std::vector<GoalVerdict> goals;
  std::size_t states_explored = 0;
  std::size_t depth_reached = 0;

  bool safe() const;
  const GoalVerdict* find(std::string_view goal) const;
};

/// Goal name used for a secrecy target.
std::string secrecy_goal(const Term& secret);

/// Initial role instances for the bounds, with intruder-played roles left out.
std::vector<RoleInstance> initial_instances(const hlpsl::LoweredModel& model, const Bounds& bounds);

/// Intruder knowledge at the start: the declared set plus its own name, a
/// nonce of its own and the start token.
KnowledgeSet initial_knowledge(const hlpsl::LoweredModel& model);

/// Bounded breadth-first search of all interleavings the intruder can force.
/// Attacks found are shortest in number of transitions.
CheckReport check(const hlpsl::LoweredModel& model, const CheckOptions& options = {});

/// Agreement check over a finished event log: each request(A,B,id,v) needs a
/// witness(B,A,id,v), a distinct one per request when `injective`. Requests
/// aimed at the intruder are ignored. Returns one message per violation.
std::vector<std::string> check_correspondence(const std::vector<GroundEvent>& events,
                                              const std::vector<std::string>& goals, bool injective);

/// Secrets reachable from `knowledge`.
std::vector<Term> check_secrecy(const KnowledgeSet& knowledge, const std::vector<Term>& secrets);

/// Role events recorded in a simulator trace.
std::vector<GroundEvent> ground_events(const Trace& trace);

/// Re-executes an attack from the initial state using `step` and the
/// deduction engine. Returns an empty string on success, otherwise why the
/// replay diverged.
std::string replay(const hlpsl::LoweredModel& model, const CheckOptions& options, const Attack& attack);

/// Attack path in the JSONL trace format: the intruder delivers each input
/// and receives each output. A transition without input shows as a local
/// `fire` event.
Trace attack_trace(const Attack& attack);

/// Rebuilds an attack from its exported trace so it can be replayed. Throws
/// TraceFormatError when the trace does not describe a run of this model.
Attack attack_from_trace(const hlpsl::LoweredModel& model, const Bounds& bounds, const std::string& goal,
                         const Trace& trace);

/// Runs session `session_index` with a pass-through network: every output is
/// queued and handed to the first instance that accepts it. Returns the
/// messages in send order.
std::vector<Term> honest_run(const hlpsl::LoweredModel& model, std::size_t session_index = 0,
                             std::size_t max_steps = 64);

}  // namespace oat
