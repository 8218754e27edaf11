#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "oat/term.hpp"

namespace oat {

enum class VarKind : std::uint8_t { Agent, PublicKey, Channel, Nat, Text, Message, ProtocolId };

std::string_view to_string(VarKind kind);

struct Param {
  std::string name;
  VarKind kind;

  friend bool operator==(const Param&, const Param&) = default;
};

/// A term with variables. `{X}_K` is a single Enc node; it becomes aenc or
/// senc depending on what K is bound to.
struct Pattern {
  enum class Op : std::uint8_t { Var, Atom, Cat, Enc };

  Op op = Op::Atom;
  std::string var;
  bool primed = false;
  std::optional<Term> atom;
  std::vector<Pattern> args;

  static Pattern variable(std::string name, bool primed = false);
  static Pattern constant(Term t);
  static Pattern cat(Pattern l, Pattern r);
  static Pattern enc(Pattern body, Pattern key);

  friend bool operator==(const Pattern&, const Pattern&) = default;
};

/// Visits every variable occurrence in the pattern.
template <typename F>
void for_each_var(const Pattern& p, F&& f) {
  if (p.op == Pattern::Op::Var) {
    f(p);
    return;
  }
  for (const auto& a : p.args) for_each_var(a, f);
}

struct Event {
  enum class Kind : std::uint8_t { Witness, Request };

  Kind kind;
  std::string actor;
  std::string peer;
  std::string protocol_id;
  Pattern value;
  /// Written on the left-hand side of `=|>`.
  bool guard_side = false;

  friend bool operator==(const Event&, const Event&) = default;
};

struct GroundEvent {
  Event::Kind kind;
  std::string actor;
  std::string peer;
  std::string protocol_id;
  Term value;

  friend bool operator==(const GroundEvent&, const GroundEvent&) = default;
  friend auto operator<=>(const GroundEvent&, const GroundEvent&) = default;
};

struct Transition {
  std::string label;
  std::uint32_t from_state = 0;
  std::optional<Pattern> receive;
  std::vector<std::string> fresh;
  std::uint32_t to_state = 0;
  std::optional<Pattern> send;
  std::vector<Event> events;

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct RoleSpec {
  std::string name;
  std::vector<Param> params;
  std::string played_by;
  std::vector<Param> locals;
  std::string state_var = "State";
  std::uint32_t initial_state = 0;
  std::vector<Transition> transitions;

  const Param* find_var(std::string_view var) const;
  /// States named by transitions plus the initial state.
  std::set<std::uint32_t> states() const;
  /// States reachable from initial_state following from->to edges.
  std::set<std::uint32_t> reachable_states() const;

  friend bool operator==(const RoleSpec&, const RoleSpec&) = default;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runnable copy of a role: control state plus variable bindings.
struct RoleInstance {
  std::shared_ptr<const RoleSpec> spec;
  std::string name;
  std::uint64_t session = 0;
  std::uint32_t state = 0;
  std::map<std::string, Term> bindings;
  /// Private keys this instance can decrypt with.
  std::set<Term> held_keys;

  friend bool operator==(const RoleInstance& a, const RoleInstance& b) {
    return a.spec == b.spec && a.session == b.session && a.state == b.state && a.bindings == b.bindings;
  }
};

/// Binds parameters and prepares locals. Uninitialised `message` locals take
/// the value const(<lowercased name>), so roles that share a local name agree
/// on its value. Throws ModelError on an unbound parameter.
RoleInstance instantiate(std::shared_ptr<const RoleSpec> spec, const std::map<std::string, Term>& binding,
                         std::uint64_t session, std::string instance_name = {});

struct Fired {
  RoleInstance next;
  std::string transition;
  std::optional<Term> outgoing;
  std::vector<GroundEvent> events;
};

struct NoMatch {};

struct AmbiguousMatch {
  std::vector<std::string> transitions;
};

using StepResult = std::variant<Fired, NoMatch, AmbiguousMatch>;

/// The distinguished token that triggers `RCV(start)`.
Term start_token();

/// Fires the unique transition enabled by `incoming`. Pure.
StepResult step(const RoleInstance& inst, const std::optional<Term>& incoming);

/// Matches `pattern` against `term`, extending `bindings`. Encrypted parts
/// only open when the key is bound and, for aenc, its private key is held.
bool match(const RoleSpec& spec, const Pattern& pattern, const Term& term, std::map<std::string, Term>& bindings,
           const std::set<Term>& held_keys);

/// Ground term for `pattern` under `bindings`; throws ModelError when a
/// variable is unbound.
Term instantiate_pattern(const Pattern& pattern, const std::map<std::string, Term>& bindings);

/// Ground instance of `pattern`, or nullopt if some variable is unbound.
std::optional<Term> try_instantiate(const Pattern& pattern, const std::map<std::string, Term>& bindings);

}  // namespace oat
