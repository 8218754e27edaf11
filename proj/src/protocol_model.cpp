#include "oat/protocol_model.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace oat {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool kind_accepts(VarKind kind, const Term& t) {
  switch (kind) {
    case VarKind::Agent: return t.kind() == TermKind::Agent;
    case VarKind::PublicKey: return t.kind() == TermKind::PubKey;
    case VarKind::Text: return t.kind() == TermKind::Nonce;
    case VarKind::Message: return true;
    case VarKind::Channel:
    case VarKind::ProtocolId: return t.kind() == TermKind::Const;
    case VarKind::Nat: return false;
  }
  return false;
}

void flatten_term(const Term& t, std::vector<Term>& out) {
  const Term* cur = &t;
  while (cur->kind() == TermKind::Concat) {
    out.push_back(cur->left());
    cur = &cur->right();
  }
  out.push_back(*cur);
}

void flatten_pattern(const Pattern& p, std::vector<const Pattern*>& out) {
  const Pattern* cur = &p;
  while (cur->op == Pattern::Op::Cat) {
    flatten_pattern(cur->args[0], out);
    cur = &cur->args[1];
  }
  out.push_back(cur);
}

struct Matcher {
  const RoleSpec& spec;
  const std::set<Term>& held_keys;

  VarKind kind_of(const std::string& var) const {
    const Param* p = spec.find_var(var);
    if (!p) throw ModelError("role " + spec.name + ": unknown variable " + var);
    return p->kind;
  }

  bool can_absorb_many(const Pattern& p, const std::map<std::string, Term>& b) const {
    if (p.op != Pattern::Op::Var || kind_of(p.var) != VarKind::Message) return false;
    if (p.primed) return true;
    auto it = b.find(p.var);
    return it == b.end() || it->second.kind() == TermKind::Concat;
  }

  bool seq(const std::vector<const Pattern*>& pats, std::size_t i, const std::vector<Term>& items, std::size_t j,
           std::map<std::string, Term>& b) const {
    if (i == pats.size()) return j == items.size();
    std::size_t remaining_pats = pats.size() - i - 1;
    if (items.size() - j < remaining_pats + 1) return false;
    std::size_t max_len = items.size() - j - remaining_pats;
    std::size_t min_len = remaining_pats == 0 ? max_len : 1;
    if (!can_absorb_many(*pats[i], b)) {
      if (min_len > 1) return false;
      max_len = 1;
    }
    for (std::size_t len = min_len; len <= max_len; ++len) {
      Term piece = Term::cat(std::span<const Term>(items.data() + j, len));
      auto trial = b;
      if (one(*pats[i], piece, trial) && seq(pats, i + 1, items, j + len, trial)) {
        b = std::move(trial);
        return true;
      }
    }
    return false;
  }

  bool one(const Pattern& p, const Term& t, std::map<std::string, Term>& b) const {
    switch (p.op) {
      case Pattern::Op::Atom:
        return *p.atom == t;
      case Pattern::Op::Var: {
        auto it = b.find(p.var);
        if (!p.primed && it != b.end()) return it->second == t;
        if (!kind_accepts(kind_of(p.var), t)) return false;
        b.insert_or_assign(p.var, t);
        return true;
      }
      case Pattern::Op::Cat: {
        std::vector<const Pattern*> pats;
        flatten_pattern(p, pats);
        std::vector<Term> items;
        flatten_term(t, items);
        return seq(pats, 0, items, 0, b);
      }
      case Pattern::Op::Enc: {
        if (t.kind() != TermKind::AEnc && t.kind() != TermKind::SEnc) return false;
        bool ground = true;
        for_each_var(p, [&](const Pattern& v) {
          if (v.primed || !b.count(v.var)) ground = false;
        });
        if (ground) return instantiate_pattern(p, b) == t;
        auto key = try_primed_free(p.args[1], b);
        if (!key || *key != t.key()) return false;
        if (t.kind() == TermKind::AEnc && !held_keys.count(Term::priv_key(key->name()))) return false;
        return one(p.args[0], t.body(), b);
      }
    }
    return false;
  }

  // The key must be fully known before decryption: primed or unbound
  // variables in key position block the match.
  static std::optional<Term> try_primed_free(const Pattern& key, const std::map<std::string, Term>& b) {
    bool ok = true;
    for_each_var(key, [&](const Pattern& v) {
      if (v.primed || !b.count(v.var)) ok = false;
    });
    if (!ok) return std::nullopt;
    return try_instantiate(key, b);
  }
};

void collect_keys(const Pattern& p, const std::map<std::string, Term>& b, std::set<Term>& out) {
  if (p.op == Pattern::Op::Enc) {
    const Pattern& key = p.args[1];
    if (key.op == Pattern::Op::Var) {
      auto it = b.find(key.var);
      if (it != b.end() && it->second.kind() == TermKind::PubKey) out.insert(Term::priv_key(it->second.name()));
    } else if (key.op == Pattern::Op::Atom && key.atom->kind() == TermKind::PubKey) {
      out.insert(Term::priv_key(key.atom->name()));
    }
  }
  for (const auto& a : p.args) collect_keys(a, b, out);
}

}  // namespace

std::string_view to_string(VarKind kind) {
  switch (kind) {
    case VarKind::Agent: return "agent";
    case VarKind::PublicKey: return "public_key";
    case VarKind::Channel: return "channel(dy)";
    case VarKind::Nat: return "nat";
    case VarKind::Text: return "text";
    case VarKind::Message: return "message";
    case VarKind::ProtocolId: return "protocol_id";
  }
  return "?";
}

Pattern Pattern::variable(std::string name, bool primed) {
  Pattern p;
  p.op = Op::Var;
  p.var = std::move(name);
  p.primed = primed;
  return p;
}

Pattern Pattern::constant(Term t) {
  Pattern p;
  p.op = Op::Atom;
  p.atom = std::move(t);
  return p;
}

Pattern Pattern::cat(Pattern l, Pattern r) {
  Pattern p;
  p.op = Op::Cat;
  p.args = {std::move(l), std::move(r)};
  return p;
}

Pattern Pattern::enc(Pattern body, Pattern key) {
  Pattern p;
  p.op = Op::Enc;
  p.args = {std::move(body), std::move(key)};
  return p;
}

const Param* RoleSpec::find_var(std::string_view var) const {
  for (const auto& p : params)
    if (p.name == var) return &p;
  for (const auto& p : locals)
    if (p.name == var) return &p;
  return nullptr;
}

std::set<std::uint32_t> RoleSpec::states() const {
  std::set<std::uint32_t> out{initial_state};
  for (const auto& t : transitions) {
    out.insert(t.from_state);
    out.insert(t.to_state);
  }
  return out;
}

std::set<std::uint32_t> RoleSpec::reachable_states() const {
  std::set<std::uint32_t> seen{initial_state};
  std::vector<std::uint32_t> work{initial_state};
  while (!work.empty()) {
    auto s = work.back();
    work.pop_back();
    for (const auto& t : transitions) {
      if (t.from_state == s && seen.insert(t.to_state).second) work.push_back(t.to_state);
    }
  }
  return seen;
}

Term start_token() { return Term::constant("start"); }

RoleInstance instantiate(std::shared_ptr<const RoleSpec> spec, const std::map<std::string, Term>& binding,
                         std::uint64_t session, std::string instance_name) {
  RoleInstance inst;
  for (const auto& p : spec->params) {
    auto it = binding.find(p.name);
    if (it == binding.end()) throw ModelError("role " + spec->name + ": unbound parameter " + p.name);
    if (!kind_accepts(p.kind, it->second)) {
      throw ModelError("role " + spec->name + ": parameter " + p.name + " expects " +
                       std::string(to_string(p.kind)) + ", got " + encode(it->second));
    }
    inst.bindings.emplace(p.name, it->second);
  }
  for (const auto& l : spec->locals) {
    if (l.kind == VarKind::Message) inst.bindings.emplace(l.name, Term::constant(lowercase(l.name)));
  }
  for (const auto& t : spec->transitions) {
    if (t.receive) collect_keys(*t.receive, inst.bindings, inst.held_keys);
  }
  inst.session = session;
  inst.state = spec->initial_state;
  inst.name = instance_name.empty() ? spec->name + "#" + std::to_string(session) : std::move(instance_name);
  inst.spec = std::move(spec);
  return inst;
}

bool match(const RoleSpec& spec, const Pattern& pattern, const Term& term, std::map<std::string, Term>& bindings,
           const std::set<Term>& held_keys) {
  Matcher m{spec, held_keys};
  auto trial = bindings;
  if (!m.one(pattern, term, trial)) return false;
  bindings = std::move(trial);
  return true;
}

std::optional<Term> try_instantiate(const Pattern& p, const std::map<std::string, Term>& b) {
  switch (p.op) {
    case Pattern::Op::Atom:
      return *p.atom;
    case Pattern::Op::Var: {
      auto it = b.find(p.var);
      if (it == b.end()) return std::nullopt;
      return it->second;
    }
    case Pattern::Op::Cat: {
      auto l = try_instantiate(p.args[0], b);
      auto r = try_instantiate(p.args[1], b);
      if (!l || !r) return std::nullopt;
      return Term::concat(std::move(*l), std::move(*r));
    }
    case Pattern::Op::Enc: {
      auto body = try_instantiate(p.args[0], b);
      auto key = try_instantiate(p.args[1], b);
      if (!body || !key) return std::nullopt;
      if (key->kind() == TermKind::PubKey) return Term::aenc(std::move(*body), std::move(*key));
      return Term::senc(std::move(*body), std::move(*key));
    }
  }
  return std::nullopt;
}

Term instantiate_pattern(const Pattern& p, const std::map<std::string, Term>& b) {
  auto t = try_instantiate(p, b);
  if (!t) {
    std::string missing;
    for_each_var(p, [&](const Pattern& v) {
      if (!b.count(v.var) && missing.empty()) missing = v.var;
    });
    throw ModelError("unbound variable " + missing);
  }
  return std::move(*t);
}

StepResult step(const RoleInstance& inst, const std::optional<Term>& incoming) {
  const RoleSpec& spec = *inst.spec;
  std::vector<std::pair<const Transition*, std::map<std::string, Term>>> enabled;
  for (const auto& t : spec.transitions) {
    if (t.from_state != inst.state) continue;
    if (!t.receive) {
      if (!incoming) enabled.emplace_back(&t, inst.bindings);
      continue;
    }
    if (!incoming) continue;
    auto b = inst.bindings;
    if (match(spec, *t.receive, *incoming, b, inst.held_keys)) enabled.emplace_back(&t, std::move(b));
  }
  if (enabled.empty()) return NoMatch{};
  if (enabled.size() > 1) {
    AmbiguousMatch amb;
    for (const auto& [t, _] : enabled) amb.transitions.push_back(t->label);
    return amb;
  }

  const auto& [t, bound] = enabled.front();
  Fired fired{inst, t->label, std::nullopt, {}};
  fired.next.bindings = bound;
  for (const auto& var : t->fresh) {
    fired.next.bindings.insert_or_assign(var, Term::nonce(lowercase(var), inst.session));
  }
  const auto& b = fired.next.bindings;
  auto agent_name = [&](const std::string& var) {
    auto it = b.find(var);
    if (it == b.end() || it->second.kind() != TermKind::Agent) {
      throw ModelError("role " + spec.name + ": event argument " + var + " is not a bound agent");
    }
    return it->second.name();
  };
  for (const auto& e : t->events) {
    fired.events.push_back({e.kind, agent_name(e.actor), agent_name(e.peer), e.protocol_id,
                            instantiate_pattern(e.value, b)});
  }
  if (t->send) fired.outgoing = instantiate_pattern(*t->send, b);
  fired.next.state = t->to_state;
  return fired;
}

}  // namespace oat
