#include <algorithm>
#include <cctype>
#include <sstream>

#include "oat/hlpsl.hpp"

namespace oat::hlpsl {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

void print_decls(std::ostream& os, const std::vector<Param>& decls) {
  for (std::size_t i = 0; i < decls.size();) {
    std::size_t j = i;
    while (j < decls.size() && decls[j].kind == decls[i].kind) ++j;
    if (i) os << ", ";
    for (std::size_t k = i; k < j; ++k) os << (k > i ? "," : "") << decls[k].name;
    os << " : " << to_string(decls[i].kind);
    i = j;
  }
}

void print_pattern(std::ostream& os, const Pattern& p) {
  switch (p.op) {
    case Pattern::Op::Var:
      os << p.var << (p.primed ? "'" : "");
      break;
    case Pattern::Op::Atom:
      os << p.atom->name();
      break;
    case Pattern::Op::Cat:
      if (p.args[0].op == Pattern::Op::Cat) {
        os << '(';
        print_pattern(os, p.args[0]);
        os << ')';
      } else {
        print_pattern(os, p.args[0]);
      }
      os << '.';
      print_pattern(os, p.args[1]);
      break;
    case Pattern::Op::Enc:
      os << '{';
      print_pattern(os, p.args[0]);
      os << "}_";
      if (p.args[1].op == Pattern::Op::Var || p.args[1].op == Pattern::Op::Atom) {
        print_pattern(os, p.args[1]);
      } else {
        os << '(';
        print_pattern(os, p.args[1]);
        os << ')';
      }
      break;
  }
}

void print_event(std::ostream& os, const Event& e) {
  os << (e.kind == Event::Kind::Witness ? "witness(" : "request(") << e.actor << ',' << e.peer << ','
     << e.protocol_id << ',';
  print_pattern(os, e.value);
  os << ')';
}

void print_calls(std::ostream& os, const std::vector<Call>& calls) {
  for (std::size_t i = 0; i < calls.size(); ++i) {
    os << (i ? "\n  /\\ " : "  ") << calls[i].role << '(';
    for (std::size_t k = 0; k < calls[i].args.size(); ++k) os << (k ? "," : "") << calls[i].args[k];
    os << ')';
  }
  os << '\n';
}

void print_role(std::ostream& os, const RoleSpec& r) {
  os << "role " << r.name << '(';
  print_decls(os, r.params);
  os << ")\nplayed_by " << r.played_by << " def=\n";
  if (!r.locals.empty()) {
    os << "local ";
    print_decls(os, r.locals);
    os << '\n';
  }
  os << "init " << r.state_var << " := " << r.initial_state << '\n';
  os << "transition\n";
  const Param* channel_in = nullptr;
  const Param* channel_out = nullptr;
  for (const auto& p : r.params) {
    if (p.kind != VarKind::Channel) continue;
    if (!channel_out) channel_out = &p;
    else if (!channel_in) channel_in = &p;
  }
  std::string snd = channel_out ? channel_out->name : "SND";
  std::string rcv = channel_in ? channel_in->name : snd;
  for (const auto& t : r.transitions) {
    os << t.label << ". " << r.state_var << " = " << t.from_state;
    if (t.receive) {
      os << " /\\ " << rcv << '(';
      print_pattern(os, *t.receive);
      os << ')';
    }
    for (const auto& e : t.events) {
      if (!e.guard_side) continue;
      os << " /\\ ";
      print_event(os, e);
    }
    os << " =|>\n   " << r.state_var << "' := " << t.to_state;
    for (const auto& f : t.fresh) os << " /\\ " << f << "' := new()";
    if (t.send) {
      os << " /\\ " << snd << '(';
      print_pattern(os, *t.send);
      os << ')';
    }
    for (const auto& e : t.events) {
      if (e.guard_side) continue;
      os << " /\\ ";
      print_event(os, e);
    }
    os << '\n';
  }
  os << "end role\n\n";
}

}  // namespace

std::string pretty_print(const SpecModel& m) {
  std::ostringstream os;
  for (const auto& r : m.basic_roles) print_role(os, r);
  for (const auto& s : m.session_roles) {
    os << "role " << s.name << '(';
    print_decls(os, s.params);
    os << ") def=\n";
    if (!s.locals.empty()) {
      os << "local ";
      print_decls(os, s.locals);
      os << '\n';
    }
    os << "composition\n";
    print_calls(os, s.composition);
    os << "end role\n\n";
  }
  const auto& env = m.environment;
  os << "role " << env.name << "() def=\n";
  if (!env.consts.empty()) {
    os << "const ";
    print_decls(os, env.consts);
    os << '\n';
  }
  if (!env.intruder_knowledge.empty()) {
    os << "intruder_knowledge = {";
    for (std::size_t i = 0; i < env.intruder_knowledge.size(); ++i) {
      os << (i ? "," : "") << env.intruder_knowledge[i];
    }
    os << "}\n";
  }
  os << "composition\n";
  print_calls(os, env.composition);
  os << "end role\n\ngoal\n";
  for (const auto& g : m.goals) os << "  authentication_on " << g.protocol_id << '\n';
  os << "end goal\n\n" << env.name << "()\n";
  return os.str();
}

namespace {

struct Lowering {
  const SpecModel& model;
  const LowerOptions& options;
  LoweredModel out;
  std::map<std::string, std::shared_ptr<const RoleSpec>> roles;
  std::map<std::string, VarKind> const_kinds;

  const SessionRole* find_session(const std::string& name) const {
    for (const auto& s : model.session_roles)
      if (s.name == name) return &s;
    return nullptr;
  }

  static bool is_intruder_key(const std::string& name) { return name == "ki"; }

  // Owner of a public_key constant: `ki` is the intruder's; others take the
  // name of the formal K<owner> parameter they are always passed as, falling
  // back to the constant name without its leading k.
  std::string key_owner(const std::string& name) const {
    if (is_intruder_key(name)) return std::string(intruder_agent);
    std::set<std::string> formals;
    for (const auto& call : model.environment.composition) {
      std::vector<Param> params;
      if (const SessionRole* s = find_session(call.role)) params = s->params;
      else if (const RoleSpec* r = model.find_role(call.role)) params = r->params;
      for (std::size_t i = 0; i < call.args.size() && i < params.size(); ++i) {
        if (call.args[i] == name) formals.insert(params[i].name);
      }
    }
    if (formals.size() == 1) {
      const std::string& f = *formals.begin();
      if (f.size() > 1 && (f[0] == 'K' || f[0] == 'k')) {
        std::string owner = lowercase(f.substr(1));
        if (is_identifier(owner)) return owner;
      }
    }
    std::string owner = name.size() > 1 && name[0] == 'k' ? name.substr(1) : name;
    return lowercase(owner);
  }

  Term constant_term(const std::string& name) {
    if (name == intruder_agent) return Term::agent(std::string(intruder_agent));
    auto it = const_kinds.find(name);
    if (it == const_kinds.end()) throw ModelError("undeclared constant " + name);
    switch (it->second) {
      case VarKind::Agent: return Term::agent(lowercase(name));
      case VarKind::PublicKey: return Term::pub_key(key_owner(name));
      case VarKind::Text: return Term::nonce(lowercase(name), 0);
      default: return Term::constant(lowercase(name));
    }
  }

  InstancePlan plan_instance(const Call& call, const std::map<std::string, Term>& scope) {
    auto role = roles.at(call.role);
    InstancePlan plan{role, {}, {}};
    for (std::size_t i = 0; i < role->params.size(); ++i) {
      const auto& arg = call.args.at(i);
      auto it = scope.find(arg);
      if (it == scope.end()) throw ModelError("unbound argument " + arg + " in call to " + call.role);
      plan.binding.emplace(role->params[i].name, it->second);
    }
    plan.played_by = plan.binding.at(role->played_by).name();
    return plan;
  }

  void run() {
    for (const auto& r : model.basic_roles) {
      auto spec = std::make_shared<const RoleSpec>(r);
      roles.emplace(r.name, spec);
      out.roles.push_back(spec);
    }
    out.goals = model.goals;
    for (const auto& c : model.environment.consts) const_kinds.emplace(c.name, c.kind);
    for (const auto& c : model.environment.consts) {
      if (c.kind == VarKind::PublicKey) out.key_constants.emplace(c.name, constant_term(c.name));
    }

    for (const auto& k : model.environment.intruder_knowledge) {
      Term t = constant_term(k);
      out.intruder_knowledge.insert(t);
      if (t.kind() == TermKind::PubKey && is_intruder_key(k) && options.intruder_private_key) {
        out.intruder_knowledge.insert(Term::priv_key(t.name()));
      }
    }

    std::map<std::string, Term> env_scope;
    for (const auto& c : model.environment.consts) env_scope.emplace(c.name, constant_term(c.name));
    env_scope.emplace(std::string(intruder_agent), constant_term(std::string(intruder_agent)));

    for (const auto& call : model.environment.composition) {
      SessionPlan plan{call, {}};
      if (const SessionRole* s = find_session(call.role)) {
        std::map<std::string, Term> scope;
        for (std::size_t i = 0; i < s->params.size(); ++i) scope.emplace(s->params[i].name, env_scope.at(call.args.at(i)));
        for (const auto& l : s->locals) scope.emplace(l.name, Term::constant(lowercase(l.name)));
        for (const auto& inner : s->composition) plan.instances.push_back(plan_instance(inner, scope));
      } else {
        plan.instances.push_back(plan_instance(call, env_scope));
      }
      out.sessions.push_back(std::move(plan));
    }
  }
};

}  // namespace

LoweredModel lower(const SpecModel& model, const LowerOptions& options) {
  Lowering l{model, options, {}, {}, {}};
  l.run();
  return std::move(l.out);
}

}  // namespace oat::hlpsl
