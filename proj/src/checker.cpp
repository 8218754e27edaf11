#include "oat/checker.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_set>

namespace oat {

namespace {

using hlpsl::LoweredModel;

// Messages the intruder can synthesise for one pattern grow as a product of
// pool sizes; past this many a subpattern stops being expanded.
constexpr std::size_t kCandidateCap = 20000;

struct State {
  std::vector<RoleInstance> instances;
  KnowledgeSet knowledge;
  std::vector<GroundEvent> history;
};

struct Node {
  std::size_t parent;
  Step step;
};

std::string event_text(const GroundEvent& e) {
  return std::string(e.kind == Event::Kind::Witness ? "witness(" : "request(") + e.actor + "," + e.peer + "," +
         e.protocol_id + "," + encode(e.value) + ")";
}

std::string state_key(const State& s) {
  std::string key;
  for (const auto& inst : s.instances) {
    key += std::to_string(inst.state);
    key += '[';
    for (const auto& [var, value] : inst.bindings) {
      key += var;
      key += '=';
      key += encode(value);
      key += ';';
    }
    key += ']';
  }
  key += '|';
  for (const auto& t : s.knowledge.terms()) {
    key += encode(t);
    key += ';';
  }
  key += '|';
  for (const auto& e : s.history) {
    key += event_text(e);
    key += ';';
  }
  return key;
}

struct Pools {
  std::vector<Term> agents, nonces, pub_keys, consts, all, encs;

  explicit Pools(const std::set<Term>& closure) {
    for (const auto& t : closure) {
      all.push_back(t);
      switch (t.kind()) {
        case TermKind::Agent: agents.push_back(t); break;
        case TermKind::Nonce: nonces.push_back(t); break;
        case TermKind::PubKey: pub_keys.push_back(t); break;
        case TermKind::Const: consts.push_back(t); break;
        case TermKind::AEnc:
        case TermKind::SEnc: encs.push_back(t); break;
        default: break;
      }
    }
  }

  const std::vector<Term>& for_kind(VarKind k) const {
    switch (k) {
      case VarKind::Agent: return agents;
      case VarKind::Text: return nonces;
      case VarKind::PublicKey: return pub_keys;
      case VarKind::Message: return all;
      default: return consts;
    }
  }
};

// Ground value of a pattern when it reads only bound, unprimed variables.
std::optional<Term> fixed_value(const Pattern& p, const RoleInstance& inst) {
  bool free = false;
  for_each_var(p, [&](const Pattern& v) {
    if (v.primed || !inst.bindings.count(v.var)) free = true;
  });
  if (free) return std::nullopt;
  return try_instantiate(p, inst.bindings);
}

std::vector<Term> fill(const Pattern& p, const RoleInstance& inst, const Pools& pools) {
  switch (p.op) {
    case Pattern::Op::Atom:
      return {*p.atom};
    case Pattern::Op::Var: {
      if (!p.primed) {
        auto it = inst.bindings.find(p.var);
        if (it != inst.bindings.end()) return {it->second};
      }
      const Param* decl = inst.spec->find_var(p.var);
      return pools.for_kind(decl ? decl->kind : VarKind::Message);
    }
    case Pattern::Op::Cat: {
      auto left = fill(p.args[0], inst, pools);
      auto right = fill(p.args[1], inst, pools);
      std::vector<Term> out;
      for (const auto& l : left) {
        for (const auto& r : right) {
          if (out.size() >= kCandidateCap) return out;
          out.push_back(Term::concat(l, r));
        }
      }
      return out;
    }
    case Pattern::Op::Enc: {
      auto key = fixed_value(p.args[1], inst);
      if (!key) return pools.encs;
      if (key->kind() == TermKind::PubKey && !inst.held_keys.count(Term::priv_key(key->name()))) return pools.encs;
      if (key->kind() == TermKind::PrivKey) return pools.encs;
      std::vector<Term> out;
      for (const auto& body : fill(p.args[0], inst, pools)) {
        out.push_back(key->kind() == TermKind::PubKey ? Term::aenc(body, *key) : Term::senc(body, *key));
      }
      return out;
    }
  }
  return {};
}

bool shape_fits(const Pattern& p, const Term& t) {
  switch (p.op) {
    case Pattern::Op::Atom: return *p.atom == t;
    case Pattern::Op::Var: return true;
    case Pattern::Op::Cat: return t.kind() == TermKind::Concat;
    case Pattern::Op::Enc: return t.kind() == TermKind::AEnc || t.kind() == TermKind::SEnc;
  }
  return false;
}

std::set<Term> candidates(const RoleInstance& inst, const State& s, const Pools& pools) {
  std::set<Term> out;
  const auto& closure = s.knowledge.terms();
  for (const auto& t : inst.spec->transitions) {
    if (t.from_state != inst.state || !t.receive) continue;
    for (const auto& k : closure)
      if (shape_fits(*t.receive, k)) out.insert(k);
    for (auto& c : fill(*t.receive, inst, pools))
      if (!out.count(c) && synthesizable(closure, c)) out.insert(std::move(c));
  }
  return out;
}

bool has_receive_free(const RoleInstance& inst) {
  for (const auto& t : inst.spec->transitions)
    if (t.from_state == inst.state && !t.receive) return true;
  return false;
}

struct Violation {
  std::string goal;
  std::string description;
};

class GoalTracker {
 public:
  GoalTracker(const LoweredModel& model, const CheckOptions& options) : injective_(options.injective) {
    if (options.goals.empty()) {
      for (const auto& g : model.goals) auth_.insert(g.protocol_id);
      for (const auto& s : options.secrets) secrets_.push_back(s);
    } else {
      for (const auto& name : options.goals) {
        bool matched = false;
        for (const auto& s : options.secrets) {
          if (secrecy_goal(s) == name) {
            secrets_.push_back(s);
            matched = true;
          }
        }
        if (!matched) auth_.insert(name);
      }
    }
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out(auth_.begin(), auth_.end());
    for (const auto& s : secrets_) out.push_back(secrecy_goal(s));
    return out;
  }

  /// Appends `events` to the history, reporting any request that breaks
  /// agreement, then checks the secrets against the new knowledge.
  std::vector<Violation> apply(State& s, const std::vector<GroundEvent>& events) const {
    std::vector<Violation> out;
    for (const auto& e : events) {
      if (e.kind == Event::Kind::Request && auth_.count(e.protocol_id) &&
          e.peer != hlpsl::intruder_agent) {
        std::size_t witnesses = 0;
        std::size_t requests = 1;
        for (const auto& h : s.history) {
          if (h.protocol_id != e.protocol_id || h.value != e.value) continue;
          if (h.kind == Event::Kind::Witness && h.actor == e.peer && h.peer == e.actor) ++witnesses;
          if (h.kind == Event::Kind::Request && h.actor == e.actor && h.peer == e.peer) ++requests;
        }
        if (witnesses == 0) {
          out.push_back({e.protocol_id, event_text(e) + " has no matching witness"});
        } else if (injective_ && requests > witnesses) {
          out.push_back({e.protocol_id, event_text(e) + " accepted " + std::to_string(requests) +
                                            " times against " + std::to_string(witnesses) + " witness(es)"});
        }
      }
      s.history.insert(std::upper_bound(s.history.begin(), s.history.end(), e), e);
    }
    for (const auto& secret : secrets_) {
      if (synthesizable(s.knowledge.terms(), secret)) {
        out.push_back({secrecy_goal(secret), "intruder derives " + encode(secret)});
      }
    }
    return out;
  }

 private:
  bool injective_;
  std::set<std::string> auth_;
  std::vector<Term> secrets_;
};

struct Successor {
  State state;
  Step step;
  std::string key;
  std::vector<Violation> violations;
};

std::vector<GroundEvent> ordered_events(std::vector<GroundEvent> events) {
  std::stable_partition(events.begin(), events.end(),
                        [](const GroundEvent& e) { return e.kind == Event::Kind::Witness; });
  return events;
}

std::vector<Successor> expand(const State& s, const GoalTracker& goals) {
  std::vector<Successor> out;
  Pools pools(s.knowledge.terms());
  for (std::size_t i = 0; i < s.instances.size(); ++i) {
    const RoleInstance& inst = s.instances[i];
    std::vector<std::optional<Term>> inputs;
    if (has_receive_free(inst)) inputs.emplace_back(std::nullopt);
    for (const auto& c : candidates(inst, s, pools)) inputs.emplace_back(c);
    for (const auto& input : inputs) {
      StepResult r = step(inst, input);
      if (std::holds_alternative<NoMatch>(r)) continue;
      if (auto* amb = std::get_if<AmbiguousMatch>(&r)) {
        std::string names;
        for (const auto& t : amb->transitions) names += (names.empty() ? "" : ", ") + t;
        throw ModelError("role " + inst.name + " has overlapping transitions " + names);
      }
      Fired& f = std::get<Fired>(r);
      Successor succ{s, {}, {}, {}};
      succ.state.instances[i] = std::move(f.next);
      if (f.outgoing) {
        succ.state.knowledge.insert(*f.outgoing);
        succ.state.knowledge = analyze(succ.state.knowledge);
      }
      auto events = ordered_events(f.events);
      succ.violations = goals.apply(succ.state, events);
      succ.step = Step{i, inst.name, f.transition, input, f.outgoing, std::move(events)};
      succ.key = state_key(succ.state);
      out.push_back(std::move(succ));
    }
  }
  return out;
}

std::vector<std::vector<Successor>> expand_level(const std::vector<State>& frontier, const GoalTracker& goals,
                                                 std::size_t jobs) {
  std::vector<std::vector<Successor>> out(frontier.size());
  if (jobs <= 1 || frontier.size() < 2) {
    for (std::size_t i = 0; i < frontier.size(); ++i) out[i] = expand(frontier[i], goals);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= frontier.size()) return;
      try {
        out[i] = expand(frontier[i], goals);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  std::size_t n = std::min(jobs, frontier.size());
  pool.reserve(n);
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<Step> path_to(const std::vector<Node>& nodes, std::size_t index) {
  std::vector<Step> steps;
  while (index != 0) {
    steps.push_back(nodes[index].step);
    index = nodes[index].parent;
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

}  // namespace

bool CheckReport::safe() const {
  return std::all_of(goals.begin(), goals.end(),
                     [](const GoalVerdict& g) { return std::holds_alternative<Safe>(g.verdict); });
}

const GoalVerdict* CheckReport::find(std::string_view goal) const {
  for (const auto& g : goals)
    if (g.goal == goal) return &g;
  return nullptr;
}

std::string secrecy_goal(const Term& secret) { return "secrecy_of:" + encode(secret); }

std::vector<RoleInstance> initial_instances(const LoweredModel& model, const Bounds& bounds) {
  std::vector<RoleInstance> out;
  if (model.sessions.empty()) return out;
  for (std::size_t k = 0; k < bounds.sessions; ++k) {
    const auto& plan = model.sessions[k % model.sessions.size()];
    for (const auto& ip : plan.instances) {
      if (ip.played_by == hlpsl::intruder_agent) continue;
      std::uint64_t session = k + 1;
      out.push_back(instantiate(ip.role, ip.binding, session, ip.role->name + "_" + std::to_string(session)));
    }
  }
  return out;
}

KnowledgeSet initial_knowledge(const LoweredModel& model) {
  KnowledgeSet k = model.intruder_knowledge;
  k.insert(Term::agent(std::string(hlpsl::intruder_agent)));
  k.insert(Term::nonce("ni", 0));
  k.insert(start_token());
  return analyze(k);
}

CheckReport check(const LoweredModel& model, const CheckOptions& options) {
  GoalTracker goals(model, options);
  CheckReport report;
  std::map<std::string, std::optional<Attack>> found;
  for (const auto& g : goals.names()) found.emplace(g, std::nullopt);

  State init{initial_instances(model, options.bounds), initial_knowledge(model), {}};
  std::vector<Node> nodes{{0, {}}};
  std::unordered_set<std::string> visited{state_key(init)};
  std::vector<State> frontier{std::move(init)};
  std::vector<std::size_t> frontier_nodes{0};

  auto open_goals = [&] {
    return std::any_of(found.begin(), found.end(), [](const auto& kv) { return !kv.second.has_value(); });
  };

  for (std::size_t level = 1; level <= options.bounds.depth && !frontier.empty() && open_goals(); ++level) {
    auto expanded = expand_level(frontier, goals, options.jobs);
    std::vector<std::pair<std::string, std::size_t>> next_keys;
    std::vector<State> next;
    for (std::size_t i = 0; i < expanded.size(); ++i) {
      for (auto& succ : expanded[i]) {
        std::size_t parent = frontier_nodes[i];
        if (!succ.violations.empty()) {
          std::vector<Step> steps;
          for (const auto& v : succ.violations) {
            auto& slot = found.at(v.goal);
            if (slot) continue;
            if (steps.empty()) {
              steps = path_to(nodes, parent);
              steps.push_back(succ.step);
            }
            slot = Attack{v.goal, v.description, steps};
          }
        }
        if (!visited.insert(succ.key).second) continue;
        nodes.push_back({parent, std::move(succ.step)});
        next_keys.emplace_back(std::move(succ.key), nodes.size() - 1);
        next.push_back(std::move(succ.state));
      }
    }
    if (next.empty()) break;
    report.depth_reached = level;
    std::vector<std::size_t> order(next.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return next_keys[a].first < next_keys[b].first; });
    frontier.clear();
    frontier_nodes.clear();
    for (std::size_t i : order) {
      frontier.push_back(std::move(next[i]));
      frontier_nodes.push_back(next_keys[i].second);
    }
  }

  report.states_explored = visited.size();
  for (auto& [goal, attack] : found) {
    if (attack) report.goals.push_back({goal, std::move(*attack)});
    else report.goals.push_back({goal, Safe{report.states_explored, report.depth_reached}});
  }
  return report;
}

std::vector<std::string> check_correspondence(const std::vector<GroundEvent>& events,
                                              const std::vector<std::string>& goals, bool injective) {
  std::vector<std::string> out;
  std::set<std::string> wanted(goals.begin(), goals.end());
  std::map<std::tuple<std::string, std::string, std::string, Term>, std::size_t> witnesses, requests;
  for (const auto& e : events) {
    if (!wanted.empty() && !wanted.count(e.protocol_id)) continue;
    if (e.kind == Event::Kind::Witness) {
      ++witnesses[{e.actor, e.peer, e.protocol_id, e.value}];
      continue;
    }
    if (e.peer == hlpsl::intruder_agent) continue;
    std::size_t req = ++requests[{e.actor, e.peer, e.protocol_id, e.value}];
    auto it = witnesses.find({e.peer, e.actor, e.protocol_id, e.value});
    std::size_t wit = it == witnesses.end() ? 0 : it->second;
    if (wit == 0) out.push_back(event_text(e) + " has no matching witness");
    else if (injective && req > wit) out.push_back(event_text(e) + " accepted more often than witnessed");
  }
  return out;
}

std::vector<Term> check_secrecy(const KnowledgeSet& knowledge, const std::vector<Term>& secrets) {
  KnowledgeSet closure = knowledge.analyzed() ? knowledge : analyze(knowledge);
  std::vector<Term> out;
  for (const auto& s : secrets)
    if (synthesizable(closure.terms(), s)) out.push_back(s);
  return out;
}

std::vector<GroundEvent> ground_events(const Trace& trace) {
  std::vector<GroundEvent> out;
  for (const auto* e : trace.of_kind(TraceEvent::Kind::RoleEvent)) {
    if (!e->term) continue;
    auto kind = e->detail == "witness" ? Event::Kind::Witness : Event::Kind::Request;
    out.push_back({kind, e->from, e->to, e->msg, *e->term});
  }
  return out;
}

std::string replay(const LoweredModel& model, const CheckOptions& options, const Attack& attack) {
  GoalTracker goals(model, options);
  State s{initial_instances(model, options.bounds), initial_knowledge(model), {}};
  bool violated = false;
  for (std::size_t n = 0; n < attack.steps.size(); ++n) {
    const Step& st = attack.steps[n];
    std::string where = "step " + std::to_string(n + 1) + ": ";
    if (st.instance >= s.instances.size()) return where + "no such instance";
    if (st.input && !synthesizable(s.knowledge.terms(), *st.input)) {
      return where + "intruder cannot derive " + encode(*st.input);
    }
    StepResult r = step(s.instances[st.instance], st.input);
    auto* f = std::get_if<Fired>(&r);
    if (!f) return where + "transition does not fire";
    if (f->transition != st.transition) return where + "fired " + f->transition + " instead of " + st.transition;
    if (f->outgoing != st.output) return where + "output differs";
    s.instances[st.instance] = std::move(f->next);
    if (f->outgoing) {
      s.knowledge.insert(*f->outgoing);
      s.knowledge = analyze(s.knowledge);
    }
    auto events = ordered_events(f->events);
    if (events != st.events) return where + "events differ";
    for (const auto& v : goals.apply(s, events))
      if (v.goal == attack.goal) violated = true;
  }
  return violated ? std::string() : "goal " + attack.goal + " is not violated at the end";
}

Trace attack_trace(const Attack& attack) {
  Trace t;
  for (const auto& st : attack.steps) {
    if (st.input) t.add(TraceEvent::Kind::Injected, "I", st.instance_name, st.transition, st.input);
    else t.add(TraceEvent::Kind::Local, "I", st.instance_name, st.transition, std::nullopt, "fire");
    for (const auto& e : st.events) {
      t.add(TraceEvent::Kind::RoleEvent, e.actor, e.peer, e.protocol_id, e.value,
            e.kind == Event::Kind::Witness ? "witness" : "request");
    }
    if (st.output) t.add(TraceEvent::Kind::Sent, st.instance_name, "I", st.transition, st.output);
  }
  return t;
}

Attack attack_from_trace(const LoweredModel& model, const Bounds& bounds, const std::string& goal,
                         const Trace& trace) {
  auto insts = initial_instances(model, bounds);
  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < insts.size(); ++i)
      if (insts[i].name == name) return i;
    throw TraceFormatError("trace names unknown instance '" + name + "'");
  };
  Attack attack{goal, "replayed from trace", {}};
  for (const auto& e : trace.events) {
    using K = TraceEvent::Kind;
    if (e.kind == K::Injected || (e.kind == K::Local && e.detail == "fire")) {
      attack.steps.push_back(Step{index_of(e.to), e.to, e.msg, e.term, std::nullopt, {}});
      continue;
    }
    if (attack.steps.empty()) throw TraceFormatError("event " + std::to_string(e.index) + " precedes any step");
    Step& st = attack.steps.back();
    if (e.kind == K::RoleEvent && e.term) {
      auto kind = e.detail == "witness" ? Event::Kind::Witness : Event::Kind::Request;
      st.events.push_back({kind, e.from, e.to, e.msg, *e.term});
    } else if (e.kind == K::Sent && e.from == st.instance_name) {
      st.output = e.term;
    } else {
      throw TraceFormatError("unexpected event " + std::to_string(e.index) + " in attack trace");
    }
  }
  return attack;
}

std::vector<Term> honest_run(const LoweredModel& model, std::size_t session_index, std::size_t max_steps) {
  if (session_index >= model.sessions.size()) throw ModelError("no such session");
  std::vector<RoleInstance> insts;
  for (const auto& ip : model.sessions[session_index].instances) {
    insts.push_back(instantiate(ip.role, ip.binding, session_index + 1, ip.role->name));
  }
  std::deque<Term> pending;
  std::vector<Term> sent;
  for (std::size_t n = 0; n < max_steps; ++n) {
    bool fired = false;
    for (auto& inst : insts) {
      std::vector<std::optional<Term>> inputs(pending.begin(), pending.end());
      inputs.emplace_back(start_token());
      if (has_receive_free(inst)) inputs.emplace_back(std::nullopt);
      for (std::size_t k = 0; k < inputs.size() && !fired; ++k) {
        StepResult r = step(inst, inputs[k]);
        auto* ok = std::get_if<Fired>(&r);
        if (!ok) continue;
        if (k < pending.size()) pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(k));
        inst = std::move(ok->next);
        if (ok->outgoing) {
          pending.push_back(*ok->outgoing);
          sent.push_back(*ok->outgoing);
        }
        fired = true;
      }
      if (fired) break;
    }
    if (!fired) break;
  }
  return sent;
}

}  // namespace oat
