#include "oat/deduction.hpp"

#include <map>

namespace oat {

bool KnowledgeSet::insert(const Term& t) {
  bool added = terms_.insert(t).second;
  if (added) analyzed_ = false;
  return added;
}

namespace {

struct Provenance {
  std::string rule;
  std::vector<Term> premises;
};

// Saturates `set` under the destructor rules. When `why` is non-null the rule
// that first produced each term is recorded.
void saturate(std::set<Term>& set, std::map<Term, Provenance>* why) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::pair<Term, Provenance>> found;
    for (const Term& t : set) {
      switch (t.kind()) {
        case TermKind::Concat:
          if (!set.count(t.left())) found.push_back({t.left(), {"split_left", {t}}});
          if (!set.count(t.right())) found.push_back({t.right(), {"split_right", {t}}});
          break;
        case TermKind::AEnc: {
          Term sk = Term::priv_key(t.key().name());
          if (!set.count(t.body()) && set.count(sk)) found.push_back({t.body(), {"adec", {t, sk}}});
          break;
        }
        case TermKind::SEnc:
          if (!set.count(t.body()) && synthesizable(set, t.key())) {
            found.push_back({t.body(), {"sdec", {t, t.key()}}});
          }
          break;
        default:
          break;
      }
    }
    for (auto& [term, prov] : found) {
      if (set.insert(term).second) {
        changed = true;
        if (why) why->emplace(term, std::move(prov));
      }
    }
  }
}

std::optional<Derivation> build(const std::set<Term>& closure, const std::map<Term, Provenance>& why,
                                const Term& goal) {
  if (auto it = why.find(goal); it != why.end()) {
    Derivation d{it->second.rule, goal, {}};
    for (const Term& p : it->second.premises) {
      auto sub = build(closure, why, p);
      if (!sub) return std::nullopt;
      d.premises.push_back(std::move(*sub));
    }
    return d;
  }
  if (closure.count(goal)) return Derivation{"known", goal, {}};
  if (goal.is_atomic()) return std::nullopt;
  auto l = build(closure, why, goal.left());
  if (!l) return std::nullopt;
  auto r = build(closure, why, goal.right());
  if (!r) return std::nullopt;
  std::string rule = goal.kind() == TermKind::Concat ? "pair"
                     : goal.kind() == TermKind::AEnc ? "aenc"
                                                     : "senc";
  return Derivation{rule, goal, {std::move(*l), std::move(*r)}};
}

}  // namespace

bool synthesizable(const std::set<Term>& closure, const Term& goal) {
  if (closure.count(goal)) return true;
  if (goal.is_atomic()) return false;
  return synthesizable(closure, goal.left()) && synthesizable(closure, goal.right());
}

KnowledgeSet analyze(const KnowledgeSet& k) {
  if (k.analyzed()) return k;
  KnowledgeSet out = k;
  saturate(out.terms_, nullptr);
  out.analyzed_ = true;
  return out;
}

bool can_derive(const KnowledgeSet& k, const Term& goal) {
  if (k.analyzed()) return synthesizable(k.terms(), goal);
  return synthesizable(analyze(k).terms(), goal);
}

std::optional<Derivation> explain(const KnowledgeSet& k, const Term& goal) {
  std::set<Term> closure = k.terms();
  std::map<Term, Provenance> why;
  saturate(closure, &why);
  return build(closure, why, goal);
}

}  // namespace oat
