#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oat/deduction.hpp"
#include "oat/term.hpp"

namespace oat::testing {

#ifndef OAT_SOURCE_DIR
#define OAT_SOURCE_DIR "."
#endif

inline std::string fixture(const std::string& name) { return std::string(OAT_SOURCE_DIR) + "/fixtures/" + name; }

/// Random terms over a small alphabet so collisions and decryptions happen.
class TermGen {
 public:
  explicit TermGen(std::uint64_t seed, std::vector<std::string> names = {"a", "b", "c"})
      : rng_(seed), names_(std::move(names)) {}

  Term atom() {
    const std::string& n = pick(names_);
    switch (below(6)) {
      case 0: return Term::agent(n);
      case 1: return Term::constant(n);
      case 2: return Term::nonce("n" + n, below(3));
      case 3: return Term::pub_key(n);
      case 4: return Term::priv_key(n);
      default: return Term::password(n);
    }
  }

  Term term(std::size_t max_depth) {
    if (max_depth <= 1 || below(3) == 0) return atom();
    switch (below(3)) {
      case 0: {
        // A pair on the left would be re-associated to the right and deepen.
        Term left = term(max_depth - 1);
        while (left.kind() == TermKind::Concat) left = term(max_depth - 1);
        return Term::concat(left, term(max_depth - 1));
      }
      case 1: return Term::aenc(term(max_depth - 1), Term::pub_key(pick(names_)));
      default: {
        Term key = term(max_depth - 1);
        while (key.kind() == TermKind::PubKey || key.kind() == TermKind::PrivKey) key = term(max_depth - 1);
        return Term::senc(term(max_depth - 1), key);
      }
    }
  }

  std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng_); }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::vector<std::string> names_;
};

inline void subterms(const Term& t, std::set<Term>& out) {
  if (!out.insert(t).second || t.is_atomic()) return;
  subterms(t.left(), out);
  subterms(t.right(), out);
}

/// Reference derivability check. Every derivation from K to g can be
/// normalised to use only subterms of K and g, so saturating over that finite
/// universe with all rules decides the question.
inline bool oracle_derivable(const std::set<Term>& knowledge, const Term& goal) {
  std::set<Term> universe;
  for (const auto& t : knowledge) subterms(t, universe);
  subterms(goal, universe);
  std::set<Term> held = knowledge;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& u : universe) {
      if (held.count(u)) continue;
      bool get = false;
      if (!u.is_atomic()) get = held.count(u.left()) && held.count(u.right());
      for (const auto& h : held) {
        if (get) break;
        if (h.kind() == TermKind::Concat) get = h.left() == u || h.right() == u;
        else if (h.kind() == TermKind::AEnc) get = h.body() == u && held.count(Term::priv_key(h.key().name()));
        else if (h.kind() == TermKind::SEnc) get = h.body() == u && held.count(h.key());
      }
      if (get) {
        held.insert(u);
        changed = true;
      }
    }
  }
  return held.count(goal) != 0;
}

/// Checks every node of a derivation tree against the rule it names.
inline bool valid_derivation(const Derivation& d, const std::set<Term>& knowledge) {
  for (const auto& p : d.premises)
    if (!valid_derivation(p, knowledge)) return false;
  const Term& c = d.conclusion;
  auto prem = [&](std::size_t i) -> const Term& { return d.premises[i].conclusion; };
  const std::size_t n = d.premises.size();
  if (d.rule == "known") return n == 0 && knowledge.count(c);
  if (d.rule == "split_left") return n == 1 && prem(0).kind() == TermKind::Concat && prem(0).left() == c;
  if (d.rule == "split_right") return n == 1 && prem(0).kind() == TermKind::Concat && prem(0).right() == c;
  if (d.rule == "adec") {
    return n == 2 && prem(0).kind() == TermKind::AEnc && prem(0).body() == c &&
           prem(1) == Term::priv_key(prem(0).key().name());
  }
  if (d.rule == "sdec") {
    return n == 2 && prem(0).kind() == TermKind::SEnc && prem(0).body() == c && prem(1) == prem(0).key();
  }
  if (d.rule == "pair") return n == 2 && c == Term::concat(prem(0), prem(1));
  if (d.rule == "aenc") return n == 2 && c.kind() == TermKind::AEnc && c.body() == prem(0) && c.key() == prem(1);
  if (d.rule == "senc") return n == 2 && c.kind() == TermKind::SEnc && c.body() == prem(0) && c.key() == prem(1);
  return false;
}

}  // namespace oat::testing
