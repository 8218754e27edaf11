#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "oat/term.hpp"

namespace oat {

/// Terms held by an observer (usually the intruder).
class KnowledgeSet {
 public:
  KnowledgeSet() = default;
  KnowledgeSet(std::initializer_list<Term> terms) : terms_(terms) {}
  explicit KnowledgeSet(std::set<Term> terms) : terms_(std::move(terms)) {}

  const std::set<Term>& terms() const noexcept { return terms_; }
  bool analyzed() const noexcept { return analyzed_; }
  bool contains(const Term& t) const { return terms_.count(t) != 0; }
  std::size_t size() const noexcept { return terms_.size(); }

  /// Returns true when the term was new. Clears the analyzed flag.
  bool insert(const Term& t);

  friend bool operator==(const KnowledgeSet& a, const KnowledgeSet& b) { return a.terms_ == b.terms_; }

 private:
  friend KnowledgeSet analyze(const KnowledgeSet& k);
  std::set<Term> terms_;
  bool analyzed_ = false;
};

/// Least fixpoint of the destructor rules: split pairs, open aenc(b, pk(x))
/// given sk(x), open senc(b, k) given a derivable k.
KnowledgeSet analyze(const KnowledgeSet& k);

/// Synthesis check over analyze(k): the goal is held, or is a pair or
/// encryption whose parts are derivable.
bool can_derive(const KnowledgeSet& k, const Term& goal);

/// Synthesis check that assumes `closure` is already analyzed.
bool synthesizable(const std::set<Term>& closure, const Term& goal);

struct Derivation {
  /// One of: known, split_left, split_right, adec, sdec, pair, aenc, senc.
  std::string rule;
  Term conclusion;
  std::vector<Derivation> premises;
};

/// Explicit proof tree for `goal`, or nullopt when it is not derivable.
std::optional<Derivation> explain(const KnowledgeSet& k, const Term& goal);

}  // namespace oat
