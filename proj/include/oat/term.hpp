#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace oat {

enum class TermKind : std::uint8_t {
  Agent,
  Const,
  Nonce,
  PubKey,
  PrivKey,
  Password,
  Concat,
  AEnc,
  SEnc,
};

std::string_view to_string(TermKind kind);

/// Immutable symbolic message term. Copies share structure; equality is
/// structural.
///
/// Identifiers must match `[a-z][a-z0-9_]*`. `AEnc` requires a `PubKey`
/// key and `SEnc` rejects public and private keys; the factories throw
/// std::invalid_argument when either rule is broken.
class Term {
 public:
  static Term agent(std::string name);
  static Term constant(std::string name);
  static Term nonce(std::string label, std::uint64_t session);
  static Term pub_key(std::string owner);
  static Term priv_key(std::string owner);
  static Term password(std::string owner);
  static Term concat(Term left, Term right);
  static Term aenc(Term body, Term key);
  static Term senc(Term body, Term key);

  /// Right-associated concatenation of two or more parts.
  static Term cat(std::span<const Term> parts);
  static Term cat(std::initializer_list<Term> parts);

  TermKind kind() const noexcept;
  bool is_atomic() const noexcept;

  /// Identifier of an atomic term (agent name, nonce label, key owner ...).
  const std::string& name() const;
  std::uint64_t session() const;

  /// Children of Concat (left/right) and of AEnc/SEnc (body/key).
  const Term& left() const;
  const Term& right() const;
  const Term& body() const { return left(); }
  const Term& key() const { return right(); }

  std::size_t hash() const noexcept;
  std::size_t depth() const noexcept;
  std::size_t size() const noexcept;

  friend bool operator==(const Term& a, const Term& b) noexcept;
  friend std::strong_ordering operator<=>(const Term& a, const Term& b) noexcept;

 private:
  struct Node;
  explicit Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Term make_atom(TermKind kind, std::string name, std::uint64_t session);
  static Term make_pair(TermKind kind, Term a, Term b);

  std::shared_ptr<const Node> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const noexcept { return t.hash(); }
};

bool is_identifier(std::string_view s) noexcept;

/// Canonical text form, e.g. `aenc(cat(agent(a),nonce(na,1)),pk(cks))`.
std::string encode(const Term& t);

class TermSyntaxError : public std::runtime_error {
 public:
  TermSyntaxError(std::size_t offset, const std::string& what)
      : std::runtime_error("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Inverse of encode(). Whitespace between tokens is ignored.
Term parse_term(std::string_view text);

}  // namespace oat
