#include "oat/term.hpp"

#include <algorithm>
#include <functional>
#include <optional>

namespace oat {

struct Term::Node {
  TermKind kind;
  std::string name;
  std::uint64_t session = 0;
  std::optional<Term> a;
  std::optional<Term> b;
  std::size_t hash = 0;
  std::size_t depth = 1;
  std::size_t size = 1;
};

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

void require_identifier(std::string_view s) {
  if (!is_identifier(s)) {
    throw std::invalid_argument("invalid identifier '" + std::string(s) + "'");
  }
}

}  // namespace

std::string_view to_string(TermKind kind) {
  switch (kind) {
    case TermKind::Agent: return "agent";
    case TermKind::Const: return "const";
    case TermKind::Nonce: return "nonce";
    case TermKind::PubKey: return "pk";
    case TermKind::PrivKey: return "sk";
    case TermKind::Password: return "pw";
    case TermKind::Concat: return "cat";
    case TermKind::AEnc: return "aenc";
    case TermKind::SEnc: return "senc";
  }
  return "?";
}

bool is_identifier(std::string_view s) noexcept {
  if (s.empty() || s.front() < 'a' || s.front() > 'z') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

Term Term::make_atom(TermKind kind, std::string name, std::uint64_t session) {
  require_identifier(name);
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->hash = mix(mix(static_cast<std::size_t>(kind), std::hash<std::string>{}(name)), session);
  n->name = std::move(name);
  n->session = session;
  return Term(std::move(n));
}

Term Term::make_pair(TermKind kind, Term a, Term b) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->hash = mix(mix(static_cast<std::size_t>(kind) * 31 + 7, a.hash()), b.hash());
  n->depth = 1 + std::max(a.depth(), b.depth());
  n->size = 1 + a.size() + b.size();
  n->a = std::move(a);
  n->b = std::move(b);
  return Term(std::move(n));
}

Term Term::agent(std::string name) { return make_atom(TermKind::Agent, std::move(name), 0); }
Term Term::constant(std::string name) { return make_atom(TermKind::Const, std::move(name), 0); }
Term Term::nonce(std::string label, std::uint64_t session) {
  return make_atom(TermKind::Nonce, std::move(label), session);
}
Term Term::pub_key(std::string owner) { return make_atom(TermKind::PubKey, std::move(owner), 0); }
Term Term::priv_key(std::string owner) { return make_atom(TermKind::PrivKey, std::move(owner), 0); }
Term Term::password(std::string owner) { return make_atom(TermKind::Password, std::move(owner), 0); }

Term Term::concat(Term left, Term right) {
  // Keep the canonical right-associated shape: (a.b).c becomes a.(b.c).
  if (left.kind() == TermKind::Concat) {
    Term l = left.left();
    Term r = left.right();
    return concat(std::move(l), concat(std::move(r), std::move(right)));
  }
  return make_pair(TermKind::Concat, std::move(left), std::move(right));
}

Term Term::aenc(Term body, Term key) {
  if (key.kind() != TermKind::PubKey) {
    throw std::invalid_argument("aenc key must be a public key, got " + encode(key));
  }
  return make_pair(TermKind::AEnc, std::move(body), std::move(key));
}

Term Term::senc(Term body, Term key) {
  if (key.kind() == TermKind::PubKey || key.kind() == TermKind::PrivKey) {
    throw std::invalid_argument("senc key must not be an asymmetric key, got " + encode(key));
  }
  return make_pair(TermKind::SEnc, std::move(body), std::move(key));
}

Term Term::cat(std::span<const Term> parts) {
  if (parts.empty()) throw std::invalid_argument("cat of zero terms");
  Term acc = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) acc = concat(*it, acc);
  return acc;
}

Term Term::cat(std::initializer_list<Term> parts) {
  return cat(std::span<const Term>(parts.begin(), parts.size()));
}

TermKind Term::kind() const noexcept { return node_->kind; }

bool Term::is_atomic() const noexcept {
  auto k = node_->kind;
  return k != TermKind::Concat && k != TermKind::AEnc && k != TermKind::SEnc;
}

const std::string& Term::name() const {
  if (!is_atomic()) throw std::logic_error("name() on composite term");
  return node_->name;
}

std::uint64_t Term::session() const { return node_->session; }

const Term& Term::left() const {
  if (is_atomic()) throw std::logic_error("left() on atomic term");
  return *node_->a;
}

const Term& Term::right() const {
  if (is_atomic()) throw std::logic_error("right() on atomic term");
  return *node_->b;
}

std::size_t Term::hash() const noexcept { return node_->hash; }
std::size_t Term::depth() const noexcept { return node_->depth; }
std::size_t Term::size() const noexcept { return node_->size; }

bool operator==(const Term& a, const Term& b) noexcept { return (a <=> b) == 0; }

std::strong_ordering operator<=>(const Term& a, const Term& b) noexcept {
  if (a.node_ == b.node_) return std::strong_ordering::equal;
  if (auto c = a.kind() <=> b.kind(); c != 0) return c;
  if (a.is_atomic()) {
    if (auto c = a.node_->name <=> b.node_->name; c != 0) return c;
    return a.node_->session <=> b.node_->session;
  }
  if (auto c = a.left() <=> b.left(); c != 0) return c;
  return a.right() <=> b.right();
}

namespace {

void encode_into(const Term& t, std::string& out) {
  out += to_string(t.kind());
  out += '(';
  if (t.is_atomic()) {
    out += t.name();
    if (t.kind() == TermKind::Nonce) {
      out += ',';
      out += std::to_string(t.session());
    }
  } else {
    encode_into(t.left(), out);
    out += ',';
    encode_into(t.right(), out);
  }
  out += ')';
}

class TermParser {
 public:
  explicit TermParser(std::string_view src) : src_(src) {}

  Term parse_all() {
    Term t = parse();
    skip_ws();
    if (pos_ != src_.size()) fail("trailing input");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw TermSyntaxError(pos_, what); }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                  src_[pos_] == '\r')) {
      ++pos_;
    }
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= src_.size() || src_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string word() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < src_.size() && ((src_[pos_] >= 'a' && src_[pos_] <= 'z') ||
                                  (src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected identifier");
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string identifier() {
    skip_ws();
    std::size_t start = pos_;
    std::string w = word();
    if (!is_identifier(w)) {
      pos_ = start;
      fail("malformed identifier '" + w + "'");
    }
    return w;
  }

  std::uint64_t natural() {
    skip_ws();
    std::size_t start = pos_;
    std::uint64_t v = 0;
    while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
      std::uint64_t next = v * 10 + static_cast<std::uint64_t>(src_[pos_] - '0');
      if (next / 10 != v) fail("session number overflow");
      v = next;
      ++pos_;
    }
    if (start == pos_) fail("expected natural number");
    return v;
  }

  Term parse() {
    skip_ws();
    std::size_t head_pos = pos_;
    std::string head = word();
    expect('(');
    Term result = [&]() -> Term {
      if (head == "agent") return Term::agent(identifier());
      if (head == "const") return Term::constant(identifier());
      if (head == "pk") return Term::pub_key(identifier());
      if (head == "sk") return Term::priv_key(identifier());
      if (head == "pw") return Term::password(identifier());
      if (head == "nonce") {
        std::string label = identifier();
        expect(',');
        return Term::nonce(std::move(label), natural());
      }
      if (head == "cat" || head == "aenc" || head == "senc") {
        Term a = parse();
        skip_ws();
        if (pos_ >= src_.size() || src_[pos_] != ',') fail("'" + head + "' takes two arguments");
        ++pos_;
        Term b = parse();
        try {
          if (head == "cat") return Term::concat(std::move(a), std::move(b));
          if (head == "aenc") return Term::aenc(std::move(a), std::move(b));
          return Term::senc(std::move(a), std::move(b));
        } catch (const std::invalid_argument& e) {
          pos_ = head_pos;
          fail(e.what());
        }
      }
      pos_ = head_pos;
      fail("unknown function symbol '" + head + "'");
    }();
    expect(')');
    return result;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode(const Term& t) {
  std::string out;
  encode_into(t, out);
  return out;
}

Term parse_term(std::string_view text) { return TermParser(text).parse_all(); }

}  // namespace oat
