#include <gtest/gtest.h>

#include <unordered_set>

#include "oat/term.hpp"
#include "support.hpp"

namespace oat {
namespace {

TEST(Term, AtomsCompareStructurally) {
  EXPECT_EQ(Term::agent("a"), Term::agent("a"));
  EXPECT_NE(Term::agent("a"), Term::constant("a"));
  EXPECT_NE(Term::nonce("na", 1), Term::nonce("na", 2));
  EXPECT_EQ(Term::nonce("na", 1).session(), 1u);
  EXPECT_EQ(Term::pub_key("cks").name(), "cks");
  EXPECT_TRUE(Term::password("a").is_atomic());
}

TEST(Term, ConcatIsRightAssociated) {
  Term a = Term::agent("a"), b = Term::agent("b"), c = Term::agent("c");
  Term left_nested = Term::concat(Term::concat(a, b), c);
  Term right_nested = Term::concat(a, Term::concat(b, c));
  EXPECT_EQ(left_nested, right_nested);
  EXPECT_EQ(Term::cat({a, b, c}), right_nested);
  EXPECT_EQ(right_nested.left(), a);
  EXPECT_EQ(encode(right_nested), "cat(agent(a),cat(agent(b),agent(c)))");
}

TEST(Term, KeyDisciplineIsEnforced) {
  Term m = Term::constant("m");
  EXPECT_NO_THROW(Term::aenc(m, Term::pub_key("a")));
  EXPECT_THROW(Term::aenc(m, Term::priv_key("a")), std::invalid_argument);
  EXPECT_THROW(Term::aenc(m, Term::nonce("n", 0)), std::invalid_argument);
  EXPECT_THROW(Term::senc(m, Term::pub_key("a")), std::invalid_argument);
  EXPECT_THROW(Term::senc(m, Term::priv_key("a")), std::invalid_argument);
  EXPECT_NO_THROW(Term::senc(m, Term::nonce("n", 0)));
  EXPECT_THROW(Term::agent("Alice"), std::invalid_argument);
  EXPECT_THROW(Term::constant("otc-payload"), std::invalid_argument);
  EXPECT_THROW(Term::agent(""), std::invalid_argument);
}

TEST(Term, EncodesCanonically) {
  Term m1 = Term::aenc(Term::cat({Term::agent("a"), Term::password("a"), Term::nonce("na", 1)}), Term::pub_key("cks"));
  EXPECT_EQ(encode(m1), "aenc(cat(agent(a),cat(pw(a),nonce(na,1))),pk(cks))");
  EXPECT_EQ(encode(Term::senc(Term::constant("otc"), Term::nonce("na", 1))), "senc(const(otc),nonce(na,1))");
  EXPECT_EQ(encode(Term::priv_key("i")), "sk(i)");
}

TEST(Term, ParsesWithWhitespace) {
  Term t = parse_term(" aenc( cat(agent(a), nonce(na, 12)) , pk(cks) ) ");
  EXPECT_EQ(t, Term::aenc(Term::concat(Term::agent("a"), Term::nonce("na", 12)), Term::pub_key("cks")));
}

TEST(Term, ParseErrorsCarryOffsets) {
  try {
    parse_term("aenc(agent(a))");
    FAIL() << "expected a syntax error";
  } catch (const TermSyntaxError& e) {
    EXPECT_GT(e.offset(), 0u);
  }
  EXPECT_THROW(parse_term("agent(a"), TermSyntaxError);
  EXPECT_THROW(parse_term("agent(a) agent(b)"), TermSyntaxError);
  EXPECT_THROW(parse_term("nonce(na,x)"), TermSyntaxError);
  EXPECT_THROW(parse_term("blob(a)"), TermSyntaxError);
  EXPECT_THROW(parse_term("aenc(const(m),sk(a))"), std::exception);
  EXPECT_THROW(parse_term(""), TermSyntaxError);
}

TEST(Term, OrderingIsTotalAndConsistent) {
  testing::TermGen gen(11);
  std::vector<Term> ts;
  for (int i = 0; i < 200; ++i) ts.push_back(gen.term(4));
  for (const auto& x : ts) {
    for (const auto& y : ts) {
      auto c = x <=> y;
      EXPECT_EQ(c == 0, x == y);
      EXPECT_EQ(c < 0, (y <=> x) > 0);
      if (x == y) EXPECT_EQ(x.hash(), y.hash());
    }
  }
}

TEST(Term, MetricsCountNodes) {
  Term t = Term::aenc(Term::concat(Term::agent("a"), Term::agent("b")), Term::pub_key("c"));
  EXPECT_EQ(t.size(), 5u);
  EXPECT_EQ(t.depth(), 3u);
  EXPECT_EQ(Term::agent("a").depth(), 1u);
}

TEST(TermProperty, RoundTripsThousandRandomTerms) {
  testing::TermGen gen(20261014);
  std::size_t deep = 0;
  for (int i = 0; i < 1000; ++i) {
    Term t = gen.term(8);
    ASSERT_LE(t.depth(), 8u);
    if (t.depth() >= 5) ++deep;
    std::string text = encode(t);
    Term back = parse_term(text);
    ASSERT_EQ(back, t) << text;
    ASSERT_EQ(encode(back), text);
  }
  EXPECT_GT(deep, 50u);
}

TEST(TermProperty, HashingDistinguishesTypicalTerms) {
  testing::TermGen gen(5);
  std::unordered_set<Term, TermHash> seen;
  std::set<Term> ordered;
  for (int i = 0; i < 500; ++i) {
    Term t = gen.term(6);
    seen.insert(t);
    ordered.insert(t);
  }
  EXPECT_EQ(seen.size(), ordered.size());
}

}  // namespace
}  // namespace oat
