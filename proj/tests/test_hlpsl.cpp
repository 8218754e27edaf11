#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oat/hlpsl.hpp"
#include "support.hpp"

namespace oat::hlpsl {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Line and column (1-based) of the first occurrence of `needle`.
std::pair<std::size_t, std::size_t> position_of(const std::string& text, const std::string& needle,
                                                std::size_t skip = 0) {
  std::size_t at = text.find(needle);
  for (std::size_t i = 0; i < skip; ++i) at = text.find(needle, at + 1);
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < at; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  auto at = s.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return s.replace(at, from.size(), to);
}

Diagnostic error_of(const std::string& source) {
  try {
    parse_hlpsl(source, "t.hlpsl");
  } catch (const ParseError& e) {
    return e.diagnostic();
  }
  ADD_FAILURE() << "expected a parse error";
  return {};
}

std::set<std::uint32_t> states_of(const SpecModel& m, const std::string& role) {
  return m.find_role(role)->states();
}

class OatListing : public ::testing::Test {
 protected:
  void SetUp() override {
    source = slurp(testing::fixture("oat.hlpsl"));
    parsed = parse_hlpsl(source, "oat.hlpsl");
  }
  std::string source;
  ParseResult parsed;
};

TEST_F(OatListing, GoldenStructure) {
  const SpecModel& m = parsed.model;
  ASSERT_EQ(m.basic_roles.size(), 3u);
  EXPECT_EQ(m.find_role("usera")->transitions.size(), 2u);
  EXPECT_EQ(m.find_role("ck")->transitions.size(), 3u);
  EXPECT_EQ(m.find_role("userb")->transitions.size(), 2u);
  EXPECT_EQ(states_of(m, "usera"), (std::set<std::uint32_t>{0, 2, 8}));
  EXPECT_EQ(states_of(m, "ck"), (std::set<std::uint32_t>{1, 3, 7, 9}));
  EXPECT_EQ(states_of(m, "userb"), (std::set<std::uint32_t>{4, 8, 10}));
  ASSERT_EQ(m.goals.size(), 2u);
  EXPECT_EQ(m.goals[0].protocol_id, "userb_server_nb");
  EXPECT_EQ(m.goals[1].protocol_id, "usera_server_na");
  EXPECT_EQ(m.environment.intruder_knowledge, (std::vector<std::string>{"a", "b", "c", "ks", "ki"}));
  ASSERT_EQ(m.session_roles.size(), 1u);
  EXPECT_EQ(m.session_roles[0].composition.size(), 3u);
  EXPECT_EQ(m.environment.composition, (std::vector<Call>{{"session", {"a", "b", "c", "ks"}}}));
}

TEST_F(OatListing, TransitionDetails) {
  const RoleSpec& usera = *parsed.model.find_role("usera");
  EXPECT_EQ(usera.played_by, "UA");
  EXPECT_EQ(usera.initial_state, 0u);
  const Transition& t1 = usera.transitions[0];
  EXPECT_EQ(t1.fresh, std::vector<std::string>{"Na"});
  EXPECT_TRUE(t1.receive.has_value());
  ASSERT_TRUE(t1.send.has_value());
  EXPECT_EQ(t1.send->op, Pattern::Op::Enc);
  const Transition& t2 = usera.transitions[1];
  ASSERT_EQ(t2.events.size(), 1u);
  EXPECT_EQ(t2.events[0].kind, Event::Kind::Request);
  EXPECT_TRUE(t2.events[0].guard_side);
  const RoleSpec& ck = *parsed.model.find_role("ck");
  EXPECT_EQ(ck.transitions[1].events[0].kind, Event::Kind::Witness);
  EXPECT_FALSE(ck.transitions[1].events[0].guard_side);
}

TEST_F(OatListing, ReportsOnlyTheKnownWarnings) {
  std::vector<std::string> messages;
  for (const auto& d : parsed.diagnostics) {
    EXPECT_EQ(d.severity, Diagnostic::Severity::Warning);
    messages.push_back(d.message);
  }
  ASSERT_EQ(messages.size(), 3u);
  EXPECT_NE(messages[0].find("Na'"), std::string::npos);
  EXPECT_NE(messages[1].find("Nb'"), std::string::npos);
  EXPECT_NE(messages[2].find("shared"), std::string::npos);
  EXPECT_EQ(format(parsed.diagnostics[0]).rfind("oat.hlpsl:17:", 0), 0u);
}

TEST_F(OatListing, PrettyPrintIsAFixpoint) {
  std::string once = pretty_print(parsed.model);
  ParseResult again = parse_hlpsl(once, "printed.hlpsl");
  EXPECT_EQ(again.model, parsed.model);
  EXPECT_EQ(pretty_print(again.model), once);
}

TEST(Fixtures, EveryFixtureRoundTrips) {
  for (const char* name : {"oat.hlpsl", "oat_prose.hlpsl", "nspk.hlpsl", "nspk_lowe.hlpsl"}) {
    auto first = parse_hlpsl_file(testing::fixture(name));
    std::string printed = pretty_print(first.model);
    auto second = parse_hlpsl(printed, name);
    EXPECT_EQ(second.model, first.model) << name;
    EXPECT_EQ(pretty_print(second.model), printed) << name;
  }
}

TEST(Lexer, CommentsAndSeparatorsAreSkipped) {
  std::string src = slurp(testing::fixture("nspk.hlpsl"));
  std::string noisy = "% header comment\n-----\n" + replace_once(src, "role bob(", "% inline\n---------\nrole bob(");
  EXPECT_EQ(parse_hlpsl(noisy).model, parse_hlpsl(src).model);
}

TEST(Diagnostics, UnboundIdentifierPointsAtUse) {
  std::string src = slurp(testing::fixture("oat.hlpsl"));
  std::string bad = replace_once(src, "SND({Otc}_Kcks)", "SND({Oops}_Kcks)");
  Diagnostic d = error_of(bad);
  auto [line, col] = position_of(bad, "Oops");
  EXPECT_EQ(d.line, line);
  EXPECT_EQ(d.column, col);
  EXPECT_EQ(d.severity, Diagnostic::Severity::Error);
  EXPECT_NE(d.message.find("unbound identifier 'Oops'"), std::string::npos);
  EXPECT_EQ(format(d), "t.hlpsl:" + std::to_string(line) + ":" + std::to_string(col) + ": error: " + d.message);
}

TEST(Diagnostics, DuplicateTransitionLabel) {
  std::string src = slurp(testing::fixture("oat.hlpsl"));
  std::string bad = replace_once(src, "3.State=7", "2.State=7");
  Diagnostic d = error_of(bad);
  EXPECT_EQ(d.line, position_of(bad, "2.State=7").first);
  EXPECT_NE(d.message.find("duplicate transition label"), std::string::npos);
}

TEST(Diagnostics, UnreachableState) {
  std::string src = slurp(testing::fixture("oat.hlpsl"));
  std::string bad = replace_once(src, "3.State=7", "3.State=6");
  Diagnostic d = error_of(bad);
  EXPECT_EQ(d.line, position_of(bad, "3.State=6").first);
  EXPECT_NE(d.message.find("unreachable state 6"), std::string::npos);
}

TEST(Diagnostics, MissingGoals) {
  std::string src = slurp(testing::fixture("oat.hlpsl"));
  std::string bad = replace_once(src, "\tauthentication_on userb_server_nb\n\tauthentication_on usera_server_na\n", "");
  EXPECT_NE(error_of(bad).message.find("no goals declared"), std::string::npos);
}

TEST(Diagnostics, GoalOnUndeclaredProtocolId) {
  std::string src = slurp(testing::fixture("oat.hlpsl"));
  std::string bad = replace_once(src, "authentication_on usera_server_na", "authentication_on usera_server_nx");
  Diagnostic d = error_of(bad);
  EXPECT_EQ(d.line, position_of(bad, "usera_server_nx").first);
  EXPECT_NE(d.message.find("undeclared protocol_id"), std::string::npos);
}

TEST(Diagnostics, CallArity) {
  std::string src = slurp(testing::fixture("oat.hlpsl"));
  std::string bad = replace_once(src, "session(a,b,c,ks)", "session(a,b,ks)");
  Diagnostic d = error_of(bad);
  EXPECT_EQ(d.line, position_of(bad, "session(a,b,ks)").first);
  EXPECT_NE(d.message.find("arguments"), std::string::npos);
}

TEST(Diagnostics, UnderscoreMustFollowBrace) {
  std::string src = slurp(testing::fixture("oat.hlpsl"));
  std::string bad = replace_once(src, "SND(T)", "SND(_T)");
  Diagnostic d = error_of(bad);
  auto [line, col] = position_of(bad, "_T");
  EXPECT_EQ(d.line, line);
  EXPECT_EQ(d.column, col);
}

TEST(Diagnostics, SyntaxErrorIsPositioned) {
  Diagnostic d = error_of("role x(\n  A: agent\n");
  EXPECT_EQ(d.line, 3u);
  EXPECT_TRUE(d.message.rfind("expected", 0) == 0) << d.message;
}

TEST(Diagnostics, UnknownType) {
  std::string src = slurp(testing::fixture("nspk.hlpsl"));
  std::string bad = replace_once(src, "Na,Nb: text", "Na,Nb: symmetric_key");
  Diagnostic d = error_of(bad);
  EXPECT_EQ(d.line, position_of(bad, "symmetric_key").first);
}

TEST(Lowering, OatKeysAndBindings) {
  auto m = lower(parse_hlpsl_file(testing::fixture("oat.hlpsl")).model);
  EXPECT_EQ(m.key_constants.at("ks"), Term::pub_key("cks"));
  EXPECT_EQ(m.key_constants.at("ki"), Term::pub_key("i"));
  EXPECT_TRUE(m.intruder_knowledge.contains(Term::priv_key("i")));
  EXPECT_TRUE(m.intruder_knowledge.contains(Term::agent("c")));
  EXPECT_FALSE(m.intruder_knowledge.contains(Term::priv_key("cks")));
  ASSERT_EQ(m.sessions.size(), 1u);
  const auto& insts = m.sessions[0].instances;
  ASSERT_EQ(insts.size(), 3u);
  EXPECT_EQ(insts[0].role->name, "usera");
  EXPECT_EQ(insts[0].played_by, "a");
  EXPECT_EQ(insts[1].role->name, "userb");
  EXPECT_EQ(insts[1].played_by, "c");
  EXPECT_EQ(insts[2].role->name, "ck");
  EXPECT_EQ(insts[2].played_by, "b");
  EXPECT_EQ(insts[2].binding.at("Kcks"), Term::pub_key("cks"));
}

TEST(Lowering, IntruderKeyCanBeWithheld) {
  auto model = parse_hlpsl_file(testing::fixture("nspk.hlpsl")).model;
  LowerOptions opts;
  opts.intruder_private_key = false;
  auto m = lower(model, opts);
  EXPECT_FALSE(m.intruder_knowledge.contains(Term::priv_key("i")));
  EXPECT_EQ(m.sessions[1].instances[1].played_by, "i");
  EXPECT_EQ(m.sessions[1].instances[0].binding.at("Kb"), Term::pub_key("i"));
}

}  // namespace
}  // namespace oat::hlpsl
