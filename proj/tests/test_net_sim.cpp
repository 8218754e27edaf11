#include <gtest/gtest.h>

#include "oat/checker.hpp"
#include "oat/net_sim.hpp"
#include "oat/roles.hpp"

namespace oat {
namespace {

Registry fresh_registry(std::uint64_t seed = 0) {
  Registry reg(seed);
  reg.provision("dev1", "a", Term::password("a"));
  return reg;
}

std::vector<std::string> labels(const RunResult& r) {
  std::vector<std::string> out;
  for (const auto* e : protocol_messages(r.trace)) out.push_back(e->msg);
  return out;
}

void expect_locked_out(const Registry& reg, const RunResult& run) {
  EXPECT_EQ(reg.record("dev1")->status, RecordStatus::Locked);
  EXPECT_EQ(reg.authenticate_use("dev1", "a", Term::password("a")), Access::Deny);
  EXPECT_EQ(reg.authenticate_use("dev1", "b", run.temp_id.value_or(Term::password("b"))), Access::Deny);
  if (const auto* r = reg.record("dev1"); r->temp_id) {
    EXPECT_EQ(reg.authenticate_use("dev1", "b", Term::constant(*r->temp_id)), Access::Deny);
  }
}

TEST(NetSim, HonestRunSendsSixMessagesInOrder) {
  Registry reg = fresh_registry();
  RunResult run = run_session(TransferSetup{}, reg, {});
  ASSERT_TRUE(run.completed);
  EXPECT_EQ(labels(run), (std::vector<std::string>{"M1", "M2", "M3", "M4", "M5", "M6"}));
  auto msgs = protocol_messages(run.trace);
  const std::vector<std::pair<std::string, std::string>> routes{{"UA", "CKS"}, {"CKS", "UA"}, {"UB", "CKS"},
                                                                {"CKS", "UB"}, {"UA", "CKS"}, {"CKS", "UB"}};
  for (std::size_t i = 0; i < routes.size(); ++i) {
    EXPECT_EQ(msgs[i]->from, routes[i].first) << i;
    EXPECT_EQ(msgs[i]->to, routes[i].second) << i;
  }
  const Term pk = reg.public_key();
  EXPECT_EQ(*msgs[0]->term, build_m1(Term::agent("a"), Term::password("a"), run.n_a,
                                     build_otr(Term::agent("a"), Term::agent("b"), run.n_b, pk), pk));
  EXPECT_EQ(*msgs[5]->term, build_m6(*run.temp_id, run.n_b));
  EXPECT_EQ(reg.record("dev1")->owner, "b");
  EXPECT_TRUE(run.trace.of_kind(TraceEvent::Kind::Intercepted).empty());
}

TEST(NetSim, HonestRunSatisfiesAgreement) {
  Registry reg = fresh_registry();
  RunResult run = run_session(TransferSetup{}, reg, {});
  auto events = ground_events(run.trace);
  ASSERT_EQ(events.size(), 4u);
  EXPECT_TRUE(check_correspondence(events, {"usera_server_na", "userb_server_nb"}, true).empty());

  // A replayed M6 accepted a second time by the buyer's device yields a
  // second request for the same witness.
  auto replayed = events;
  replayed.push_back(events.back());
  auto violations = check_correspondence(replayed, {}, true);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_NE(violations[0].find("userb_server_nb"), std::string::npos);
  EXPECT_TRUE(check_correspondence(replayed, {}, false).empty());

  std::vector<GroundEvent> orphan{events[1]};
  EXPECT_EQ(check_correspondence(orphan, {}, false).size(), 1u);
}

TEST(NetSim, TraceIsDeterministicUnderSeed) {
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    Registry r1 = fresh_registry(seed), r2 = fresh_registry(seed);
    ChannelConfig cfg{ChannelMode::ActiveMitm, seed, std::nullopt};
    auto p1 = make_replay_random(seed), p2 = make_replay_random(seed);
    std::string t1 = run_session(TransferSetup{}, r1, cfg, p1.get()).trace.to_jsonl();
    std::string t2 = run_session(TransferSetup{}, r2, cfg, p2.get()).trace.to_jsonl();
    EXPECT_EQ(t1, t2);
    EXPECT_EQ(r1.serialize(), r2.serialize());
  }
  Registry a = fresh_registry(1), b = fresh_registry(2);
  EXPECT_NE(run_session(TransferSetup{}, a, {}).trace.to_jsonl(), run_session(TransferSetup{}, b, {}).trace.to_jsonl());
}

TEST(NetSim, TraceJsonlRoundTrips) {
  Registry reg = fresh_registry();
  ChannelConfig cfg{ChannelMode::ActiveMitm, 0, std::nullopt};
  Trace t = run_session(TransferSetup{}, reg, cfg).trace;
  std::string text = t.to_jsonl();
  EXPECT_EQ(Trace::from_jsonl("# header\n" + text), t);
  EXPECT_THROW(Trace::from_jsonl("{\"i\":0,\"event\":\"bogus\"}\n"), TraceFormatError);
  EXPECT_THROW(Trace::from_jsonl(text.substr(0, text.size() / 2)), TraceFormatError);
}

class DropMatrix : public ::testing::TestWithParam<std::size_t> {};

TEST_P(DropMatrix, ChannelDropLocksTheDevice) {
  const std::size_t k = GetParam();
  Registry reg = fresh_registry();
  ChannelConfig cfg;
  cfg.drop_after = k;
  RunResult run = run_session(TransferSetup{}, reg, cfg);
  EXPECT_FALSE(run.completed);
  EXPECT_EQ(protocol_messages(run.trace).size(), k);
  EXPECT_EQ(run.trace.of_kind(TraceEvent::Kind::Dropped).size(), 1u);
  expect_locked_out(reg, run);
}

TEST_P(DropMatrix, IntruderDropLocksTheDevice) {
  const std::size_t k = GetParam();
  Registry reg = fresh_registry();
  auto policy = make_drop_at(k);
  RunResult run = run_session(TransferSetup{}, reg, {ChannelMode::ActiveMitm, 0, std::nullopt}, policy.get());
  EXPECT_FALSE(run.completed);
  expect_locked_out(reg, run);
}

INSTANTIATE_TEST_SUITE_P(Positions, DropMatrix, ::testing::Values(1, 2, 3, 4, 5, 6));

TEST(NetSim, EavesdropperLearnsNoSecret) {
  Registry reg = fresh_registry();
  RunResult run = run_session(TransferSetup{}, reg, {ChannelMode::Eavesdrop, 0, std::nullopt});
  ASSERT_TRUE(run.completed);
  KnowledgeSet k = default_intruder_knowledge(TransferSetup{}, reg);
  for (const auto* e : protocol_messages(run.trace)) k.insert(*e->term);
  EXPECT_EQ(analyze(k).terms(), run.intruder_knowledge.terms());
  auto secrets = transfer_secrets(run);
  ASSERT_EQ(secrets.size(), 5u);
  for (const auto& s : secrets) EXPECT_FALSE(can_derive(k, s)) << encode(s);
  EXPECT_TRUE(can_derive(k, *protocol_messages(run.trace)[2]->term));
}

TEST(NetSim, ForwardingIntruderDoesNotBreakTheTransfer) {
  Registry reg = fresh_registry();
  auto policy = make_forward_all();
  RunResult run = run_session(TransferSetup{}, reg, {ChannelMode::ActiveMitm, 0, std::nullopt}, policy.get());
  EXPECT_TRUE(run.completed);
  EXPECT_EQ(run.trace.of_kind(TraceEvent::Kind::Intercepted).size(), 6u);
  EXPECT_EQ(run.trace.of_kind(TraceEvent::Kind::Forwarded).size(), 6u);
  EXPECT_TRUE(check_secrecy(run.intruder_knowledge, transfer_secrets(run)).empty());
  EXPECT_EQ(reg.record("dev1")->owner, "b");
}

TEST(NetSim, ReplayOfEachMessageIsHarmless) {
  for (std::size_t k = 1; k <= 6; ++k) {
    Registry reg = fresh_registry();
    auto policy = make_replay_at(k);
    RunResult run = run_session(TransferSetup{}, reg, {ChannelMode::ActiveMitm, 0, std::nullopt}, policy.get());
    EXPECT_TRUE(run.completed) << "replay of message " << k;
    EXPECT_EQ(run.trace.of_kind(TraceEvent::Kind::Injected).size(), 1u);
    EXPECT_EQ(reg.record("dev1")->owner, "b");
    EXPECT_TRUE(check_secrecy(run.intruder_knowledge, transfer_secrets(run)).empty());
  }
}

TEST(NetSim, RandomReplaysNeverTransferToAnyoneElse) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Registry reg = fresh_registry(seed);
    auto policy = make_replay_random(seed);
    RunResult run = run_session(TransferSetup{}, reg, {ChannelMode::ActiveMitm, seed, std::nullopt}, policy.get());
    const OwnershipRecord& r = *reg.record("dev1");
    EXPECT_TRUE(run.completed ? (r.owner == "b" && r.status == RecordStatus::Active)
                              : r.status == RecordStatus::Locked)
        << seed;
    EXPECT_TRUE(check_secrecy(run.intruder_knowledge, transfer_secrets(run)).empty()) << seed;
  }
}

TEST(NetSim, GarbageInjectionStallsThenLocks) {
  for (std::size_t k = 1; k <= 6; ++k) {
    Registry reg = fresh_registry();
    Term garbage = Term::aenc(Term::concat(Term::agent("i"), Term::agent("a")), reg.public_key());
    auto policy = make_inject_at(k, garbage);
    RunResult run = run_session(TransferSetup{}, reg, {ChannelMode::ActiveMitm, 0, std::nullopt}, policy.get());
    EXPECT_FALSE(run.completed) << k;
    expect_locked_out(reg, run);
  }
}

TEST(NetSim, InjectingUnderivableTermViolatesContract) {
  Registry reg = fresh_registry();
  auto policy = make_inject_at(2, Term::nonce("na", 1));
  EXPECT_THROW(run_session(TransferSetup{}, reg, {ChannelMode::ActiveMitm, 0, std::nullopt}, policy.get()),
               ContractViolation);
}

TEST(NetSim, WrongSellerPasswordIsRejected) {
  Registry reg = fresh_registry();
  TransferSetup setup;
  setup.seller_credential = Term::password("guess");
  RunResult run = run_session(setup, reg, {});
  EXPECT_FALSE(run.completed);
  EXPECT_EQ(protocol_messages(run.trace).size(), 1u);
  EXPECT_EQ(reg.record("dev1")->owner, "a");
}

}  // namespace
}  // namespace oat
