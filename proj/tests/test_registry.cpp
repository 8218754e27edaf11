#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oat/net_sim.hpp"
#include "oat/registry.hpp"
#include "oat/roles.hpp"
#include "support.hpp"

namespace oat {
namespace {

// sha256("pw(a)"), computed with coreutils sha256sum.
constexpr const char* kDigestPwA = "4c326e3bd03b196ab510f074507adc90c8b42667e252755a49e9778ca952fb91";

struct Parties {
  UserA a;
  UserB b;
  Term m1;
};

Parties start(Registry& reg, const std::string& seller, const Term& cred, const std::string& buyer,
              std::uint64_t session = 1) {
  Term na = Term::nonce("na", session), nb = Term::nonce("nb", session);
  UserA a(Term::agent(seller), cred, na, reg.public_key());
  UserB b(Term::agent(buyer), nb, reg.public_key());
  Term m1 = std::get<Send>(a.run(UserA::Start{b.id(), nb})).message;
  return {std::move(a), std::move(b), m1};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("oat_test_" + std::to_string(::getpid()) + "_" + name);
}

TEST(Digest, Sha256OfCanonicalEncoding) {
  EXPECT_EQ(credential_digest(Term::password("a")), kDigestPwA);
  EXPECT_NE(credential_digest(Term::password("b")), kDigestPwA);
}

TEST(Registry, FullTransferFlipsOwnership) {
  Registry reg(1);
  reg.provision("dev1", "a", Term::password("a"));
  EXPECT_EQ(reg.authenticate_use("dev1", "a", Term::password("a")), Access::Allow);
  auto p = start(reg, "a", Term::password("a"), "b");

  CksReply m2 = reg.begin_transfer("dev1", p.m1);
  ASSERT_TRUE(m2.ok()) << m2.reason;
  EXPECT_EQ(reg.record("dev1")->status, RecordStatus::TransferPending);
  EXPECT_EQ(reg.authenticate_use("dev1", "a", Term::password("a")), Access::Deny);

  p.b.store_ticket(*m2.message);
  Term m3 = std::get<Send>(p.b.run(UserB::PresentTicket{})).message;
  CksReply m4 = reg.present_ticket("dev1", m3);
  ASSERT_TRUE(m4.ok()) << m4.reason;
  Term m5 = std::get<Send>(p.a.run(UserA::HandOver{*m4.message})).message;
  CksReply m6 = reg.confirm("dev1", m5);
  ASSERT_TRUE(m6.ok()) << m6.reason;
  ASSERT_TRUE(std::holds_alternative<Done>(p.b.run(UserB::Complete{*m6.message})));

  const OwnershipRecord& r = *reg.record("dev1");
  EXPECT_EQ(r.owner, "b");
  EXPECT_EQ(r.status, RecordStatus::Active);
  EXPECT_NE(r.pw_digest, kDigestPwA);
  EXPECT_EQ(Term::constant(*r.temp_id), *p.b.temp_id());
  EXPECT_EQ(reg.authenticate_use("dev1", "a", Term::password("a")), Access::Deny);
  EXPECT_EQ(reg.authenticate_use("dev1", "b", *p.b.temp_id()), Access::Allow);
  EXPECT_EQ(reg.session(*r.session)->phase, TransferPhase::Finalized);

  std::vector<std::string> kinds;
  for (const auto& e : reg.drain_events()) kinds.push_back(e.kind);
  EXPECT_EQ(kinds, (std::vector<std::string>{"ticket", "otc", "finalize"}));
  EXPECT_TRUE(reg.drain_events().empty());
}

TEST(Registry, RejectsWrongPasswordWithoutStateChange) {
  Registry reg(1);
  reg.provision("dev1", "a", Term::password("a"));
  std::string before = reg.serialize();
  auto p = start(reg, "a", Term::password("z"), "b");
  CksReply r = reg.begin_transfer("dev1", p.m1);
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.aborted);
  EXPECT_EQ(reg.serialize(), before);
}

TEST(Registry, RejectsImpostorAndUnknownDevice) {
  Registry reg(1);
  reg.provision("dev1", "a", Term::password("a"));
  auto p = start(reg, "c", Term::password("a"), "b");
  EXPECT_FALSE(reg.begin_transfer("dev1", p.m1).ok());
  auto q = start(reg, "a", Term::password("a"), "b");
  EXPECT_FALSE(reg.begin_transfer("dev9", q.m1).ok());
  EXPECT_FALSE(reg.begin_transfer("dev1", Term::aenc(Term::constant("x"), reg.public_key())).ok());
}

TEST(Registry, StaleNonceIsRejected) {
  Registry reg(1);
  reg.provision("dev1", "a", Term::password("a"));
  auto p = start(reg, "a", Term::password("a"), "b");
  ASSERT_TRUE(reg.begin_transfer("dev1", p.m1).ok());
  reg.lock_device("dev1", "test abort");
  EXPECT_EQ(reg.record("dev1")->status, RecordStatus::Locked);
  CksReply again = reg.begin_transfer("dev1", p.m1);
  EXPECT_FALSE(again.ok());
  EXPECT_NE(again.reason.find("stale"), std::string::npos);
  auto fresh = start(reg, "a", Term::password("a"), "b", 2);
  EXPECT_TRUE(reg.begin_transfer("dev1", fresh.m1).ok());
}

TEST(Registry, PendingTransferBlocksSecondRequest) {
  Registry reg(1);
  reg.provision("dev1", "a", Term::password("a"));
  ASSERT_TRUE(reg.begin_transfer("dev1", start(reg, "a", Term::password("a"), "b").m1).ok());
  EXPECT_FALSE(reg.begin_transfer("dev1", start(reg, "a", Term::password("a"), "b", 2).m1).ok());
}

TEST(Registry, MismatchedTicketAborts) {
  Registry reg(1);
  reg.provision("dev1", "a", Term::password("a"));
  auto p = start(reg, "a", Term::password("a"), "b");
  CksReply m2 = reg.begin_transfer("dev1", p.m1);
  Term wrong_m3 = build_m3(Term::agent("b"), *m2.message, Term::nonce("ni", 0), reg.public_key());
  CksReply r = reg.present_ticket("dev1", wrong_m3);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.aborted);
  EXPECT_EQ(reg.record("dev1")->status, RecordStatus::Locked);
  EXPECT_EQ(reg.record("dev1")->owner, "a");
}

TEST(Registry, WrongConfirmationAborts) {
  Registry reg(1);
  reg.provision("dev1", "a", Term::password("a"));
  auto p = start(reg, "a", Term::password("a"), "b");
  p.b.store_ticket(*reg.begin_transfer("dev1", p.m1).message);
  ASSERT_TRUE(reg.present_ticket("dev1", std::get<Send>(p.b.run(UserB::PresentTicket{})).message).ok());
  CksReply r = reg.confirm("dev1", build_m5(Term::constant("bogus"), reg.public_key()));
  EXPECT_TRUE(r.aborted);
  EXPECT_EQ(reg.record("dev1")->status, RecordStatus::Locked);
}

TEST(Registry, DeadlineExpiresPendingTransfer) {
  Registry reg(1);
  reg.set_timeout(10);
  reg.provision("dev1", "a", Term::password("a"));
  ASSERT_TRUE(reg.begin_transfer("dev1", start(reg, "a", Term::password("a"), "b").m1).ok());
  reg.advance_clock(9);
  EXPECT_EQ(reg.record("dev1")->status, RecordStatus::TransferPending);
  reg.advance_clock(1);
  EXPECT_EQ(reg.record("dev1")->status, RecordStatus::Locked);
  bool expired = false;
  for (const auto& e : reg.drain_events()) expired |= e.kind == "expire";
  EXPECT_TRUE(expired);
  EXPECT_FALSE(reg.abort(*reg.record("dev1")->session, "again"));
}

TEST(Registry, ProvisioningIsOnce) {
  Registry reg;
  reg.provision("dev1", "a", Term::password("a"));
  EXPECT_THROW(reg.provision("dev1", "b", Term::password("b")), RegistryError);
  EXPECT_THROW(reg.provision("dev2", "Bad-Name", Term::password("b")), RegistryError);
}

TEST(RegistryProperty, PresentTicketReplayIsIdempotent) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Registry reg(seed);
    reg.provision("dev1", "a", Term::password("a"));
    auto p = start(reg, "a", Term::password("a"), "b");
    p.b.store_ticket(*reg.begin_transfer("dev1", p.m1).message);
    Term m3 = std::get<Send>(p.b.run(UserB::PresentTicket{})).message;
    CksReply first = reg.present_ticket("dev1", m3);
    ASSERT_TRUE(first.ok());
    std::string snapshot = reg.serialize();
    const std::string tid = *reg.record("dev1")->session;
    for (int i = 0; i < 1 + static_cast<int>(seed % 4); ++i) {
      CksReply again = reg.present_ticket("dev1", m3);
      ASSERT_FALSE(again.ok());
      ASSERT_FALSE(again.aborted);
      ASSERT_EQ(reg.serialize(), snapshot);
      ASSERT_EQ(reg.session(tid)->phase, TransferPhase::OtcSent);
    }
    Term m5 = std::get<Send>(p.a.run(UserA::HandOver{*first.message})).message;
    ASSERT_TRUE(reg.confirm("dev1", m5).ok());
  }
}

TEST(RegistryProperty, HundredRandomCredentialFixtures) {
  testing::TermGen gen(4242);
  const std::vector<std::string> names{"alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi"};
  for (int i = 0; i < 100; ++i) {
    std::string seller = gen.pick(names);
    std::string buyer = gen.pick(names);
    while (buyer == seller) buyer = gen.pick(names);
    std::string device = "dev" + std::to_string(gen.below(1000000));
    Term cred = Term::password("p" + std::to_string(gen.below(1u << 30)));

    Registry reg(gen.below(1u << 30));
    reg.provision(device, seller, cred);
    ASSERT_EQ(reg.authenticate_use(device, seller, cred), Access::Allow);
    ASSERT_EQ(reg.authenticate_use(device, buyer, cred), Access::Deny);

    TransferSetup setup{device, seller, cred, buyer, 1 + gen.below(50)};
    RunResult run = run_session(setup, reg, {});
    ASSERT_TRUE(run.completed) << device;
    ASSERT_TRUE(run.temp_id);
    EXPECT_EQ(reg.authenticate_use(device, seller, cred), Access::Deny);
    EXPECT_EQ(reg.authenticate_use(device, buyer, *run.temp_id), Access::Allow);
    EXPECT_EQ(reg.authenticate_use(device, seller, *run.temp_id), Access::Deny);
    EXPECT_EQ(reg.authenticate_use(device, buyer, cred), Access::Deny);
  }
}

TEST(RegistryFile, StoreAndLoadRoundTrip) {
  Registry reg(3);
  reg.provision("dev1", "a", Term::password("a"));
  reg.provision("dev2", "c", Term::password("c"));
  run_session(TransferSetup{}, reg, {});
  auto path = temp_path("reg.json");
  reg.store(path.string());
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  Registry back = Registry::load(path.string());
  EXPECT_EQ(back.records(), reg.records());
  EXPECT_EQ(back.serialize(), reg.serialize());
  std::filesystem::remove(path);
}

TEST(RegistryFile, RecordLayoutIsFixed) {
  Registry reg;
  reg.provision("dev1", "a", Term::password("a"));
  EXPECT_EQ(reg.serialize(), std::string("{\"device\":\"dev1\",\"owner\":\"a\",\"pw_digest\":\"") + kDigestPwA +
                                 "\",\"temp_id\":null,\"status\":\"active\",\"session\":null}\n");
}

TEST(RegistryFile, SeedFixtureLoads) {
  Registry reg = Registry::load(testing::fixture("registry.seed.json"));
  ASSERT_NE(reg.record("dev1"), nullptr);
  EXPECT_EQ(reg.authenticate_use("dev1", "a", Term::password("a")), Access::Allow);
}

TEST(RegistryFile, TruncatedLineNamesTheLine) {
  Registry reg;
  reg.provision("dev1", "a", Term::password("a"));
  reg.provision("dev2", "b", Term::password("b"));
  std::string text = reg.serialize();
  text.resize(text.size() - 20);
  try {
    Registry::parse(text, 0, "reg.json");
    FAIL() << "expected a registry error";
  } catch (const RegistryError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("reg.json:2:", 0), 0u) << e.what();
  }
}

TEST(RegistryFile, BadFieldsAreReported) {
  EXPECT_THROW(Registry::parse("{\"device\":\"d\"}\n"), RegistryError);
  EXPECT_THROW(Registry::parse("[1,2]\n"), RegistryError);
  std::string rec = "{\"device\":\"d\",\"owner\":\"a\",\"pw_digest\":\"x\",\"temp_id\":null,\"status\":\"weird\","
                    "\"session\":null}\n";
  EXPECT_THROW(Registry::parse(rec), RegistryError);
  EXPECT_THROW(Registry::load("/nonexistent/registry.json"), RegistryError);
}

TEST(RegistryFile, PendingTransferReloadsLocked) {
  Registry reg(1);
  reg.provision("dev1", "a", Term::password("a"));
  ASSERT_TRUE(reg.begin_transfer("dev1", start(reg, "a", Term::password("a"), "b").m1).ok());
  Registry back = Registry::parse(reg.serialize());
  EXPECT_EQ(back.record("dev1")->status, RecordStatus::Locked);
  EXPECT_EQ(back.authenticate_use("dev1", "a", Term::password("a")), Access::Deny);
}

}  // namespace
}  // namespace oat
