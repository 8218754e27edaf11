#include "oat/net_sim.hpp"

#include <deque>
#include <random>
#include <set>

#include "oat/roles.hpp"

namespace oat {

namespace {

class ForwardAll final : public IntruderPolicy {
 public:
  std::string name() const override { return "forward-all"; }
  std::vector<IntruderAction> on_intercept(const KnowledgeSet&, const Intercept&) override {
    return {IntruderAction::forward()};
  }
};

class ReplayRandom final : public IntruderPolicy {
 public:
  explicit ReplayRandom(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "replay-random"; }
  std::vector<IntruderAction> on_intercept(const KnowledgeSet&, const Intercept& m) override {
    std::vector<IntruderAction> out{IntruderAction::forward()};
    if (!seen_.empty() && (rng_() & 1U)) {
      const Intercept& old = seen_[rng_() % seen_.size()];
      out.push_back(IntruderAction::inject(old.term, old.to));
    }
    seen_.push_back(m);
    return out;
  }

 private:
  std::mt19937_64 rng_;
  std::vector<Intercept> seen_;
};

class ReplayAt final : public IntruderPolicy {
 public:
  explicit ReplayAt(std::size_t k) : k_(k) {}
  std::string name() const override { return "replay-at-" + std::to_string(k_); }
  std::vector<IntruderAction> on_intercept(const KnowledgeSet&, const Intercept& m) override {
    if (m.ordinal != k_) return {IntruderAction::forward()};
    return {IntruderAction::forward(), IntruderAction::inject(m.term, m.to)};
  }

 private:
  std::size_t k_;
};

class DropAt final : public IntruderPolicy {
 public:
  explicit DropAt(std::size_t k) : k_(k) {}
  std::string name() const override { return "drop-at-" + std::to_string(k_); }
  std::vector<IntruderAction> on_intercept(const KnowledgeSet&, const Intercept& m) override {
    return {m.ordinal == k_ ? IntruderAction::drop() : IntruderAction::forward()};
  }

 private:
  std::size_t k_;
};

class InjectAt final : public IntruderPolicy {
 public:
  InjectAt(std::size_t k, Term t) : k_(k), term_(std::move(t)) {}
  std::string name() const override { return "inject-at-" + std::to_string(k_); }
  std::vector<IntruderAction> on_intercept(const KnowledgeSet&, const Intercept& m) override {
    if (m.ordinal != k_) return {IntruderAction::forward()};
    return {IntruderAction::inject(term_)};
  }

 private:
  std::size_t k_;
  Term term_;
};

struct Delivery {
  std::string from;
  std::string to;
  std::string msg;
  Term term;
};

constexpr const char* kUserA = "UA";
constexpr const char* kUserB = "UB";
constexpr const char* kServer = "CKS";

class Simulation {
 public:
  Simulation(const TransferSetup& setup, Registry& registry, const ChannelConfig& config, IntruderPolicy* policy)
      : setup_(setup),
        registry_(registry),
        config_(config),
        policy_(policy),
        n_a_(Term::nonce("na", setup.session)),
        n_b_(Term::nonce("nb", setup.session)),
        user_a_(Term::agent(setup.seller), setup.seller_credential, n_a_, registry.public_key()),
        user_b_(Term::agent(setup.buyer), n_b_, registry.public_key()) {
    if (config_.mode == ChannelMode::ActiveMitm && !policy_) {
      owned_policy_ = make_forward_all();
      policy_ = owned_policy_.get();
    }
    if (config_.mode != ChannelMode::Honest) knowledge_ = default_intruder_knowledge(setup, registry);
  }

  RunResult run() {
    trace_.add(TraceEvent::Kind::Local, kUserB, kUserA, "", std::nullopt, "buyer enters ID_B and N_B on the device");
    auto out = user_a_.run(UserA::Start{user_b_.id(), n_b_});
    send(kUserA, kServer, "M1", std::get<Send>(out).message);
    drain();

    if (!completed()) {
      registry_.advance_clock(Registry::default_timeout + 1);
      record_registry();
      registry_.lock_device(setup_.device, "device gave up waiting for " + awaited());
      record_registry();
    }

    bool done = completed();
    return RunResult{std::move(trace_), analyze(knowledge_), done, user_b_.temp_id(), n_a_, n_b_,
                     setup_.seller_credential};
  }

 private:
  bool completed() const {
    const OwnershipRecord* rec = registry_.record(setup_.device);
    return user_b_.phase() == UserB::Phase::Done && rec && rec->owner == setup_.buyer &&
           rec->status == RecordStatus::Active;
  }

  std::string awaited() const {
    if (user_a_.phase() == UserA::Phase::RequestSent && !user_b_.ticket()) return "the ticket";
    if (user_b_.phase() == UserB::Phase::PresentSent && user_a_.phase() == UserA::Phase::RequestSent) return "M4";
    if (user_a_.phase() == UserA::Phase::ConfirmSent && user_b_.phase() == UserB::Phase::PresentSent) return "M6";
    return "the transfer to finish";
  }

  void record_registry() {
    for (auto& e : registry_.drain_events()) {
      std::string detail = e.kind;
      if (!e.session.empty()) detail += " " + e.session;
      if (!e.detail.empty()) detail += ": " + e.detail;
      trace_.add(TraceEvent::Kind::RegistryEvent, kServer, "", "", std::nullopt, detail);
    }
  }

  void role_event(const char* kind, const std::string& actor, const std::string& peer, const char* id,
                  const Term& value) {
    trace_.add(TraceEvent::Kind::RoleEvent, actor, peer, id, value, kind);
  }

  void send(const std::string& from, const std::string& to, const std::string& msg, const Term& term) {
    ++ordinal_;
    trace_.add(TraceEvent::Kind::Sent, from, to, msg, term);
    if (config_.drop_after && *config_.drop_after == ordinal_) {
      trace_.add(TraceEvent::Kind::Dropped, from, to, msg, term, "channel fault");
      return;
    }
    switch (config_.mode) {
      case ChannelMode::Honest:
        queue_.push_back({from, to, msg, term});
        return;
      case ChannelMode::Eavesdrop:
        knowledge_.insert(term);
        queue_.push_back({from, to, msg, term});
        return;
      case ChannelMode::ActiveMitm:
        break;
    }
    trace_.add(TraceEvent::Kind::Intercepted, from, "I", msg, term);
    knowledge_.insert(term);
    knowledge_ = analyze(knowledge_);
    Intercept caught{ordinal_, from, to, msg, term};
    for (const auto& action : policy_->on_intercept(knowledge_, caught)) {
      switch (action.kind) {
        case IntruderAction::Kind::Forward:
          trace_.add(TraceEvent::Kind::Forwarded, "I", to, msg, term);
          queue_.push_back({from, to, msg, term});
          break;
        case IntruderAction::Kind::Drop:
          trace_.add(TraceEvent::Kind::Dropped, "I", to, msg, term, policy_->name());
          break;
        case IntruderAction::Kind::Inject: {
          if (!action.term || !can_derive(knowledge_, *action.term)) {
            throw ContractViolation("policy " + policy_->name() + " injected a non-derivable term" +
                                    (action.term ? ": " + encode(*action.term) : std::string()));
          }
          std::string dest = action.to.empty() ? to : action.to;
          trace_.add(TraceEvent::Kind::Injected, "I", dest, "", *action.term, policy_->name());
          queue_.push_back({"I", dest, "", *action.term});
          break;
        }
      }
    }
  }

  void drain() {
    while (!queue_.empty()) {
      Delivery d = std::move(queue_.front());
      queue_.pop_front();
      trace_.add(TraceEvent::Kind::Delivered, d.from, d.to, d.msg, d.term);
      if (d.to == kServer) {
        to_server(d);
      } else if (!handled_.insert(d.term).second) {
        trace_.add(TraceEvent::Kind::Local, d.to, "", "", std::nullopt, "device drops a duplicate");
      } else if (d.to == kUserA) {
        to_user_a(d);
      } else if (d.to == kUserB) {
        to_user_b(d);
      }
    }
  }

  void to_server(const Delivery& d) {
    const Term sk = registry_.private_key();
    CksReply reply;
    std::string label;
    std::string dest;
    if (open_m1(d.term, sk)) {
      reply = registry_.begin_transfer(setup_.device, d.term);
      label = "M2";
      dest = kUserA;
    } else if (open_m3(d.term, sk)) {
      reply = registry_.present_ticket(setup_.device, d.term);
      label = "M4";
      dest = kUserB;
    } else {
      reply = registry_.confirm(setup_.device, d.term);
      label = "M6";
      dest = kUserB;
    }
    record_registry();
    if (!reply.ok()) return;
    if (label == "M4") {
      role_event("witness", registry_.server(), setup_.seller, "usera_server_na", n_a_for_reply());
    } else if (label == "M6") {
      role_event("witness", registry_.server(), setup_.buyer, "userb_server_nb", n_b_for_reply());
    }
    send(kServer, dest, label, *reply.message);
  }

  Term n_a_for_reply() const {
    const OwnershipRecord* rec = registry_.record(setup_.device);
    if (rec && rec->session) {
      if (const TransferSession* s = registry_.session(*rec->session)) return s->n_a;
    }
    return n_a_;
  }

  Term n_b_for_reply() const {
    const OwnershipRecord* rec = registry_.record(setup_.device);
    if (rec && rec->session) {
      if (const TransferSession* s = registry_.session(*rec->session)) return s->n_b;
    }
    return n_b_;
  }

  void ignore(const Delivery& d, const std::string& who) {
    trace_.add(TraceEvent::Kind::Local, who, "", "", std::nullopt,
               "device ignores " + (d.msg.empty() ? std::string("message") : d.msg));
  }

  void to_user_a(const Delivery& d) {
    if (user_a_.phase() != UserA::Phase::RequestSent || user_b_.ticket()) return ignore(d, kUserA);
    user_b_.store_ticket(d.term);
    trace_.add(TraceEvent::Kind::Local, kUserA, kUserB, "", std::nullopt, "seller hands the device and ticket over");
    auto out = user_b_.run(UserB::PresentTicket{});
    send(kUserB, kServer, "M3", std::get<Send>(out).message);
  }

  void to_user_b(const Delivery& d) {
    if (user_b_.phase() == UserB::Phase::PresentSent && user_a_.phase() == UserA::Phase::RequestSent) {
      trace_.add(TraceEvent::Kind::Local, kUserB, kUserA, "", std::nullopt, "buyer hands the device back");
      auto out = user_a_.run(UserA::HandOver{d.term});
      if (auto* s = std::get_if<Send>(&out)) {
        role_event("request", setup_.seller, registry_.server(), "usera_server_na", n_a_);
        send(kUserA, kServer, "M5", s->message);
      } else {
        abort_signal(std::get<Abort>(out).reason);
      }
      return;
    }
    if (user_b_.phase() == UserB::Phase::PresentSent && user_a_.phase() == UserA::Phase::ConfirmSent) {
      auto out = user_b_.run(UserB::Complete{d.term});
      if (std::holds_alternative<Done>(out)) {
        role_event("request", setup_.buyer, registry_.server(), "userb_server_nb", n_b_);
        trace_.add(TraceEvent::Kind::Local, kUserB, "", "", std::nullopt, "buyer stores the TempID");
      } else {
        abort_signal(std::get<Abort>(out).reason);
      }
      return;
    }
    ignore(d, kUserB);
  }

  void abort_signal(const std::string& reason) {
    trace_.add(TraceEvent::Kind::Local, "device", kServer, "", std::nullopt, "abort signal: " + reason);
    registry_.lock_device(setup_.device, reason);
    record_registry();
  }

  const TransferSetup& setup_;
  Registry& registry_;
  ChannelConfig config_;
  IntruderPolicy* policy_;
  std::unique_ptr<IntruderPolicy> owned_policy_;
  Term n_a_;
  Term n_b_;
  UserA user_a_;
  UserB user_b_;
  KnowledgeSet knowledge_;
  Trace trace_;
  std::deque<Delivery> queue_;
  // Messages the shared device has already acted on.
  std::set<Term> handled_;
  std::size_t ordinal_ = 0;
};

}  // namespace

std::unique_ptr<IntruderPolicy> make_forward_all() { return std::make_unique<ForwardAll>(); }
std::unique_ptr<IntruderPolicy> make_replay_random(std::uint64_t seed) { return std::make_unique<ReplayRandom>(seed); }
std::unique_ptr<IntruderPolicy> make_replay_at(std::size_t k) { return std::make_unique<ReplayAt>(k); }
std::unique_ptr<IntruderPolicy> make_drop_at(std::size_t k) { return std::make_unique<DropAt>(k); }
std::unique_ptr<IntruderPolicy> make_inject_at(std::size_t k, Term garbage) {
  return std::make_unique<InjectAt>(k, std::move(garbage));
}

KnowledgeSet default_intruder_knowledge(const TransferSetup& setup, const Registry& registry) {
  return KnowledgeSet{Term::agent(setup.seller), Term::agent(setup.buyer),    Term::agent("i"),
                      registry.public_key(),     Term::pub_key("i"),          Term::priv_key("i")};
}

RunResult run_session(const TransferSetup& setup, Registry& registry, const ChannelConfig& config,
                      IntruderPolicy* policy) {
  return Simulation(setup, registry, config, policy).run();
}

std::vector<Term> transfer_secrets(const RunResult& run) {
  std::vector<Term> out{run.pw_a, run.n_a, run.n_b, payment_payload()};
  if (run.temp_id) out.push_back(*run.temp_id);
  return out;
}

std::vector<const TraceEvent*> protocol_messages(const Trace& trace) { return trace.of_kind(TraceEvent::Kind::Sent); }

}  // namespace oat
