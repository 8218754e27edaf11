#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oat/deduction.hpp"
#include "oat/registry.hpp"
#include "oat/trace.hpp"

namespace oat {

enum class ChannelMode : std::uint8_t { Honest, Eavesdrop, ActiveMitm };

struct ChannelConfig {
  ChannelMode mode = ChannelMode::Honest;
  std::uint64_t seed = 0;
  /// Drop the k-th network message (1-based) to force the abort path.
  std::optional<std::size_t> drop_after;
};

/// A message the intruder caught. Origin and destination are visible to it.
struct Intercept {
  std::size_t ordinal = 0;
  std::string from;
  std::string to;
  std::string msg;
  Term term;
};

struct IntruderAction {
  enum class Kind : std::uint8_t { Forward, Inject, Drop };

  Kind kind = Kind::Forward;
  std::optional<Term> term;
  /// Recipient of an injected term; empty means the intercepted destination.
  std::string to;

  static IntruderAction forward() { return {Kind::Forward, std::nullopt, {}}; }
  static IntruderAction drop() { return {Kind::Drop, std::nullopt, {}}; }
  static IntruderAction inject(Term t, std::string to = {}) { return {Kind::Inject, std::move(t), std::move(to)}; }
};

/// Raised when a policy injects a term the intruder cannot derive.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IntruderPolicy {
 public:
  virtual ~IntruderPolicy() = default;
  virtual std::string name() const = 0;
  /// Actions for one intercepted message, applied in order. An empty list
  /// swallows the message.
  virtual std::vector<IntruderAction> on_intercept(const KnowledgeSet& knowledge, const Intercept& m) = 0;
};

std::unique_ptr<IntruderPolicy> make_forward_all();
/// Forwards everything and, with probability 1/2 per message, replays one
/// earlier message to its original recipient.
std::unique_ptr<IntruderPolicy> make_replay_random(std::uint64_t seed);
/// Replays the k-th intercepted message right after forwarding it.
std::unique_ptr<IntruderPolicy> make_replay_at(std::size_t k);
std::unique_ptr<IntruderPolicy> make_drop_at(std::size_t k);
/// Substitutes `garbage` for the k-th message.
std::unique_ptr<IntruderPolicy> make_inject_at(std::size_t k, Term garbage);

struct TransferSetup {
  std::string device = "dev1";
  std::string seller = "a";
  Term seller_credential = Term::password("a");
  std::string buyer = "b";
  std::uint64_t session = 1;
};

/// agent(seller), agent(buyer), agent(i), the server's public key and the
/// intruder's own key pair.
KnowledgeSet default_intruder_knowledge(const TransferSetup& setup, const Registry& registry);

struct RunResult {
  Trace trace;
  KnowledgeSet intruder_knowledge;
  bool completed = false;
  std::optional<Term> temp_id;
  /// Nonces and seller credential used in the run.
  Term n_a;
  Term n_b;
  Term pw_a;
};

/// Runs one ownership transfer through the simulated network. In active_mitm
/// mode a null policy means forward-all.
RunResult run_session(const TransferSetup& setup, Registry& registry, const ChannelConfig& config,
                      IntruderPolicy* policy = nullptr);

/// Values the intruder must not learn from a run: PW_A, N_A, N_B, the
/// payment payload and, once issued, the TempID.
std::vector<Term> transfer_secrets(const RunResult& run);

/// Protocol messages (Sent events) in order; the honest run has M1..M6.
std::vector<const TraceEvent*> protocol_messages(const Trace& trace);

}  // namespace oat
