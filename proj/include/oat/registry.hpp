#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "oat/term.hpp"

namespace oat {

/// Hex SHA-256 of the canonical encoding of a credential term.
std::string credential_digest(const Term& credential);

enum class RecordStatus : std::uint8_t { Active, TransferPending, Locked };
enum class TransferPhase : std::uint8_t { TicketIssued, OtcSent, Finalized, Aborted };

std::string_view to_string(RecordStatus s);
std::string_view to_string(TransferPhase p);

struct OwnershipRecord {
  std::string device;
  std::string owner;
  std::string pw_digest;
  std::optional<std::string> temp_id;
  RecordStatus status = RecordStatus::Active;
  std::optional<std::string> session;

  friend bool operator==(const OwnershipRecord&, const OwnershipRecord&) = default;
};

struct TransferSession {
  std::string transfer_id;
  std::string device;
  std::string seller;
  std::string buyer;
  Term n_a;
  Term n_b;
  Term otc;
  TransferPhase phase = TransferPhase::TicketIssued;
  std::uint64_t deadline = 0;
  std::string abort_reason;
};

/// Outcome of one key-server handler. A rejected request carries the reason;
/// `aborted` is set when the rejection also aborted the device's session.
struct CksReply {
  std::optional<Term> message;
  std::string reason;
  bool aborted = false;

  bool ok() const noexcept { return message.has_value(); }
};

struct RegistryEvent {
  /// ticket, otc, finalize, abort, lock, reject, expire
  std::string kind;
  std::string device;
  std::string session;
  std::string detail;
};

enum class Access : std::uint8_t { Allow, Deny };

class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Authoritative ownership state held by the central key server.
///
/// Single writer: every mutating call must come from one owner. Rejected
/// requests leave records untouched unless the reply says `aborted`.
class Registry {
 public:
  static constexpr std::uint64_t default_timeout = 100;

  explicit Registry(std::uint64_t seed = 0, std::string server = "cks");

  const std::string& server() const noexcept { return server_; }
  Term public_key() const { return Term::pub_key(server_); }
  Term private_key() const { return Term::priv_key(server_); }

  /// Out-of-band first-owner provisioning.
  void provision(const std::string& device, const std::string& owner, const Term& credential);

  CksReply begin_transfer(const std::string& device, const Term& m1);
  CksReply present_ticket(const std::string& device, const Term& m3);
  CksReply confirm(const std::string& device, const Term& m5);

  /// Aborts a live session and locks its device. Fails (returns false) for
  /// finalized or already aborted sessions.
  bool abort(const std::string& transfer_id, const std::string& reason);

  /// Abort signal raised by the device itself: aborts the live session if
  /// there is one, otherwise locks the record as it stands.
  void lock_device(const std::string& device, const std::string& reason);

  Access authenticate_use(const std::string& device, const std::string& user, const Term& credential) const;

  /// Advances the logical clock and aborts pending sessions whose deadline
  /// has passed.
  void advance_clock(std::uint64_t ticks);
  std::uint64_t now() const noexcept { return now_; }
  void set_timeout(std::uint64_t ticks) { timeout_ = ticks; }

  const OwnershipRecord* record(const std::string& device) const;
  const TransferSession* session(const std::string& transfer_id) const;
  const TransferSession* live_session(const std::string& device) const;
  const std::map<std::string, OwnershipRecord>& records() const noexcept { return records_; }

  std::vector<RegistryEvent> drain_events();

  /// One JSON object per line, fields in fixed order.
  void store(const std::string& path) const;
  std::string serialize() const;
  /// Throws RegistryError naming the offending line. Pending transfers do not
  /// survive a reload and come back Locked.
  static Registry load(const std::string& path, std::uint64_t seed = 0);
  static Registry parse(const std::string& text, std::uint64_t seed = 0, const std::string& source = "<registry>");

 private:
  CksReply reject(const std::string& device, std::string reason);
  CksReply reject_and_abort(const std::string& device, const std::string& transfer_id, std::string reason);
  std::string fresh_id(const std::string& prefix);
  void emit(std::string kind, std::string device, std::string session, std::string detail);

  std::string server_;
  std::mt19937_64 rng_;
  std::uint64_t now_ = 0;
  std::uint64_t timeout_ = default_timeout;
  std::map<std::string, OwnershipRecord> records_;
  std::map<std::string, TransferSession> sessions_;
  std::vector<Term> used_nonces_;
  std::vector<RegistryEvent> events_;
};

}  // namespace oat
