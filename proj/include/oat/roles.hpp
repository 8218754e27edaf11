#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "oat/term.hpp"

namespace oat {

/// Perfect-crypto decryption: aenc(b, pk(x)) opens with sk(x), senc(b, k)
/// opens with k. Anything else yields nullopt.
std::optional<Term> decrypt(const Term& ciphertext, const Term& key);

// Message builders. `.` below is right-associated concatenation.

/// OTR = aenc(ID_A . ID_B . N_B, P_CKS)
Term build_otr(const Term& id_a, const Term& id_b, const Term& n_b, const Term& pk_cks);
/// M1 = aenc(ID_A . PW_A . N_A . OTR, P_CKS)
Term build_m1(const Term& id_a, const Term& pw_a, const Term& n_a, const Term& otr, const Term& pk_cks);
/// M2, the ticket = aenc(transfer_id . ID_A . ID_B . N_A . N_B, P_CKS)
Term build_ticket(const Term& transfer_id, const Term& id_a, const Term& id_b, const Term& n_a, const Term& n_b,
                  const Term& pk_cks);
/// M3 = aenc(ID_B . Ticket . N_B, P_CKS)
Term build_m3(const Term& id_b, const Term& ticket, const Term& n_b, const Term& pk_cks);
/// OTC = transfer_id . payment payload
Term build_otc(const Term& transfer_id, const Term& payload);
/// M4 = senc(OTC, N_A)
Term build_m4(const Term& otc, const Term& n_a);
/// M5 = aenc(OTC, P_CKS)
Term build_m5(const Term& otc, const Term& pk_cks);
/// M6 = senc(TempID, N_B)
Term build_m6(const Term& temp_id, const Term& n_b);

/// Opaque stand-in for the payment details carried by the confirmation.
Term payment_payload();

struct OtrFields {
  Term id_a, id_b, n_b;
};
struct M1Fields {
  Term id_a, pw_a, n_a, otr;
};
struct TicketFields {
  Term transfer_id, id_a, id_b, n_a, n_b;
};
struct M3Fields {
  Term id_b, ticket, n_b;
};
struct OtcFields {
  Term transfer_id, payload;
};

// Openers used by the key server; `sk` is its private key. Each returns
// nullopt when decryption fails or the body has the wrong shape.
std::optional<OtrFields> open_otr(const Term& otr, const Term& sk);
std::optional<M1Fields> open_m1(const Term& m1, const Term& sk);
std::optional<TicketFields> open_ticket(const Term& ticket, const Term& sk);
std::optional<M3Fields> open_m3(const Term& m3, const Term& sk);
std::optional<Term> open_m5(const Term& m5, const Term& sk);
std::optional<OtcFields> split_otc(const Term& otc);

class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Send {
  Term message;
};
struct Done {};
struct Abort {
  std::string reason;
};
using RoleOutput = std::variant<Send, Done, Abort>;

/// Seller side. Sends M1 on start and the M5 echo once the M4 handed over
/// by the buyer opens under its own nonce.
class UserA {
 public:
  enum class Phase : std::uint8_t { Idle, RequestSent, ConfirmSent, Aborted };

  UserA(Term id_a, Term pw_a, Term n_a, Term pk_cks);

  /// B has typed its identity and nonce into the device.
  struct Start {
    Term id_b;
    Term n_b;
  };
  /// B hands the device back with M4 on screen.
  struct HandOver {
    Term m4;
  };
  using Input = std::variant<Start, HandOver>;

  /// Throws ProtocolError when the input does not fit the current phase.
  RoleOutput run(const Input& event);

  Phase phase() const noexcept { return phase_; }
  const Term& id() const noexcept { return id_a_; }
  const Term& nonce() const noexcept { return n_a_; }
  const std::optional<Term>& otc() const noexcept { return otc_; }

 private:
  Term id_a_, pw_a_, n_a_, pk_cks_;
  std::optional<Term> id_b_;
  std::optional<Term> otc_;
  Phase phase_ = Phase::Idle;
};

/// Buyer side. Sends M3 once the ticket sits on the device and keeps the
/// TempID that arrives in M6.
class UserB {
 public:
  enum class Phase : std::uint8_t { Idle, PresentSent, Done, Aborted };

  UserB(Term id_b, Term n_b, Term pk_cks);

  void store_ticket(Term ticket) { ticket_ = std::move(ticket); }

  struct PresentTicket {};
  struct Complete {
    Term m6;
  };
  using Input = std::variant<PresentTicket, Complete>;

  RoleOutput run(const Input& event);

  Phase phase() const noexcept { return phase_; }
  const Term& id() const noexcept { return id_b_; }
  const Term& nonce() const noexcept { return n_b_; }
  const std::optional<Term>& ticket() const noexcept { return ticket_; }
  const std::optional<Term>& temp_id() const noexcept { return temp_id_; }

 private:
  Term id_b_, n_b_, pk_cks_;
  std::optional<Term> ticket_;
  std::optional<Term> temp_id_;
  Phase phase_ = Phase::Idle;
};

// Free-function spellings of the role drivers.
inline RoleOutput usera_run(UserA& role, const UserA::Input& event) { return role.run(event); }
inline RoleOutput userb_run(UserB& role, const UserB::Input& event) { return role.run(event); }

}  // namespace oat
