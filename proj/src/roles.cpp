#include "oat/roles.hpp"

#include <vector>

namespace oat {

namespace {

// Splits a right-associated concatenation into exactly n parts; the last
// part keeps any remaining tail.
std::optional<std::vector<Term>> split(const Term& t, std::size_t n) {
  std::vector<Term> parts;
  const Term* cur = &t;
  while (parts.size() + 1 < n) {
    if (cur->kind() != TermKind::Concat) return std::nullopt;
    parts.push_back(cur->left());
    cur = &cur->right();
  }
  parts.push_back(*cur);
  return parts;
}

bool is(const Term& t, TermKind k) { return t.kind() == k; }

}  // namespace

std::optional<Term> decrypt(const Term& c, const Term& key) {
  if (c.kind() == TermKind::AEnc) {
    if (key.kind() == TermKind::PrivKey && key.name() == c.key().name()) return c.body();
    return std::nullopt;
  }
  if (c.kind() == TermKind::SEnc && c.key() == key) return c.body();
  return std::nullopt;
}

Term build_otr(const Term& id_a, const Term& id_b, const Term& n_b, const Term& pk_cks) {
  return Term::aenc(Term::cat({id_a, id_b, n_b}), pk_cks);
}

Term build_m1(const Term& id_a, const Term& pw_a, const Term& n_a, const Term& otr, const Term& pk_cks) {
  return Term::aenc(Term::cat({id_a, pw_a, n_a, otr}), pk_cks);
}

Term build_ticket(const Term& transfer_id, const Term& id_a, const Term& id_b, const Term& n_a, const Term& n_b,
                  const Term& pk_cks) {
  return Term::aenc(Term::cat({transfer_id, id_a, id_b, n_a, n_b}), pk_cks);
}

Term build_m3(const Term& id_b, const Term& ticket, const Term& n_b, const Term& pk_cks) {
  return Term::aenc(Term::cat({id_b, ticket, n_b}), pk_cks);
}

Term build_otc(const Term& transfer_id, const Term& payload) { return Term::concat(transfer_id, payload); }
Term build_m4(const Term& otc, const Term& n_a) { return Term::senc(otc, n_a); }
Term build_m5(const Term& otc, const Term& pk_cks) { return Term::aenc(otc, pk_cks); }
Term build_m6(const Term& temp_id, const Term& n_b) { return Term::senc(temp_id, n_b); }

Term payment_payload() { return Term::constant("otc_payload"); }

std::optional<OtrFields> open_otr(const Term& otr, const Term& sk) {
  auto body = decrypt(otr, sk);
  if (!body) return std::nullopt;
  auto p = split(*body, 3);
  if (!p || !is((*p)[0], TermKind::Agent) || !is((*p)[1], TermKind::Agent) || !is((*p)[2], TermKind::Nonce)) {
    return std::nullopt;
  }
  return OtrFields{(*p)[0], (*p)[1], (*p)[2]};
}

std::optional<M1Fields> open_m1(const Term& m1, const Term& sk) {
  auto body = decrypt(m1, sk);
  if (!body) return std::nullopt;
  auto p = split(*body, 4);
  if (!p || !is((*p)[0], TermKind::Agent) || !(*p)[1].is_atomic() || !is((*p)[2], TermKind::Nonce) ||
      !is((*p)[3], TermKind::AEnc)) {
    return std::nullopt;
  }
  return M1Fields{(*p)[0], (*p)[1], (*p)[2], (*p)[3]};
}

std::optional<TicketFields> open_ticket(const Term& ticket, const Term& sk) {
  auto body = decrypt(ticket, sk);
  if (!body) return std::nullopt;
  auto p = split(*body, 5);
  if (!p || !is((*p)[0], TermKind::Const) || !is((*p)[1], TermKind::Agent) || !is((*p)[2], TermKind::Agent) ||
      !is((*p)[3], TermKind::Nonce) || !is((*p)[4], TermKind::Nonce)) {
    return std::nullopt;
  }
  return TicketFields{(*p)[0], (*p)[1], (*p)[2], (*p)[3], (*p)[4]};
}

std::optional<M3Fields> open_m3(const Term& m3, const Term& sk) {
  auto body = decrypt(m3, sk);
  if (!body) return std::nullopt;
  auto p = split(*body, 3);
  if (!p || !is((*p)[0], TermKind::Agent) || !is((*p)[2], TermKind::Nonce)) return std::nullopt;
  return M3Fields{(*p)[0], (*p)[1], (*p)[2]};
}

std::optional<Term> open_m5(const Term& m5, const Term& sk) { return decrypt(m5, sk); }

std::optional<OtcFields> split_otc(const Term& otc) {
  if (otc.kind() != TermKind::Concat || !is(otc.left(), TermKind::Const)) return std::nullopt;
  return OtcFields{otc.left(), otc.right()};
}

UserA::UserA(Term id_a, Term pw_a, Term n_a, Term pk_cks)
    : id_a_(std::move(id_a)), pw_a_(std::move(pw_a)), n_a_(std::move(n_a)), pk_cks_(std::move(pk_cks)) {}

RoleOutput UserA::run(const Input& event) {
  if (const auto* start = std::get_if<Start>(&event)) {
    if (phase_ != Phase::Idle) throw ProtocolError("user A already started");
    if (start->n_b == n_a_) throw ProtocolError("buyer nonce equals seller nonce");
    id_b_ = start->id_b;
    Term otr = build_otr(id_a_, start->id_b, start->n_b, pk_cks_);
    phase_ = Phase::RequestSent;
    return Send{build_m1(id_a_, pw_a_, n_a_, otr, pk_cks_)};
  }
  const auto& hand = std::get<HandOver>(event);
  if (phase_ != Phase::RequestSent) throw ProtocolError("user A is not waiting for a confirmation");
  auto otc = decrypt(hand.m4, n_a_);
  if (!otc) {
    phase_ = Phase::Aborted;
    return Abort{"M4 does not open under N_A"};
  }
  otc_ = *otc;
  phase_ = Phase::ConfirmSent;
  return Send{build_m5(*otc_, pk_cks_)};
}

UserB::UserB(Term id_b, Term n_b, Term pk_cks)
    : id_b_(std::move(id_b)), n_b_(std::move(n_b)), pk_cks_(std::move(pk_cks)) {}

RoleOutput UserB::run(const Input& event) {
  if (std::holds_alternative<PresentTicket>(event)) {
    if (phase_ != Phase::Idle) throw ProtocolError("user B already presented a ticket");
    if (!ticket_) throw ProtocolError("no ticket on the device");
    phase_ = Phase::PresentSent;
    return Send{build_m3(id_b_, *ticket_, n_b_, pk_cks_)};
  }
  const auto& done = std::get<Complete>(event);
  if (phase_ != Phase::PresentSent) throw ProtocolError("user B is not waiting for a TempID");
  auto temp = decrypt(done.m6, n_b_);
  if (!temp) {
    phase_ = Phase::Aborted;
    return Abort{"M6 does not open under N_B"};
  }
  temp_id_ = *temp;
  phase_ = Phase::Done;
  return Done{};
}

}  // namespace oat
