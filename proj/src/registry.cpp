#include "oat/registry.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "oat/roles.hpp"

namespace oat {

std::string credential_digest(const Term& credential) {
  std::string data = encode(credential);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::Active: return "active";
    case RecordStatus::TransferPending: return "transfer_pending";
    case RecordStatus::Locked: return "locked";
  }
  return "?";
}

std::string_view to_string(TransferPhase p) {
  switch (p) {
    case TransferPhase::TicketIssued: return "ticket_issued";
    case TransferPhase::OtcSent: return "otc_sent";
    case TransferPhase::Finalized: return "finalized";
    case TransferPhase::Aborted: return "aborted";
  }
  return "?";
}

Registry::Registry(std::uint64_t seed, std::string server) : server_(std::move(server)), rng_(seed) {}

void Registry::provision(const std::string& device, const std::string& owner, const Term& credential) {
  if (!is_identifier(owner)) throw RegistryError("owner id '" + owner + "' is not an identifier");
  OwnershipRecord r;
  r.device = device;
  r.owner = owner;
  r.pw_digest = credential_digest(credential);
  auto [it, inserted] = records_.emplace(device, r);
  if (!inserted) throw RegistryError("device " + device + " already has an owner record");
}

std::string Registry::fresh_id(const std::string& prefix) {
  std::ostringstream os;
  os << prefix << std::hex << std::setw(16) << std::setfill('0') << rng_();
  return os.str();
}

void Registry::emit(std::string kind, std::string device, std::string session, std::string detail) {
  events_.push_back({std::move(kind), std::move(device), std::move(session), std::move(detail)});
}

std::vector<RegistryEvent> Registry::drain_events() {
  std::vector<RegistryEvent> out;
  out.swap(events_);
  return out;
}

CksReply Registry::reject(const std::string& device, std::string reason) {
  emit("reject", device, "", reason);
  return CksReply{std::nullopt, std::move(reason), false};
}

CksReply Registry::reject_and_abort(const std::string& device, const std::string& transfer_id, std::string reason) {
  emit("reject", device, transfer_id, reason);
  bool aborted = abort(transfer_id, reason);
  return CksReply{std::nullopt, std::move(reason), aborted};
}

const OwnershipRecord* Registry::record(const std::string& device) const {
  auto it = records_.find(device);
  return it == records_.end() ? nullptr : &it->second;
}

const TransferSession* Registry::session(const std::string& transfer_id) const {
  auto it = sessions_.find(transfer_id);
  return it == sessions_.end() ? nullptr : &it->second;
}

const TransferSession* Registry::live_session(const std::string& device) const {
  const OwnershipRecord* r = record(device);
  if (!r || r->status != RecordStatus::TransferPending || !r->session) return nullptr;
  return session(*r->session);
}

CksReply Registry::begin_transfer(const std::string& device, const Term& m1) {
  auto fields = open_m1(m1, private_key());
  if (!fields) return reject(device, "M1 does not open as a transfer request");
  auto rec_it = records_.find(device);
  if (rec_it == records_.end()) return reject(device, "unknown device");
  OwnershipRecord& rec = rec_it->second;
  if (rec.status == RecordStatus::TransferPending) return reject(device, "a transfer is already pending");
  if (fields->id_a.name() != rec.owner || credential_digest(fields->pw_a) != rec.pw_digest) {
    return reject(device, "seller credentials do not match the owner record");
  }
  if (std::find(used_nonces_.begin(), used_nonces_.end(), fields->n_a) != used_nonces_.end()) {
    return reject(device, "stale seller nonce");
  }
  auto otr = open_otr(fields->otr, private_key());
  if (!otr || otr->id_a != fields->id_a) return reject(device, "OTR does not match the seller");
  if (otr->n_b == fields->n_a) return reject(device, "buyer and seller nonces coincide");
  if (otr->id_b == fields->id_a) return reject(device, "buyer equals seller");

  used_nonces_.push_back(fields->n_a);
  std::string tid = fresh_id("tx");
  Term tid_term = Term::constant(tid);
  TransferSession s{tid,        device, rec.owner, otr->id_b.name(), fields->n_a, otr->n_b,
                    build_otc(tid_term, payment_payload()), TransferPhase::TicketIssued, now_ + timeout_, ""};
  sessions_.emplace(tid, std::move(s));
  rec.status = RecordStatus::TransferPending;
  rec.session = tid;
  emit("ticket", device, tid, rec.owner + " -> " + otr->id_b.name());
  return CksReply{build_ticket(tid_term, fields->id_a, otr->id_b, fields->n_a, otr->n_b, public_key()), "", false};
}

CksReply Registry::present_ticket(const std::string& device, const Term& m3) {
  auto fields = open_m3(m3, private_key());
  if (!fields) return reject(device, "M3 does not open as a ticket presentation");
  const TransferSession* live = live_session(device);
  std::string live_id = live ? live->transfer_id : "";
  auto ticket = open_ticket(fields->ticket, private_key());
  if (!ticket) {
    if (live) return reject_and_abort(device, live_id, "unreadable ticket");
    return reject(device, "unreadable ticket");
  }
  auto it = sessions_.find(ticket->transfer_id.name());
  if (it == sessions_.end() || it->second.device != device) {
    if (live) return reject_and_abort(device, live_id, "ticket names an unknown transfer");
    return reject(device, "ticket names an unknown transfer");
  }
  TransferSession& s = it->second;
  if (s.phase != TransferPhase::TicketIssued) {
    if (live && live_id != s.transfer_id) return reject_and_abort(device, live_id, "ticket of another transfer");
    return reject(device, "ticket already presented");
  }
  if (fields->id_b.name() != s.buyer || fields->n_b != s.n_b || ticket->id_b != fields->id_b ||
      ticket->n_a != s.n_a || ticket->n_b != s.n_b || ticket->id_a.name() != s.seller) {
    return reject_and_abort(device, s.transfer_id, "ticket presentation does not match the transfer");
  }
  s.phase = TransferPhase::OtcSent;
  emit("otc", device, s.transfer_id, "");
  return CksReply{build_m4(s.otc, s.n_a), "", false};
}

CksReply Registry::confirm(const std::string& device, const Term& m5) {
  auto otc = open_m5(m5, private_key());
  if (!otc) return reject(device, "M5 does not open under the server key");
  auto rec_it = records_.find(device);
  const TransferSession* live = live_session(device);
  if (rec_it == records_.end() || !live) return reject(device, "no transfer pending");
  TransferSession& s = sessions_.at(live->transfer_id);
  if (s.phase != TransferPhase::OtcSent || *otc != s.otc) {
    return reject_and_abort(device, s.transfer_id, "confirmation does not match the transfer");
  }
  OwnershipRecord& rec = rec_it->second;
  std::string temp = fresh_id("tid");
  s.phase = TransferPhase::Finalized;
  rec.owner = s.buyer;
  // The old owner's digest is overwritten; the new owner authenticates with
  // the TempID delivered in M6.
  rec.pw_digest = credential_digest(Term::constant(temp));
  rec.temp_id = temp;
  rec.status = RecordStatus::Active;
  rec.session = s.transfer_id;
  emit("finalize", device, s.transfer_id, s.seller + " -> " + s.buyer);
  return CksReply{build_m6(Term::constant(temp), s.n_b), "", false};
}

bool Registry::abort(const std::string& transfer_id, const std::string& reason) {
  auto it = sessions_.find(transfer_id);
  if (it == sessions_.end()) return false;
  TransferSession& s = it->second;
  if (s.phase == TransferPhase::Finalized || s.phase == TransferPhase::Aborted) return false;
  s.phase = TransferPhase::Aborted;
  s.abort_reason = reason;
  OwnershipRecord& rec = records_.at(s.device);
  rec.status = RecordStatus::Locked;
  rec.session = transfer_id;
  emit("abort", s.device, transfer_id, reason);
  emit("lock", s.device, transfer_id, "");
  return true;
}

void Registry::lock_device(const std::string& device, const std::string& reason) {
  auto it = records_.find(device);
  if (it == records_.end()) return;
  if (const TransferSession* live = live_session(device)) {
    abort(live->transfer_id, reason);
    return;
  }
  if (it->second.status == RecordStatus::Locked) return;
  it->second.status = RecordStatus::Locked;
  emit("lock", device, it->second.session.value_or(""), reason);
}

Access Registry::authenticate_use(const std::string& device, const std::string& user, const Term& credential) const {
  const OwnershipRecord* r = record(device);
  if (!r || r->status != RecordStatus::Active) return Access::Deny;
  if (r->owner != user || r->pw_digest != credential_digest(credential)) return Access::Deny;
  return Access::Allow;
}

void Registry::advance_clock(std::uint64_t ticks) {
  now_ += ticks;
  std::vector<std::string> expired;
  for (const auto& [id, s] : sessions_) {
    bool pending = s.phase == TransferPhase::TicketIssued || s.phase == TransferPhase::OtcSent;
    if (pending && s.deadline <= now_) expired.push_back(id);
  }
  for (const auto& id : expired) {
    emit("expire", sessions_.at(id).device, id, "deadline " + std::to_string(sessions_.at(id).deadline));
    abort(id, "deadline expired");
  }
}

std::string Registry::serialize() const {
  std::string out;
  for (const auto& [device, r] : records_) {
    nlohmann::ordered_json j;
    j["device"] = r.device;
    j["owner"] = r.owner;
    j["pw_digest"] = r.pw_digest;
    j["temp_id"] = r.temp_id ? nlohmann::ordered_json(*r.temp_id) : nlohmann::ordered_json(nullptr);
    j["status"] = std::string(to_string(r.status));
    j["session"] = r.session ? nlohmann::ordered_json(*r.session) : nlohmann::ordered_json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void Registry::store(const std::string& path) const {
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw RegistryError("cannot write " + tmp);
    os << serialize();
    os.flush();
    if (!os) throw RegistryError("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw RegistryError("cannot replace " + path + ": " + ec.message());
}

Registry Registry::parse(const std::string& text, std::uint64_t seed, const std::string& source) {
  Registry reg(seed);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw RegistryError(source + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("malformed record: ") + e.what());
    }
    if (!j.is_object()) fail("record is not an object");
    auto str = [&](const char* key) -> std::string {
      if (!j.contains(key) || !j[key].is_string()) fail(std::string("missing string field '") + key + "'");
      return j[key].get<std::string>();
    };
    auto opt = [&](const char* key) -> std::optional<std::string> {
      if (!j.contains(key)) fail(std::string("missing field '") + key + "'");
      if (j[key].is_null()) return std::nullopt;
      if (!j[key].is_string()) fail(std::string("field '") + key + "' must be a string or null");
      return j[key].get<std::string>();
    };
    OwnershipRecord r;
    r.device = str("device");
    r.owner = str("owner");
    r.pw_digest = str("pw_digest");
    r.temp_id = opt("temp_id");
    std::string status = str("status");
    r.session = opt("session");
    if (status == "active") {
      r.status = RecordStatus::Active;
    } else if (status == "locked" || status == "transfer_pending") {
      r.status = RecordStatus::Locked;
    } else {
      fail("unknown status '" + status + "'");
    }
    if (!reg.records_.emplace(r.device, r).second) fail("duplicate device '" + r.device + "'");
  }
  return reg;
}

Registry Registry::load(const std::string& path, std::uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RegistryError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), seed, path);
}

}  // namespace oat
