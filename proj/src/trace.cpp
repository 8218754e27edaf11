#include "oat/trace.hpp"

#include <array>
#include <nlohmann/json.hpp>
#include <sstream>

namespace oat {

namespace {

constexpr std::array<std::pair<TraceEvent::Kind, std::string_view>, 9> kind_names{{
    {TraceEvent::Kind::Sent, "sent"},
    {TraceEvent::Kind::Intercepted, "intercepted"},
    {TraceEvent::Kind::Forwarded, "forwarded"},
    {TraceEvent::Kind::Injected, "injected"},
    {TraceEvent::Kind::Dropped, "dropped"},
    {TraceEvent::Kind::Delivered, "delivered"},
    {TraceEvent::Kind::Local, "local"},
    {TraceEvent::Kind::RoleEvent, "role_event"},
    {TraceEvent::Kind::RegistryEvent, "registry"},
}};

}  // namespace

std::string_view to_string(TraceEvent::Kind k) {
  for (const auto& [kind, name] : kind_names)
    if (kind == k) return name;
  return "?";
}

TraceEvent& Trace::add(TraceEvent::Kind kind, std::string from, std::string to, std::string msg,
                       std::optional<Term> term, std::string detail) {
  TraceEvent e;
  e.index = events.size();
  e.kind = kind;
  e.from = std::move(from);
  e.to = std::move(to);
  e.msg = std::move(msg);
  e.term = std::move(term);
  e.detail = std::move(detail);
  events.push_back(std::move(e));
  return events.back();
}

std::vector<const TraceEvent*> Trace::of_kind(TraceEvent::Kind k) const {
  std::vector<const TraceEvent*> out;
  for (const auto& e : events)
    if (e.kind == k) out.push_back(&e);
  return out;
}

std::string Trace::to_jsonl() const {
  std::string out;
  for (const auto& e : events) {
    nlohmann::ordered_json j;
    j["i"] = e.index;
    j["event"] = std::string(to_string(e.kind));
    if (!e.from.empty()) j["from"] = e.from;
    if (!e.to.empty()) j["to"] = e.to;
    if (!e.msg.empty()) j["msg"] = e.msg;
    if (e.term) j["term"] = encode(*e.term);
    if (!e.detail.empty()) j["detail"] = e.detail;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Trace Trace::from_jsonl(const std::string& text) {
  Trace t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    try {
      auto j = nlohmann::json::parse(line);
      TraceEvent e;
      e.index = j.at("i").get<std::uint64_t>();
      std::string kind = j.at("event").get<std::string>();
      bool known = false;
      for (const auto& [k, name] : kind_names) {
        if (name == kind) {
          e.kind = k;
          known = true;
        }
      }
      if (!known) throw TraceFormatError("unknown event '" + kind + "'");
      e.from = j.value("from", "");
      e.to = j.value("to", "");
      e.msg = j.value("msg", "");
      if (j.contains("term")) e.term = parse_term(j["term"].get<std::string>());
      e.detail = j.value("detail", "");
      t.events.push_back(std::move(e));
    } catch (const TraceFormatError& e) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::exception& e) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return t;
}

}  // namespace oat
