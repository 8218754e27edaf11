#include "oat/msc.hpp"

#include <algorithm>
#include <vector>

namespace oat {

namespace {

constexpr std::size_t kColumn = 18;
constexpr std::size_t kMargin = 4;

bool drawn(const TraceEvent& e, bool has_deliveries) {
  using K = TraceEvent::Kind;
  if (has_deliveries) return e.kind == K::Delivered || e.kind == K::Dropped;
  return e.kind == K::Sent || e.kind == K::Injected || e.kind == K::Dropped;
}

}  // namespace

std::string render_msc(const Trace& trace) {
  bool has_deliveries = !trace.of_kind(TraceEvent::Kind::Delivered).empty();
  std::vector<std::string> lanes;
  auto add_lane = [&](const std::string& name) {
    if (!name.empty() && std::find(lanes.begin(), lanes.end(), name) == lanes.end()) lanes.push_back(name);
  };
  std::vector<std::string> seen;
  for (const auto& e : trace.events) {
    if (!drawn(e, has_deliveries)) continue;
    seen.push_back(e.from);
    seen.push_back(e.to);
  }
  for (const char* fixed : {"UA", "CKS", "UB"})
    if (std::find(seen.begin(), seen.end(), fixed) != seen.end() || seen.empty()) add_lane(fixed);
  for (const auto& s : seen) add_lane(s);

  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(lanes.begin(), lanes.end(), name);
    return kMargin + static_cast<std::size_t>(it - lanes.begin()) * kColumn;
  };
  const std::size_t width = kMargin + (lanes.size() - 1) * kColumn + 1;
  auto blank = [&] {
    std::string row(width, ' ');
    for (std::size_t i = 0; i < lanes.size(); ++i) row[kMargin + i * kColumn] = '|';
    return row;
  };
  auto trim = [](std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + '\n';
  };

  std::string out;
  std::string header(width + kColumn, ' ');
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    std::size_t at = kMargin + i * kColumn;
    std::size_t start = at >= lanes[i].size() / 2 ? at - lanes[i].size() / 2 : 0;
    header.replace(start, lanes[i].size(), lanes[i]);
  }
  out += trim(header);
  out += trim(blank());

  for (const auto& e : trace.events) {
    using K = TraceEvent::Kind;
    if (e.kind == K::Local || e.kind == K::RegistryEvent || e.kind == K::RoleEvent) {
      std::string note = e.kind == K::RoleEvent ? e.detail + " " + e.msg : e.detail;
      out += trim(blank() + "  " + (e.from.empty() ? std::string() : e.from + ": ") + note);
      continue;
    }
    if (!drawn(e, has_deliveries)) continue;
    std::size_t a = column(e.from);
    std::size_t b = column(e.to);
    std::string row = blank();
    if (a != b) {
      std::size_t lo = std::min(a, b) + 1;
      std::size_t hi = std::max(a, b) - 1;
      for (std::size_t i = lo; i <= hi; ++i) row[i] = '-';
      char head = e.kind == K::Dropped ? 'x' : (a < b ? '>' : '<');
      row[a < b ? hi : lo] = head;
      std::string label = e.msg.empty() ? std::string(e.kind == K::Injected ? "inj" : "?") : e.msg;
      if (hi > lo && label.size() + 2 <= hi - lo) {
        std::size_t mid = lo + (hi - lo + 1 - label.size()) / 2;
        row.replace(mid, label.size(), label);
      }
    }
    out += trim(row);
  }
  out += trim(blank());
  return out;
}

}  // namespace oat
