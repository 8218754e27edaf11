#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oat/term.hpp"

namespace oat {

struct TraceEvent {
  enum class Kind : std::uint8_t {
    Sent,
    Intercepted,
    Forwarded,
    Injected,
    Dropped,
    Delivered,
    Local,
    RoleEvent,
    RegistryEvent,
  };

  std::uint64_t index = 0;
  Kind kind = Kind::Sent;
  std::string from;
  std::string to;
  /// Protocol step label such as M3, when known.
  std::string msg;
  std::optional<Term> term;
  std::string detail;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

std::string_view to_string(TraceEvent::Kind k);

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Trace {
  std::vector<TraceEvent> events;

  /// Appends with the next index.
  TraceEvent& add(TraceEvent::Kind kind, std::string from, std::string to, std::string msg,
                  std::optional<Term> term, std::string detail = {});

  std::vector<const TraceEvent*> of_kind(TraceEvent::Kind k) const;

  /// One JSON object per line: i, event, then from/to/msg/term/detail when set.
  std::string to_jsonl() const;
  static Trace from_jsonl(const std::string& text);

  friend bool operator==(const Trace&, const Trace&) = default;
};

}  // namespace oat
