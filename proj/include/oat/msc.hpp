#pragma once

#include <string>

#include "oat/trace.hpp"

namespace oat {

/// Text message sequence chart. Lifelines are UA, CKS and UB when present,
/// then any other party (the intruder, checker instances) in order of first
/// appearance. Drops end in `x`; local and registry events become notes.
std::string render_msc(const Trace& trace);

}  // namespace oat
