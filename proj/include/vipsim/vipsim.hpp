#pragma once

#include "vipsim/analysis.hpp"
#include "vipsim/attacks.hpp"
#include "vipsim/audit.hpp"
#include "vipsim/registry.hpp"
#include "vipsim/routing.hpp"
#include "vipsim/topology.hpp"
#include "vipsim/vipzone.hpp"

namespace vipsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vipsim
