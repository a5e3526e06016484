#pragma once

#include "lkc/analysis.hpp"
#include "lkc/chain_spec.hpp"
#include "lkc/dynamics.hpp"
#include "lkc/entanglement.hpp"
#include "lkc/errors.hpp"
#include "lkc/model.hpp"
#include "lkc/parallel.hpp"
#include "lkc/topology.hpp"

namespace lkc {
inline constexpr const char* kVersion = "0.1.0";
}
