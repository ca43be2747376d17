#pragma once

#include "spt/analytics.hpp"
#include "spt/json_util.hpp"
#include "spt/market.hpp"

#include <cstdint>

namespace spt {

// {"type": "vsm" | "gen_vsm" | "hybrid_atlas" | "atlas" | "fkk" | "gbm" | "mean_reverting", ...}
ItoMarketSpec make_model(const json& j);
std::vector<std::string> model_types();

// {"T": .., "steps": .., "scheme": "euler-log" | "exact-log-GBM"}
SimGrid make_grid(const json& j);

RegimeParams make_regime(const json& j);

std::uint64_t get_seed(const json& j, const char* key, const std::string& where);

}  // namespace spt
