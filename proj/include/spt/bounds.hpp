#pragma once

#include "spt/analytics.hpp"
#include "spt/generator.hpp"
#include "spt/market.hpp"

#include "json.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spt {

struct HorizonBound {
    std::string kind;
    std::map<std::string, double> params;
    std::optional<double> value;  // minimal horizon; empty when no bound exists
    bool sound = true;
    std::string verdict;
    std::vector<std::pair<double, double>> gamma_table;  // fk05_general only: (t, Gamma(t))
};

std::vector<std::string> bound_kinds();

HorizonBound horizon_bound(const std::string& kind, const std::map<std::string, double>& params,
                           const std::vector<std::pair<double, double>>& gamma_table = {});

// Lower bound on log(V^pi/V^mu)(t) implied by the kind's argument; zero at the horizon.
double bound_floor(const HorizonBound& b, double t);
std::function<double(double)> floor_function(const HorizonBound& b);

nlohmann::ordered_json to_json(const HorizonBound& b);
HorizonBound bound_from_json(const nlohmann::json& j);

struct RaReport {
    double fraction_above = 0.0;  // grid points with lhs >= floor
    double min_margin = 0.0;      // min over grid of lhs - floor
    bool terminal_pass = false;   // lhs(T) > 0
    double terminal_lhs = 0.0;
    double terminal_margin = 0.0;  // lhs(T) - floor(T)
};

RaReport pathwise_ra_check(const Decomposition& decomp, const HorizonBound& bound,
                           const std::function<double(double)>& floor);
RaReport pathwise_ra_check(const Decomposition& decomp, const HorizonBound& bound, double floor);

struct EnsembleConfig {
    ItoMarketSpec spec;
    SimGrid grid;
    int n_paths = 0;
    std::uint64_t seed = 0;
    Generator generator;
    HorizonBound bound;
    std::function<double(double)> floor;
    std::optional<RegimeParams> regime;  // paths failing any listed condition are excluded
};

struct PathOutcome {
    bool aborted = false;
    bool qualifying = true;
    RaReport report;
    long clamp_events = 0;
    std::string diagnostic;
};

struct EnsembleSummary {
    int paths = 0;
    int aborted = 0;
    int excluded = 0;
    int qualifying = 0;
    int terminal_pass = 0;        // qualifying paths with lhs(T) > 0
    int terminal_floor_pass = 0;  // qualifying paths with lhs(T) >= floor(T)
    int floor_pass_all = 0;       // qualifying paths above the floor at every grid point
    double min_terminal_lhs = 0.0;
    double min_terminal_margin = 0.0;
    long clamp_events = 0;
    std::vector<PathOutcome> outcomes;
};

PathOutcome verify_path(const EnsembleConfig& cfg, std::uint64_t path_index);
EnsembleSummary verify_ensemble(const EnsembleConfig& cfg);
EnsembleSummary verify_ensemble_serial(const EnsembleConfig& cfg);

}  // namespace spt
