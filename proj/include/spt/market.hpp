#pragma once

#include "spt/common.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spt {

struct ItoMarketSpec {
    int n = 0;
    int d = 0;
    // Log-drift gamma_i = b_i - a_ii/2 at (t, caps).
    std::function<Vec(double, const Vec&)> drift;
    // n x d volatility matrix at (t, caps).
    std::function<Mat(double, const Vec&)> vol;
    std::string label;
    Vec x0;  // initial capitalisations; empty means all ones
    bool constant_coefficients = false;
    // Number of coordinates clamped when evaluating coefficients at this state.
    std::function<int(const Vec&)> clamp_probe;
    // Simulated market weights are reflected at this level when positive.
    double weight_floor = 0.0;
};

enum class Scheme { ExactLogGbm, EulerLog };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& s);

struct SimGrid {
    double T = 1.0;
    int steps = 1;
    Scheme scheme = Scheme::EulerLog;
    // Euler steps are split so that no stock's log-increment has drift or
    // standard deviation above max_log_sd; 0 turns refinement off.
    double max_log_sd = 0.25;
    long max_substeps = 1L << 24;  // per grid step; exceeding it aborts the path
};

struct MarketPath {
    std::vector<double> times;
    std::vector<Vec> caps;
    std::uint64_t seed = 0;
    std::string spec_label;
    int d = 0;
    Scheme scheme = Scheme::EulerLog;
    long clamp_events = 0;
    long substeps = 0;  // Euler substeps taken beyond one per grid step
    bool aborted = false;
    std::string diagnostic;

    int n() const { return caps.empty() ? 0 : static_cast<int>(caps.front().size()); }
    std::size_t size() const { return times.size(); }
};

void validate_spec(const ItoMarketSpec& spec);
void validate_path(const MarketPath& path);

// Both produce identical output; the serial version is the reference.
std::vector<MarketPath> simulate_paths(const ItoMarketSpec& spec, const SimGrid& grid,
                                       int n_paths, std::uint64_t seed);
std::vector<MarketPath> simulate_paths_serial(const ItoMarketSpec& spec, const SimGrid& grid,
                                              int n_paths, std::uint64_t seed);
MarketPath simulate_path(const ItoMarketSpec& spec, const SimGrid& grid, std::uint64_t seed,
                         std::uint64_t path_index);

// Reads SPT_THREADS and caps the OpenMP team size accordingly.
void apply_thread_limit_from_env();
int max_threads();

std::vector<Vec> market_weights(const MarketPath& path);
Vec market_weight_row(const Vec& caps);

ItoMarketSpec constant_spec(const Vec& gamma, const Mat& sigma, const std::string& label = "gbm");
ItoMarketSpec vsm_spec(int n, double alpha);
ItoMarketSpec gen_vsm_spec(int n, const Vec& alphas, double sigma, double beta,
                           std::function<double(const Vec&)> K);
ItoMarketSpec hybrid_atlas_spec(double gamma, const Vec& gammas, const Vec& gs, const Vec& sigmas,
                                const Mat& rho);
ItoMarketSpec atlas_spec(int n, double g, const Vec& sigmas);
ItoMarketSpec fkk_diverse_spec(int n, double delta, const Mat& sigma, const Vec& gs, double M,
                               const Vec& x0 = Vec());
// dlog X_i = -kappa (log X_i - mean_j log X_j) dt + s dW_i
ItoMarketSpec log_mean_reverting_spec(int n, double kappa, double s);

inline constexpr double kVsmWeightFloor = 1e-12;
inline constexpr double kFkkDenomFloor = 1e-3;

// Smallest eigenvalue of a and largest eigenvalue, as (eps, K) of the
// nondegeneracy and bounded-variance conditions.
std::pair<double, double> nd_bv_estimate(const Mat& a);

void write_path_csv(const MarketPath& path, const std::string& file);
void write_path_meta(const MarketPath& path, const std::string& file);
MarketPath read_path_csv(const std::string& file);

}  // namespace spt
