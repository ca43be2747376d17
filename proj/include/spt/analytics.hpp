#pragma once

#include "spt/common.hpp"
#include "spt/generator.hpp"
#include "spt/market.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spt {

struct CovEstimate {
    std::vector<double> times;
    std::vector<Mat> a;
    std::vector<double> projection_norm;
    std::vector<std::vector<int>> excluded;  // stocks left out of each estimate
};

// Eigenvalue clipping at zero; *norm receives the Frobenius size of the correction.
Mat psd_project(const Mat& a, double* norm = nullptr);

CovEstimate realized_covariance(const MarketPath& path, int window);
Mat relative_covariance(const Mat& a, const Vec& pi);
double excess_growth_rate(const Vec& pi, const Mat& a);
double numeraire_invariant_egr(const Vec& pi, const Vec& rho, const Mat& a);

// Time averages of realized a_{mu mu} (total-cap variance rate) and gamma*_mu.
struct RealizedMarketStats {
    double a_mumu = 0.0;
    double gamma_star = 0.0;
};
RealizedMarketStats realized_market_stats(const MarketPath& path);

// log sum_i pi_i mu1_i / mu0_i: one step of log(V^pi / V^mu).
double log_relative_step(const Vec& pi, const Vec& mu0, const Vec& mu1);
std::vector<double> discrete_lhs(const std::vector<Vec>& weights, const std::vector<Vec>& pis);

struct Decomposition {
    std::vector<double> times;
    std::vector<double> lhs;
    std::vector<double> gterm;
    std::vector<double> drift_int;
    std::vector<double> lt_term;
    std::vector<double> residual;
    std::vector<double> drift_rate;  // per step, left point; one shorter than times
};

Decomposition master_decomposition(const Generator& G, const MarketPath& path, const std::vector<Vec>& pi_path);
Decomposition master_decomposition(const Generator& G, const std::vector<double>& times,
                                   const std::vector<Vec>& weights, const std::vector<Vec>& pi_path);

enum class LocalTimeMethod { Tanaka, Fernholz };
LocalTimeMethod parse_local_time_method(const std::string& s);

// Per-step increments of the local time at every rank boundary: row s holds
// the increments over [t_s, t_{s+1}] for boundaries 1..n-1.
Mat local_time_increments(const std::vector<Vec>& weights, LocalTimeMethod method);
std::vector<double> local_time_profile(const std::vector<Vec>& weights, int k, LocalTimeMethod method);

Decomposition rank_master_decomposition(const Generator& G, const std::vector<double>& times,
                                        const std::vector<Vec>& weights, const std::vector<Vec>& pi_path,
                                        LocalTimeMethod method = LocalTimeMethod::Tanaka);
Decomposition rank_master_decomposition(const Generator& G, const MarketPath& path, const std::vector<Vec>& pi_path,
                                        LocalTimeMethod method = LocalTimeMethod::Tanaka);

struct PalWongLedger {
    std::vector<double> times;
    std::vector<double> free_energy;  // per step
    std::vector<double> entropy;      // H(pi(t) | mu(t)) per grid point
    std::vector<double> cross;        // per step
    std::vector<double> lhs;
    std::vector<double> residual;
};

double free_energy_step(const Vec& pi, const Vec& mu0, const Vec& mu1);
PalWongLedger palwong_decomposition(const std::vector<double>& times, const std::vector<Vec>& weights,
                                    const std::vector<Vec>& pi_path);

// (1/n) sum log x_i, with the value 0 (and *boundary set) when a coordinate is zero.
double diversity_D(const Vec& x, bool* boundary = nullptr);
double shannon_entropy(const Vec& x);
double relative_entropy(const Vec& pi, const Vec& mu);

struct DiversityMeasures {
    double D = 0.0;
    double H_shannon = 0.0;
    double H_rel = 0.0;
    bool boundary = false;
};
DiversityMeasures diversity_entropy_measures(const Vec& mu, const Vec& pi);

struct RegimeParams {
    std::optional<double> diverse_delta;
    std::optional<double> weak_diverse_delta;
    std::optional<double> nofail_delta;
    std::optional<double> fk05_p;
    double fk05_zeta = 0.0;
};

struct RegimeVerdict {
    std::string condition;
    bool holds = true;
    double value = 0.0;      // binding statistic
    double threshold = 0.0;
    double margin = 0.0;     // positive when the condition holds
    std::optional<double> first_violation;
};

std::vector<RegimeVerdict> regime_checks(const std::vector<double>& times, const std::vector<Vec>& weights,
                                         const RegimeParams& params);

// Realized integral of (1/2) sum_i mu_i^p tau^mu_ii.
double generalized_egr_integral(const std::vector<Vec>& weights, double p);

double turnover_estimate(double p, double delta_band, double egr_integral);

}  // namespace spt
