#include "spt/market.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spt {

std::string scheme_name(Scheme s) {
    return s == Scheme::ExactLogGbm ? "exact-log-GBM" : "euler-log";
}

Scheme parse_scheme(const std::string& s) {
    if (s == "exact-log-GBM" || s == "exact") return Scheme::ExactLogGbm;
    if (s == "euler-log" || s == "euler") return Scheme::EulerLog;
    throw ValidationError("unknown scheme '" + s + "'");
}

void validate_spec(const ItoMarketSpec& spec) {
    require(spec.n >= 1, "spec: n must be >= 1");
    require(spec.d >= spec.n, "spec: d must be >= n");
    require(static_cast<bool>(spec.drift) && static_cast<bool>(spec.vol), "spec: missing coefficient functions");
    if (spec.x0.size() != 0) {
        require(spec.x0.size() == spec.n, "spec: x0 has wrong length");
        require(all_positive(spec.x0), "spec: initial capitalisations must be positive");
    }
}

void validate_path(const MarketPath& path) {
    require(path.times.size() == path.caps.size(), "path: times and caps differ in length");
    require(!path.times.empty(), "path: empty");
    const int n = path.n();
    for (std::size_t k = 0; k < path.size(); ++k) {
        require(path.caps[k].size() == n, "path: ragged row " + std::to_string(k));
        if (k > 0) require(path.times[k] > path.times[k - 1], "path: grid not increasing at row " + std::to_string(k));
        for (int i = 0; i < n; ++i) {
            double x = path.caps[k][i];
            require(std::isfinite(x) && x >= 0.0, "path: invalid cap at row " + std::to_string(k));
            if (k == 0) require(x > 0.0, "path: zero cap at time 0 for stock " + std::to_string(i + 1));
            else if (path.caps[k - 1][i] == 0.0)
                require(x == 0.0, "path: stock " + std::to_string(i + 1) + " revives after absorption at row " + std::to_string(k));
        }
    }
}

namespace {

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path_index), static_cast<std::uint32_t>(path_index >> 32)};
    return std::mt19937_64(seq);
}

bool check_finite(const Vec& g, const Mat& s, int step, MarketPath& out) {
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i]) || !s.row(i).allFinite()) {
            out.aborted = true;
            out.diagnostic = "non-finite coefficient at step " + std::to_string(step) + " for stock " + std::to_string(i + 1);
            return false;
        }
    }
    return true;
}

// Reflects log-weights below log(floor); returns the number of reflected stocks.
int reflect_weights(Vec& logx, double floor) {
    const double m = logx.maxCoeff();
    const double logS = m + std::log((logx.array() - m).exp().sum());
    const double lf = std::log(floor) + logS;
    int hits = 0;
    for (Eigen::Index i = 0; i < logx.size(); ++i) {
        if (logx[i] < lf) {
            logx[i] = 2.0 * lf - logx[i];
            ++hits;
        }
    }
    return hits;
}

}  // namespace

MarketPath simulate_path(const ItoMarketSpec& spec, const SimGrid& grid, std::uint64_t seed,
                         std::uint64_t path_index) {
    const int n = spec.n, d = spec.d;
    const double dt = grid.T / grid.steps;
    MarketPath out;
    out.seed = seed;
    out.spec_label = spec.label;
    out.d = d;
    out.scheme = grid.scheme;
    out.times.reserve(grid.steps + 1);
    out.caps.reserve(grid.steps + 1);

    Vec x = spec.x0.size() ? spec.x0 : Vec::Ones(n);
    Vec logx = x.array().log().matrix();
    out.times.push_back(0.0);
    out.caps.push_back(x);

    auto rng = path_rng(seed, path_index);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec z(d);

    Vec g;
    Mat s;
    const bool frozen = grid.scheme == Scheme::ExactLogGbm;
    if (frozen) {
        g = spec.drift(0.0, x);
        s = spec.vol(0.0, x);
        if (!check_finite(g, s, 0, out)) return out;
    }
    for (int k = 0; k < grid.steps; ++k) {
        const double t0 = k * dt;
        double done = 0.0;
        long taken = 0;
        while (done < dt) {
            const double t = t0 + done;
            if (!frozen) {
                g = spec.drift(t, x);
                s = spec.vol(t, x);
                if (spec.clamp_probe) out.clamp_events += spec.clamp_probe(x);
                if (!check_finite(g, s, k, out)) return out;
            }
            double h = dt - done;
            if (!frozen && grid.max_log_sd > 0.0) {
                const double v = s.rowwise().norm().maxCoeff();
                const double hmax = std::min(std::pow(grid.max_log_sd / v, 2), grid.max_log_sd / g.cwiseAbs().maxCoeff());
                if (hmax < h) h /= std::ceil(h / hmax);
            }
            if (dt - done - h < 1e-12 * dt) h = dt - done;
            if (++taken > grid.max_substeps) {
                out.aborted = true;
                out.diagnostic = "substep budget exhausted at step " + std::to_string(k + 1);
                return out;
            }
            for (int j = 0; j < d; ++j) z[j] = normal(rng);
            logx += g * h + s * z * std::sqrt(h);
            done += h;
            if (spec.weight_floor > 0.0) out.clamp_events += reflect_weights(logx, spec.weight_floor);
            if (done < dt) {
                ++out.substeps;
                x = logx.array().exp().matrix();
            }
        }
        for (int i = 0; i < n; ++i) {
            x[i] = std::exp(logx[i]);
            if (!(x[i] > 0.0) || !std::isfinite(x[i])) {
                out.aborted = true;
                out.diagnostic = "capitalisation left the representable range at step " + std::to_string(k + 1) +
                                 " for stock " + std::to_string(i + 1);
                return out;
            }
        }
        out.times.push_back(k + 1 == grid.steps ? grid.T : (k + 1) * dt);
        out.caps.push_back(x);
    }
    return out;
}

namespace {

void check_inputs(const ItoMarketSpec& spec, const SimGrid& grid, int n_paths) {
    validate_spec(spec);
    require(grid.T > 0.0, "grid: T must be positive");
    require(grid.steps >= 1, "grid: steps must be >= 1");
    require(n_paths >= 0, "n_paths must be nonnegative");
    if (grid.scheme == Scheme::ExactLogGbm)
        require(spec.constant_coefficients, "exact-log-GBM scheme needs a constant-coefficient spec");
}

}  // namespace

std::vector<MarketPath> simulate_paths_serial(const ItoMarketSpec& spec, const SimGrid& grid,
                                              int n_paths, std::uint64_t seed) {
    check_inputs(spec, grid, n_paths);
    std::vector<MarketPath> out(n_paths);
    for (int p = 0; p < n_paths; ++p) out[p] = simulate_path(spec, grid, seed, p);
    return out;
}

std::vector<MarketPath> simulate_paths(const ItoMarketSpec& spec, const SimGrid& grid,
                                       int n_paths, std::uint64_t seed) {
    check_inputs(spec, grid, n_paths);
    std::vector<MarketPath> out(n_paths);
#pragma omp parallel for schedule(dynamic)
    for (int p = 0; p < n_paths; ++p) out[p] = simulate_path(spec, grid, seed, p);
    return out;
}

void apply_thread_limit_from_env() {
#ifdef _OPENMP
    if (const char* s = std::getenv("SPT_THREADS")) {
        int k = std::atoi(s);
        if (k >= 1) omp_set_num_threads(k);
    }
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Vec market_weight_row(const Vec& caps) {
    const Eigen::Index n = caps.size();
    double total = caps.sum();
    if (!(total > 0.0)) throw ValidationError("total capitalisation is zero");
    Vec mu(n);
    double partial = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        mu[i] = caps[i] / total;
        partial += mu[i];
    }
    mu[n - 1] = caps[n - 1] == 0.0 ? 0.0 : std::max(0.0, 1.0 - partial);
    return mu;
}

std::vector<Vec> market_weights(const MarketPath& path) {
    std::vector<Vec> out;
    out.reserve(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) {
        if (!(path.caps[k].sum() > 0.0)) {
            std::ostringstream os;
            os << "all capitalisations are zero at t=" << path.times[k];
            throw ValidationError(os.str());
        }
        out.push_back(market_weight_row(path.caps[k]));
    }
    return out;
}

ItoMarketSpec constant_spec(const Vec& gamma, const Mat& sigma, const std::string& label) {
    require(gamma.size() == sigma.rows(), "constant spec: drift and volatility sizes differ");
    require(sigma.cols() >= sigma.rows(), "constant spec: need d >= n");
    ItoMarketSpec s;
    s.n = static_cast<int>(gamma.size());
    s.d = static_cast<int>(sigma.cols());
    s.label = label;
    s.constant_coefficients = true;
    s.drift = [gamma](double, const Vec&) { return gamma; };
    s.vol = [sigma](double, const Vec&) { return sigma; };
    return s;
}

namespace {

int count_below(const Vec& mu, double floor) {
    return static_cast<int>((mu.array() < floor).count());
}

}  // namespace

ItoMarketSpec vsm_spec(int n, double alpha) {
    require(n >= 2, "vsm: n must be >= 2");
    require(alpha >= 0.0, "vsm: alpha must be nonnegative");
    ItoMarketSpec s;
    s.n = n;
    s.d = n;
    s.label = "vsm";
    s.drift = [alpha](double, const Vec& x) {
        Vec mu = x / x.sum();
        Vec g(mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i) g[i] = alpha / (2.0 * std::max(mu[i], kVsmWeightFloor));
        return g;
    };
    s.vol = [](double, const Vec& x) {
        Vec mu = x / x.sum();
        Mat v = Mat::Zero(mu.size(), mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i) v(i, i) = 1.0 / std::sqrt(std::max(mu[i], kVsmWeightFloor));
        return v;
    };
    s.clamp_probe = [](const Vec& x) { return count_below(x / x.sum(), kVsmWeightFloor); };
    s.weight_floor = kVsmWeightFloor;
    return s;
}

namespace {

double pow_beta(double x, double beta) {
    return beta == 0.5 ? std::sqrt(x) : std::pow(x, beta);
}

}  // namespace

ItoMarketSpec gen_vsm_spec(int n, const Vec& alphas, double sigma, double beta,
                           std::function<double(const Vec&)> K) {
    require(n >= 2, "gen_vsm: n must be >= 2");
    require(alphas.size() == n, "gen_vsm: alphas must have n entries");
    require((alphas.array() >= 0.0).all(), "gen_vsm: alphas must be nonnegative");
    require(sigma > 0.0, "gen_vsm: sigma must be positive");
    require(beta > 0.0, "gen_vsm: beta must be positive");
    require(static_cast<bool>(K), "gen_vsm: missing K");
    ItoMarketSpec s;
    s.n = n;
    s.d = n;
    s.label = "gen_vsm";
    s.drift = [alphas, beta, K](double, const Vec& x) {
        Vec mu = x / x.sum();
        const double k = K(x);
        Vec g(mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            g[i] = alphas[i] * k * k / (2.0 * pow_beta(std::max(mu[i], kVsmWeightFloor), 2.0 * beta));
        return g;
    };
    s.vol = [sigma, beta, K](double, const Vec& x) {
        Vec mu = x / x.sum();
        const double k = K(x);
        Mat v = Mat::Zero(mu.size(), mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            v(i, i) = sigma * k / pow_beta(std::max(mu[i], kVsmWeightFloor), beta);
        return v;
    };
    s.clamp_probe = [](const Vec& x) { return count_below(x / x.sum(), kVsmWeightFloor); };
    s.weight_floor = kVsmWeightFloor;
    return s;
}

namespace {

std::vector<int> ranks_of(const Vec& x) {
    auto order = rank_order(x);
    std::vector<int> rank(x.size());
    for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = static_cast<int>(k);
    return rank;
}

}  // namespace

ItoMarketSpec hybrid_atlas_spec(double gamma, const Vec& gammas, const Vec& gs, const Vec& sigmas,
                                const Mat& rho) {
    const Eigen::Index n = gammas.size();
    require(n >= 1, "hybrid_atlas: need at least one stock");
    require(gs.size() == n && sigmas.size() == n, "hybrid_atlas: per-rank vectors must have n entries");
    require(rho.rows() == n && rho.cols() == n, "hybrid_atlas: rho must be n x n");
    for (Eigen::Index k = 0; k < n; ++k)
        require(sigmas[k] > 0.0, "hybrid_atlas: sigma for rank " + std::to_string(k + 1) + " must be positive");
    ItoMarketSpec s;
    s.n = static_cast<int>(n);
    s.d = static_cast<int>(n);
    s.label = "hybrid_atlas";
    s.drift = [gamma, gammas, gs](double, const Vec& x) {
        auto rank = ranks_of(x);
        Vec g(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = gamma + gammas[i] + gs[rank[i]];
        return g;
    };
    s.vol = [sigmas, rho](double, const Vec& x) {
        auto rank = ranks_of(x);
        Mat v = rho;
        for (Eigen::Index i = 0; i < x.size(); ++i) v(i, i) += sigmas[rank[i]];
        return v;
    };
    return s;
}

ItoMarketSpec atlas_spec(int n, double g, const Vec& sigmas) {
    require(n >= 1, "atlas: n must be >= 1");
    Vec gs = Vec::Constant(n, -g);
    gs[n - 1] = (n - 1) * g;
    auto s = hybrid_atlas_spec(g, Vec::Zero(n), gs, sigmas, Mat::Zero(n, n));
    s.label = "atlas";
    return s;
}

std::pair<double, double> nd_bv_estimate(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()));
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

ItoMarketSpec fkk_diverse_spec(int n, double delta, const Mat& sigma, const Vec& gs, double M, const Vec& x0) {
    require(n >= 2, "fkk: n must be >= 2");
    require(delta > 0.5 && delta < 1.0, "fkk: delta must lie in (1/2, 1)");
    require(sigma.rows() == n && sigma.cols() == n, "fkk: sigma must be n x n");
    require(gs.size() == n && (gs.array() >= 0.0).all(), "fkk: gs must be n nonnegative reals");
    require(M > 0.0, "fkk: M must be positive");
    require(nd_bv_estimate(sigma * sigma.transpose()).first > 0.0, "fkk: sigma fails the nondegeneracy check");
    Vec start = x0.size() ? x0 : Vec::Ones(n);
    require(start.size() == n && all_positive(start), "fkk: invalid initial state");
    require((start / start.sum()).maxCoeff() < 1.0 - delta, "fkk: initial largest weight must be below 1 - delta");

    ItoMarketSpec s;
    s.n = n;
    s.d = n;
    s.label = "fkk_diverse";
    s.x0 = start;
    s.drift = [delta, gs, M](double, const Vec& x) {
        Vec g = gs;
        const int lead = rank_order(x)[0];
        const double denom = std::log((1.0 - delta) * x.sum() / x[lead]);
        g[lead] = -(M / delta) / std::max(denom, kFkkDenomFloor);
        return g;
    };
    s.vol = [sigma](double, const Vec&) { return sigma; };
    s.clamp_probe = [delta](const Vec& x) {
        const int lead = rank_order(x)[0];
        return std::log((1.0 - delta) * x.sum() / x[lead]) < kFkkDenomFloor ? 1 : 0;
    };
    return s;
}

ItoMarketSpec log_mean_reverting_spec(int n, double kappa, double sd) {
    require(n >= 1, "mean_reverting: n must be >= 1");
    require(kappa >= 0.0, "mean_reverting: kappa must be nonnegative");
    require(sd > 0.0, "mean_reverting: s must be positive");
    ItoMarketSpec s;
    s.n = n;
    s.d = n;
    s.label = "log_mean_reverting";
    s.drift = [kappa](double, const Vec& x) {
        Vec lx = x.array().log().matrix();
        return Vec(-kappa * (lx.array() - lx.mean()).matrix());
    };
    Mat v = sd * Mat::Identity(n, n);
    s.vol = [v](double, const Vec&) { return v; };
    return s;
}

void write_path_csv(const MarketPath& path, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw RuntimeAbort("cannot write " + file);
    os << "t";
    for (int i = 1; i <= path.n(); ++i) os << ",stock_" << i;
    os << "\n";
    char buf[40];
    for (std::size_t k = 0; k < path.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", path.times[k]);
        os << buf;
        for (int i = 0; i < path.n(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", path.caps[k][i]);
            os << ',' << buf;
        }
        os << "\n";
    }
}

void write_path_meta(const MarketPath& path, const std::string& file) {
    nlohmann::ordered_json j;
    j["spec_label"] = path.spec_label;
    j["seed"] = path.seed;
    j["n"] = path.n();
    j["d"] = path.d;
    j["scheme"] = scheme_name(path.scheme);
    if (path.clamp_events) j["clamp_events"] = path.clamp_events;
    if (path.substeps) j["substeps"] = path.substeps;
    std::ofstream os(file);
    if (!os) throw RuntimeAbort("cannot write " + file);
    os << j.dump(2) << "\n";
}

MarketPath read_path_csv(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw ValidationError("cannot open " + file);
    std::string line;
    if (!std::getline(is, line)) throw ValidationError(file + ": empty file");
    int n = 0;
    for (char c : line) n += c == ',';
    require(n >= 1, file + ": expected header t,stock_1,...");
    MarketPath path;
    path.spec_label = file;
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ValidationError(file + ": bad number at row " + std::to_string(row));
            }
        }
        require(static_cast<int>(vals.size()) == n + 1, file + ": wrong column count at row " + std::to_string(row));
        path.times.push_back(vals[0]);
        path.caps.push_back(Eigen::Map<Vec>(vals.data() + 1, n));
    }
    validate_path(path);
    return path;
}

}  // namespace spt
