#include "spt/bounds.hpp"
#include "spt/json_util.hpp"
#include "spt/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace spt {

std::vector<std::string> bound_kinds() {
    return {"diverse_dwp", "entropy", "entropy_limit", "vsm_dwp_half", "fk05_general", "neg_p_dwp",
            "dwp_vs_dwp", "mixed_gen", "rank_dwp_case1", "rank_dwp_case1_small", "rank_dwp_case2"};
}

namespace {

struct Params {
    const std::string& kind;
    const std::map<std::string, double>& p;

    double get(const std::string& key) const {
        auto it = p.find(key);
        if (it == p.end()) throw ValidationError(kind + ": missing parameter '" + key + "'");
        if (!std::isfinite(it->second)) throw ValidationError(kind + ": parameter '" + key + "' must be finite");
        return it->second;
    }
    std::optional<double> opt(const std::string& key) const {
        auto it = p.find(key);
        if (it == p.end()) return std::nullopt;
        return it->second;
    }
    void allow(std::initializer_list<const char*> keys) const {
        for (const auto& [k, v] : p) {
            bool ok = false;
            for (const char* a : keys) ok = ok || k == a;
            if (!ok) throw ValidationError(kind + ": unknown parameter '" + k + "'");
        }
    }
    void check(bool cond, const std::string& constraint) const {
        if (!cond) throw ValidationError(kind + ": constraint violated: " + constraint);
    }
    double count(const std::string& key, double lo) const {
        double v = get(key);
        check(v == std::floor(v) && v >= lo, key + " must be an integer >= " + std::to_string(static_cast<int>(lo)));
        return v;
    }
};

double table_value(const std::vector<std::pair<double, double>>& table, double t) {
    if (t <= table.front().first) return table.front().second;
    if (t >= table.back().first) return table.back().second;
    auto it = std::upper_bound(table.begin(), table.end(), t,
                               [](double v, const std::pair<double, double>& e) { return v < e.first; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    return a.second + (b.second - a.second) * (t - a.first) / (b.first - a.first);
}

// Gamma is nondecreasing; first t where the interpolant reaches target.
double interp_inverse(const std::vector<std::pair<double, double>>& table, double target) {
    double lo = table.front().first, hi = table.back().first;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
        double mid = 0.5 * (lo + hi);
        if (table_value(table, mid) >= target) hi = mid;
        else lo = mid;
    }
    return hi;
}

}  // namespace

HorizonBound horizon_bound(const std::string& kind, const std::map<std::string, double>& params,
                           const std::vector<std::pair<double, double>>& gamma_table) {
    Params P{kind, params};
    HorizonBound b;
    b.kind = kind;
    b.params = params;
    if (kind == "diverse_dwp") {
        P.allow({"n", "p", "eps", "delta"});
        double n = P.count("n", 2), p = P.get("p"), eps = P.get("eps"), delta = P.get("delta");
        P.check(p > 0.0 && p < 1.0, "p in (0,1)");
        P.check(eps > 0.0, "eps > 0");
        P.check(delta > 0.0 && delta < 1.0, "delta in (0,1)");
        b.value = 2.0 * std::log(n) / (p * eps * delta);
    } else if (kind == "entropy" || kind == "entropy_limit") {
        P.allow({"n", "zeta", "c", "H0"});
        double n = P.count("n", 2), zeta = P.get("zeta");
        P.check(zeta > 0.0, "zeta > 0");
        double H0 = P.opt("H0").value_or(std::log(n));
        P.check(H0 >= 0.0 && H0 <= std::log(n) + 1e-12, "H0 in [0, log n]");
        auto c = P.opt("c");
        if (kind == "entropy_limit" || !c) {
            P.check(!c, "entropy_limit takes no c");
            b.value = H0 / zeta;
        } else {
            P.check(*c > 0.0, "c > 0");
            b.value = (1.0 / zeta) * (*c + std::log(n)) * std::log((*c + H0) / *c);
        }
        P.check(*b.value > 0.0, "H0 > 0");
    } else if (kind == "vsm_dwp_half") {
        P.allow({"n"});
        double n = P.count("n", 2);
        b.value = 8.0 * std::log(n) / (n - 1.0);
    } else if (kind == "fk05_general") {
        P.allow({"n", "p"});
        double n = P.count("n", 2), p = P.get("p");
        P.check(p > 0.0 && p < 1.0, "p in (0,1)");
        P.check(gamma_table.size() >= 2, "Gamma table with at least two points");
        for (std::size_t i = 1; i < gamma_table.size(); ++i) {
            P.check(gamma_table[i].first > gamma_table[i - 1].first, "Gamma table times increasing");
            P.check(gamma_table[i].second >= gamma_table[i - 1].second, "Gamma nondecreasing");
        }
        const double target = std::pow(n, 1.0 - p) / p * std::log(n);
        P.check(gamma_table.back().second >= target, "Gamma table reaches n^(1-p) log n / p");
        b.gamma_table = gamma_table;
        b.value = interp_inverse(gamma_table, target);
    } else if (kind == "neg_p_dwp") {
        P.allow({"n", "p", "eps", "delta"});
        double n = P.count("n", 2), p = P.get("p"), eps = P.get("eps"), delta = P.get("delta");
        P.check(eps > 0.0, "eps > 0");
        P.check(delta > 0.0 && delta < 1.0 / n, "delta in (0, 1/n)");
        const double lo = std::log(n) / std::log(n * delta);
        P.check(p > lo && p < 0.0, "p in (log n / log(n delta), 0) = (" + std::to_string(lo) + ", 0)");
        const double nd = std::pow(n * delta, p);
        b.value = -2.0 * n * std::log(n * delta) / (eps * (1.0 - p) * (n - nd));
    } else if (kind == "dwp_vs_dwp") {
        P.allow({"n", "p_minus", "p_plus", "eps", "K", "delta"});
        double n = P.count("n", 2), pm = P.get("p_minus"), pp = P.get("p_plus");
        double eps = P.get("eps"), K = P.get("K"), delta = P.get("delta");
        P.check(eps > 0.0, "eps > 0");
        P.check(K > 0.0, "K > 0");
        P.check(delta > 0.0 && delta < 1.0 / n, "delta in (0, 1/n)");
        const double lo = std::log(n) / std::log(n * delta);
        P.check(pm > lo && pm < 0.0, "p_minus in (log n / log(n delta), 0)");
        P.check(pp > 0.0 && pp < 1.0, "p_plus in (0,1)");
        const double C = eps / 2.0 * (1.0 - std::pow(n * delta, pm) / n) * (1.0 - pm) - 2.0 * K * ((n - 1.0) / n) * (1.0 - pp);
        b.params["C"] = C;
        if (C > 0.0) {
            b.value = -std::log(delta * std::pow(n, 2.0 - 1.0 / pp)) / C;
        } else {
            b.verdict = "no bound: C <= 0";
        }
    } else if (kind == "mixed_gen") {
        P.allow({"n", "p_minus", "p_plus", "eps", "delta"});
        double n = P.count("n", 2), pm = P.get("p_minus"), pp = P.get("p_plus");
        double eps = P.get("eps"), delta = P.get("delta");
        P.check(eps > 0.0, "eps > 0");
        P.check(delta > 0.0 && delta < 1.0, "delta in (0,1)");
        P.check(pm < 0.0, "p_minus < 0");
        P.check(pp > 0.0 && pp < 1.0, "p_plus in (0,1)");
        const double am = std::pow(n, 1.0 / pm - 1.0), ap = std::pow(n, 1.0 / pp - 1.0);
        b.value = 2.0 * (1.0 + am) * std::log(ap + am) / (eps * (1.0 - pp) * (1.0 - delta));
    } else if (kind == "rank_dwp_case1") {
        P.allow({"n", "m", "r", "eps", "delta"});
        double n = P.count("n", 2), m = P.count("m", 1), r = P.get("r"), eps = P.get("eps"), delta = P.get("delta");
        P.check(m < n, "m < n");
        P.check(r > 0.0 && r < 1.0, "r in (0,1)");
        P.check(eps > 0.0, "eps > 0");
        P.check(delta > 0.0 && delta < 1.0, "delta in (0,1)");
        const double rate = eps / 2.0 * delta * (1.0 - r) - 1.0 / (2.0 * m);
        P.check(rate > 0.0, "eps delta (1-r)/2 > 1/(2m)");
        b.sound = false;
        b.value = (1.0 - r) / r * std::log(n) / rate;
    } else if (kind == "rank_dwp_case1_small") {
        P.allow({"n", "m", "r", "eps", "kappa"});
        double n = P.count("n", 2), m = P.count("m", 2), r = P.get("r"), eps = P.get("eps"), kappa = P.get("kappa");
        P.check(m <= n, "m <= n");
        P.check(r > 0.0 && r < 1.0, "r in (0,1)");
        P.check(eps > 0.0, "eps > 0");
        P.check(kappa > 0.0, "kappa > 0");
        const double head = std::log(std::pow(kappa, r) / std::pow(n, 1.0 - r)) / r;
        P.check(head < 0.0, "kappa^r < n^(1-r)");
        b.sound = false;
        b.value = -head / (eps / 2.0 * (m - 1.0) * kappa * (1.0 - r));
    } else if (kind == "rank_dwp_case2") {
        P.allow({"n", "m", "r", "eps", "kappa"});
        double n = P.count("n", 2), m = P.count("m", 2), r = P.get("r"), eps = P.get("eps"), kappa = P.get("kappa");
        P.check(m <= n, "m <= n");
        P.check(r < 0.0, "r < 0");
        P.check(eps > 0.0, "eps > 0");
        P.check(kappa > 0.0 && kappa < 1.0 / m, "kappa in (0, 1/m)");
        const double rate = (eps / 2.0 * (m - 1.0) * (1.0 - r) - 0.5) / m;
        P.check(rate > 0.0, "(eps/2)(m-1)(1-r) > 1/2");
        b.sound = false;
        b.value = -std::log(m * kappa) / rate;
    } else {
        throw ValidationError("unknown bound kind '" + kind + "'");
    }
    if (b.verdict.empty()) b.verdict = b.sound ? "bound" : "bound (unsound: not a proved result)";
    return b;
}

double bound_floor(const HorizonBound& b, double t) {
    Params P{b.kind, b.params};
    const std::string& k = b.kind;
    if (k == "diverse_dwp") {
        double n = P.get("n"), p = P.get("p"), eps = P.get("eps"), delta = P.get("delta");
        return (1.0 - p) * (eps * delta * t / 2.0 - std::log(n) / p);
    }
    if (k == "entropy") {
        auto c = P.opt("c");
        if (!c) throw ValidationError("entropy limit has no finite-c floor");
        double n = P.get("n"), zeta = P.get("zeta");
        double H0 = P.opt("H0").value_or(std::log(n));
        return std::log(*c / (*c + H0)) + zeta * t / (*c + std::log(n));
    }
    if (k == "vsm_dwp_half") {
        double n = P.get("n");
        return -std::log(n) + (n - 1.0) * t / 8.0;
    }
    if (k == "fk05_general") {
        double n = P.get("n"), p = P.get("p");
        return -(1.0 - p) * std::log(n) + p * (1.0 - p) * table_value(b.gamma_table, t) / std::pow(n, 1.0 - p);
    }
    if (k == "neg_p_dwp") {
        double n = P.get("n"), p = P.get("p"), eps = P.get("eps"), delta = P.get("delta");
        return std::log(n * delta) + (1.0 - p) * (eps / 2.0) * t * (1.0 - std::pow(n * delta, p) / n);
    }
    if (k == "dwp_vs_dwp") {
        double n = P.get("n"), pp = P.get("p_plus"), delta = P.get("delta"), C = P.get("C");
        return std::log(delta * std::pow(n, 2.0 - 1.0 / pp)) + C * t;
    }
    if (k == "mixed_gen") {
        double n = P.get("n"), pm = P.get("p_minus"), pp = P.get("p_plus"), eps = P.get("eps"), delta = P.get("delta");
        const double am = std::pow(n, 1.0 / pm - 1.0), ap = std::pow(n, 1.0 / pp - 1.0);
        return -std::log(ap + am) + eps * (1.0 - pp) * (1.0 - delta) * t / (2.0 * (1.0 + am));
    }
    if (k == "rank_dwp_case1") {
        double n = P.get("n"), m = P.get("m"), r = P.get("r"), eps = P.get("eps"), delta = P.get("delta");
        return -(1.0 - r) / r * std::log(n) + (eps / 2.0 * delta * (1.0 - r) - 1.0 / (2.0 * m)) * t;
    }
    if (k == "rank_dwp_case1_small") {
        double n = P.get("n"), m = P.get("m"), r = P.get("r"), eps = P.get("eps"), kappa = P.get("kappa");
        return std::log(std::pow(kappa, r) / std::pow(n, 1.0 - r)) / r + eps / 2.0 * (m - 1.0) * kappa * (1.0 - r) * t;
    }
    if (k == "rank_dwp_case2") {
        double m = P.get("m"), r = P.get("r"), eps = P.get("eps"), kappa = P.get("kappa");
        return std::log(m * kappa) + (eps / 2.0 * (m - 1.0) * (1.0 - r) - 0.5) / m * t;
    }
    throw ValidationError("bound kind '" + k + "' has no pathwise floor");
}

std::function<double(double)> floor_function(const HorizonBound& b) {
    bound_floor(b, 0.0);
    return [b](double t) { return bound_floor(b, t); };
}

nlohmann::ordered_json to_json(const HorizonBound& b) {
    nlohmann::ordered_json j;
    j["kind"] = b.kind;
    nlohmann::ordered_json p = nlohmann::ordered_json::object();
    for (const auto& [k, v] : b.params) p[k] = v;
    j["params"] = p;
    if (b.value) j["value"] = *b.value;
    else j["value"] = nullptr;
    j["sound"] = b.sound;
    j["verdict"] = b.verdict;
    return j;
}

HorizonBound bound_from_json(const nlohmann::json& j) {
    require(j.is_object(), "bound: expected a JSON object");
    std::string kind = get_str(j, "kind", "", "bound");
    std::map<std::string, double> params;
    std::vector<std::pair<double, double>> table;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "kind") continue;
        if (it.key() == "gamma_table") {
            require(it->is_array(), "bound: gamma_table must be an array of [t, Gamma] pairs");
            for (const auto& e : *it) {
                require(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number(),
                        "bound: gamma_table entries must be [t, Gamma] pairs");
                table.emplace_back(e[0].get<double>(), e[1].get<double>());
            }
            continue;
        }
        if (!it->is_number()) throw ValidationError("bound " + kind + ": parameter '" + it.key() + "' must be a number");
        params[it.key()] = it->get<double>();
    }
    return horizon_bound(kind, params, table);
}

RaReport pathwise_ra_check(const Decomposition& d, const HorizonBound& bound,
                           const std::function<double(double)>& floor) {
    require(!d.times.empty(), "pathwise_ra_check: empty decomposition");
    if (!bound.value) throw ValidationError("pathwise_ra_check: bound " + bound.kind + " has no horizon");
    const double span = d.times.back() - d.times.front();
    if (span < *bound.value * (1.0 - 1e-12))
        throw ValidationError("pathwise_ra_check: grid ends before the bound horizon " + std::to_string(*bound.value));
    RaReport r;
    std::size_t above = 0;
    r.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < d.times.size(); ++k) {
        double m = d.lhs[k] - floor(d.times[k] - d.times.front());
        if (m >= 0.0) ++above;
        r.min_margin = std::min(r.min_margin, m);
    }
    r.fraction_above = static_cast<double>(above) / d.times.size();
    r.terminal_lhs = d.lhs.back();
    r.terminal_pass = r.terminal_lhs > 0.0;
    r.terminal_margin = r.terminal_lhs - floor(span);
    return r;
}

RaReport pathwise_ra_check(const Decomposition& d, const HorizonBound& bound, double floor) {
    return pathwise_ra_check(d, bound, [floor](double) { return floor; });
}

PathOutcome verify_path(const EnsembleConfig& cfg, std::uint64_t path_index) {
    PathOutcome out;
    MarketPath path = simulate_path(cfg.spec, cfg.grid, cfg.seed, path_index);
    out.clamp_events = path.clamp_events;
    if (path.aborted) {
        out.aborted = true;
        out.diagnostic = path.diagnostic;
        return out;
    }
    std::vector<Vec> mu = market_weights(path);
    if (cfg.regime) {
        for (const auto& v : regime_checks(path.times, mu, *cfg.regime))
            if (!v.holds) out.qualifying = false;
        if (!out.qualifying) return out;
    }
    try {
        std::vector<Vec> pis(mu.size());
        for (std::size_t k = 0; k < mu.size(); ++k)
            pis[k] = cfg.generator.ranked ? rank_fgp_weights(cfg.generator, mu[k]) : fgp_weights(cfg.generator, mu[k]);
        Decomposition d = cfg.generator.ranked ? rank_master_decomposition(cfg.generator, path.times, mu, pis)
                                               : master_decomposition(cfg.generator, path.times, mu, pis);
        out.report = pathwise_ra_check(d, cfg.bound, cfg.floor);
    } catch (const std::exception& e) {
        out.aborted = true;
        out.diagnostic = e.what();
    }
    return out;
}

namespace {

void check_config(const EnsembleConfig& cfg) {
    validate_spec(cfg.spec);
    require(cfg.n_paths >= 1, "verify: n_paths must be >= 1");
    require(static_cast<bool>(cfg.floor), "verify: missing floor");
    require(cfg.bound.value.has_value(), "verify: bound has no horizon");
    require(cfg.grid.T >= *cfg.bound.value * (1.0 - 1e-12), "verify: grid ends before the bound horizon");
}

EnsembleSummary summarize(std::vector<PathOutcome> outcomes) {
    EnsembleSummary s;
    s.paths = static_cast<int>(outcomes.size());
    s.min_terminal_lhs = std::numeric_limits<double>::infinity();
    s.min_terminal_margin = std::numeric_limits<double>::infinity();
    for (const auto& o : outcomes) {
        s.clamp_events += o.clamp_events;
        if (o.aborted) {
            ++s.aborted;
            continue;
        }
        if (!o.qualifying) {
            ++s.excluded;
            continue;
        }
        ++s.qualifying;
        s.terminal_pass += o.report.terminal_pass;
        s.terminal_floor_pass += o.report.terminal_margin >= 0.0;
        s.floor_pass_all += o.report.fraction_above == 1.0;
        s.min_terminal_lhs = std::min(s.min_terminal_lhs, o.report.terminal_lhs);
        s.min_terminal_margin = std::min(s.min_terminal_margin, o.report.terminal_margin);
    }
    s.outcomes = std::move(outcomes);
    return s;
}

}  // namespace

EnsembleSummary verify_ensemble_serial(const EnsembleConfig& cfg) {
    check_config(cfg);
    std::vector<PathOutcome> outcomes(cfg.n_paths);
    for (int p = 0; p < cfg.n_paths; ++p) outcomes[p] = verify_path(cfg, p);
    return summarize(std::move(outcomes));
}

EnsembleSummary verify_ensemble(const EnsembleConfig& cfg) {
    check_config(cfg);
    std::vector<PathOutcome> outcomes(cfg.n_paths);
#pragma omp parallel for schedule(dynamic)
    for (int p = 0; p < cfg.n_paths; ++p) outcomes[p] = verify_path(cfg, p);
    return summarize(std::move(outcomes));
}

}  // namespace spt
