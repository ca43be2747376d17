#include "spt/backtest.hpp"
#include "spt/analytics.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace spt {

RebalancePolicy RebalancePolicy::every(int k) {
    require(k >= 1, "rebalance: k must be >= 1");
    RebalancePolicy p;
    p.kind = EveryK;
    p.k = k;
    return p;
}

RebalancePolicy RebalancePolicy::threshold(RebalanceMetric metric, double band) {
    require(band > 0.0, "rebalance: band must be positive");
    RebalancePolicy p;
    p.kind = Threshold;
    p.metric = metric;
    p.band = band;
    return p;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

std::optional<double> parse_cap(const std::string& cell, const std::string& where) {
    if (cell.empty() || lower(cell) == "na" || lower(cell) == "nan") return std::nullopt;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        throw ValidationError(where + ": not a number: '" + cell + "'");
    }
    if (used != cell.size() || !std::isfinite(v)) throw ValidationError(where + ": not a number: '" + cell + "'");
    if (v < 0.0) throw ValidationError(where + ": negative capitalisation");
    return v;
}

}  // namespace

LoadedData load_caps_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line) || split_csv(line).empty())
        throw ValidationError(source + ": empty data file");
    auto header = split_csv(line);
    require(lower(header[0]) == "date", source + ": first column must be 'date'");
    const bool long_form = header.size() == 3 && lower(header[1]) == "ticker" && lower(header[2]) == "cap";

    std::vector<std::string> dates, ids;
    std::vector<std::vector<std::optional<double>>> cells;  // [date][stock]
    std::vector<int> rows_of_date;
    int row = 1;
    if (long_form) {
        std::map<std::string, int> id_index;
        while (std::getline(in, line)) {
            ++row;
            if (line.empty() || line == "\r") continue;
            auto c = split_csv(line);
            const std::string where = source + " row " + std::to_string(row);
            require(c.size() == 3, where + ": expected date,ticker,cap");
            require(iso_date(c[0]), where + ": date must be YYYY-MM-DD");
            if (dates.empty() || c[0] != dates.back()) {
                require(dates.empty() || c[0] > dates.back(), where + ": dates not increasing");
                dates.push_back(c[0]);
                rows_of_date.push_back(row);
                cells.emplace_back(ids.size());
            }
            auto [it, fresh] = id_index.emplace(c[1], static_cast<int>(ids.size()));
            if (fresh) {
                ids.push_back(c[1]);
                for (auto& r : cells) r.resize(ids.size());
            }
            auto& slot = cells.back()[it->second];
            require(!slot.has_value(), where + ": duplicate ticker on one date");
            slot = parse_cap(c[2], where);
        }
    } else {
        ids.assign(header.begin() + 1, header.end());
        require(!ids.empty(), source + ": no stock columns");
        while (std::getline(in, line)) {
            ++row;
            if (line.empty() || line == "\r") continue;
            auto c = split_csv(line);
            const std::string where = source + " row " + std::to_string(row);
            if (c.size() < ids.size() + 1) c.resize(ids.size() + 1);
            require(c.size() == ids.size() + 1, where + ": wrong column count");
            require(iso_date(c[0]), where + ": date must be YYYY-MM-DD");
            require(dates.empty() || c[0] > dates.back(), where + ": dates not increasing");
            dates.push_back(c[0]);
            rows_of_date.push_back(row);
            std::vector<std::optional<double>> r(ids.size());
            for (std::size_t i = 0; i < ids.size(); ++i) r[i] = parse_cap(c[i + 1], where);
            cells.push_back(std::move(r));
        }
    }
    require(!dates.empty(), source + ": empty data file");

    LoadedData out;
    out.dates = dates;
    out.ids = ids;
    const std::size_t n = ids.size();
    std::vector<bool> filled(n, false);
    out.path.spec_label = source;
    for (std::size_t k = 0; k < dates.size(); ++k) {
        Vec x(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string where = source + " row " + std::to_string(rows_of_date[k]);
            if (cells[k][i]) {
                x[i] = *cells[k][i];
                if (k > 0 && out.path.caps[k - 1][i] == 0.0 && x[i] > 0.0)
                    throw ValidationError(where + ": stock " + ids[i] + " is positive after hitting zero");
                if (k == 0 && x[i] == 0.0) throw ValidationError(where + ": stock " + ids[i] + " is zero on the first date");
                if (k > 0 && filled[i]) throw ValidationError(where + ": stock " + ids[i] + " reappears after missing values");
            } else {
                if (k == 0) throw ValidationError(where + ": stock " + ids[i] + " has no value on the first date");
                x[i] = out.path.caps[k - 1][i];
                filled[i] = true;
            }
        }
        out.path.times.push_back(static_cast<double>(k));
        out.path.caps.push_back(x);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (filled[i]) out.forward_filled.push_back(ids[i]);
    return out;
}

LoadedData load_caps_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open data file " + file);
    return load_caps_csv(in, file);
}

bool rebalance_decision(const Vec& drifted, const Vec& target, const RebalancePolicy& policy, long step) {
    if (step == 0) return true;
    if (policy.kind == RebalancePolicy::EveryK) return step % policy.k == 0;
    double metric = 0.0;
    if (policy.metric == RebalanceMetric::TotalVariation) {
        metric = 0.5 * (drifted - target).cwiseAbs().sum();
    } else {
        for (Eigen::Index i = 0; i < target.size(); ++i) {
            if (target[i] == 0.0) continue;
            if (!(drifted[i] > 0.0)) return true;
            metric += target[i] * std::log(target[i] / drifted[i]);
        }
    }
    return metric > policy.band;
}

namespace {

constexpr double kNoTrade = 1e-12;

Vec target_weights(PortfolioRule& rule, const std::vector<Vec>& history, std::size_t k, double t,
                   const BacktestOptions& opt) {
    const Vec& mu = history[k];
    std::span<const Vec> hist(history.data(), k + 1);
    Vec w;
    if (opt.zero_weight_adjustment && !all_positive(mu)) {
        if (rule.stateful())
            throw RuntimeAbort(rule.name() + ": zero-weight adjustment is not available for stateful rules (step " +
                               std::to_string(k) + ")");
        std::vector<int> support;
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            if (mu[i] > 0.0) support.push_back(static_cast<int>(i));
        Vec sub(support.size());
        for (std::size_t j = 0; j < support.size(); ++j) sub[j] = mu[support[j]];
        sub /= sub.sum();
        close_row(sub);
        std::vector<Vec> one{sub};
        Vec ws = rule.weights_at(one, t);
        w = Vec::Zero(mu.size());
        for (std::size_t j = 0; j < support.size(); ++j) w[support[j]] = ws[j];
    } else {
        try {
            w = rule.weights_at(hist, t);
        } catch (const ValidationError& e) {
            throw RuntimeAbort(rule.name() + " failed at step " + std::to_string(k) + ": " + e.what());
        }
    }
    if (w.size() != mu.size() || !w.allFinite())
        throw RuntimeAbort(rule.name() + ": invalid weight row at step " + std::to_string(k));
    if (std::fabs(w.sum() - 1.0) > 1e-9)
        throw RuntimeAbort(rule.name() + ": weights sum to " + std::to_string(w.sum()) + " at step " + std::to_string(k));
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        if (mu[i] == 0.0 && w[i] != 0.0)
            throw RuntimeAbort(rule.name() + ": nonzero weight on a zero-cap stock " + std::to_string(i + 1) +
                               " at step " + std::to_string(k));
    return w;
}

}  // namespace

BacktestReport run_backtest(PortfolioRule& rule, const MarketPath& path, const CostModel& costs,
                            const RebalancePolicy& policy, const BacktestOptions& options) {
    validate_path(path);
    require(costs.rate >= 0.0, "backtest: cost rate must be nonnegative");
    require(policy.kind != RebalancePolicy::EveryK || policy.k >= 1, "backtest: k must be >= 1");
    require(policy.kind != RebalancePolicy::Threshold || policy.band > 0.0, "backtest: band must be positive");
    const double factor = costs.convention == CostConvention::RoundTrip ? 2.0 : 1.0;
    rule.reset();
    const std::vector<Vec> mu = market_weights(path);
    const std::size_t N = path.size();
    const double X0 = path.caps[0].sum();

    BacktestReport r;
    r.rule = rule.name();
    r.times = path.times;
    double V = 1.0, logV = 0.0, costs_cum = 0.0;
    Vec w;
    for (std::size_t k = 0; k < N; ++k) {
        if (k > 0) {
            const Vec& x0 = path.caps[k - 1];
            const Vec& x1 = path.caps[k];
            double growth = 0.0;
            Vec grown = Vec::Zero(w.size());
            for (Eigen::Index i = 0; i < w.size(); ++i) {
                if (w[i] == 0.0) continue;
                grown[i] = w[i] * (x1[i] / x0[i]);
                growth += grown[i];
            }
            if (!(growth > 0.0)) throw RuntimeAbort(rule.name() + ": wealth nonpositive at step " + std::to_string(k));
            logV += std::log(growth);
            V = std::exp(logV);
            w = grown / growth;
        }
        Vec target = target_weights(rule, mu, k, path.times[k], options);
        double traded = 0.0;
        if (k == 0) {
            w = target;
        } else if (rebalance_decision(w, target, policy, static_cast<long>(k))) {
            const double turnover = (target - w).cwiseAbs().sum();
            if (turnover > kNoTrade) {
                traded = V * turnover;
                const double frac = costs.rate * factor * turnover;
                if (!(frac < 1.0)) throw RuntimeAbort(rule.name() + ": costs exhaust wealth at step " + std::to_string(k));
                const double cost = frac * V;
                if (frac > 0.0) {
                    logV += std::log1p(-frac);
                    V = std::exp(logV);
                }
                costs_cum += cost;
                ++r.n_trades;
            }
            w = target;
        }
        r.V.push_back(V);
        r.V_mkt.push_back(path.caps[k].sum() / X0);
        r.traded.push_back(traded);
        r.costs_cum.push_back(costs_cum);
        r.held.push_back(w);
    }
    r.log_V = logV;
    r.total_costs = costs_cum;
    r.terminal_log_relative = logV - std::log(path.caps.back().sum() / X0);
    r.flags = rule.flags();
    return r;
}

void write_report_csv(const BacktestReport& r, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw RuntimeAbort("cannot write " + file);
    os << "t,V,V_mkt,costs_cum\n";
    char buf[128];
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.times[k], r.V[k], r.V_mkt[k], r.costs_cum[k]);
        os << buf;
    }
}

void write_report_json(const BacktestReport& r, const std::string& file) {
    nlohmann::ordered_json j;
    j["rule"] = r.rule;
    j["terminal_log_relative"] = r.terminal_log_relative;
    j["total_costs"] = r.total_costs;
    j["n_trades"] = r.n_trades;
    if (!r.flags.empty()) j["flags"] = r.flags;
    std::ofstream os(file);
    if (!os) throw RuntimeAbort("cannot write " + file);
    os << j.dump(2) << "\n";
}

}  // namespace spt
