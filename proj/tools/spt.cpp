#include "spt/analytics.hpp"
#include "spt/backtest.hpp"
#include "spt/bounds.hpp"
#include "spt/config.hpp"
#include "spt/market.hpp"
#include "spt/rules.hpp"
#include "spt/weights.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace spt;
namespace fs = std::filesystem;

namespace {

json read_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open config " + file);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config " + file + ": " + e.what());
    }
}

fs::path prepare_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
    return fs::path(dir);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_json(const fs::path& file, const nlohmann::ordered_json& j) {
    std::ofstream os(file);
    if (!os) throw RuntimeAbort("cannot write " + file.string());
    os << j.dump(2) << "\n";
}

std::string path_stem(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "path_%04d", i);
    return buf;
}

int cmd_simulate(const json& cfg, const fs::path& out) {
    check_keys(cfg, {"model", "grid", "n_paths", "seed"}, "simulate");
    require(cfg.contains("model"), "simulate: missing 'model'");
    require(cfg.contains("grid"), "simulate: missing 'grid'");
    ItoMarketSpec spec = make_model(cfg["model"]);
    SimGrid grid = make_grid(cfg["grid"]);
    const int n_paths = get_int(cfg, "n_paths", 1, "simulate");
    const std::uint64_t seed = get_seed(cfg, "seed", "simulate");
    auto paths = simulate_paths(spec, grid, n_paths, seed);
    int failed = 0;
    for (int i = 0; i < n_paths; ++i) {
        const auto& p = paths[i];
        if (p.aborted) {
            ++failed;
            std::cerr << path_stem(i) << ": " << p.diagnostic << "\n";
        }
        write_path_csv(p, (out / (path_stem(i) + ".csv")).string());
        write_path_meta(p, (out / (path_stem(i) + ".json")).string());
    }
    return failed ? 1 : 0;
}

MarketPath decompose_source(const json& src) {
    require(src.is_object(), "decompose: 'source' must be an object");
    if (src.contains("csv")) {
        check_keys(src, {"csv"}, "source");
        return read_path_csv(get_str(src, "csv", "", "source"));
    }
    if (src.contains("data")) {
        check_keys(src, {"data"}, "source");
        return load_caps_csv(get_str(src, "data", "", "source")).path;
    }
    check_keys(src, {"model", "grid", "seed", "path_index"}, "source");
    require(src.contains("model") && src.contains("grid"), "source: need 'csv', 'data' or 'model' + 'grid'");
    ItoMarketSpec spec = make_model(src["model"]);
    SimGrid grid = make_grid(src["grid"]);
    validate_spec(spec);
    const int idx = get_int(src, "path_index", 0, "source");
    require(idx >= 0, "source: path_index must be nonnegative");
    MarketPath p = simulate_path(spec, grid, get_seed(src, "seed", "source"), static_cast<std::uint64_t>(idx));
    if (p.aborted) throw RuntimeAbort("simulation aborted: " + p.diagnostic);
    return p;
}

int cmd_decompose(const json& cfg, const fs::path& out) {
    check_keys(cfg, {"source", "generator", "local_time"}, "decompose");
    require(cfg.contains("source"), "decompose: missing 'source'");
    require(cfg.contains("generator"), "decompose: missing 'generator'");
    Generator G = make_generator(cfg["generator"]);
    const LocalTimeMethod method = parse_local_time_method(get_str(cfg, "local_time", "tanaka", "decompose"));
    MarketPath path = decompose_source(cfg["source"]);
    validate_path(path);
    std::vector<Vec> mu = market_weights(path);
    std::vector<Vec> pis(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) {
        try {
            pis[k] = G.ranked ? rank_fgp_weights(G, mu[k]) : fgp_weights(G, mu[k]);
        } catch (const ValidationError& e) {
            throw RuntimeAbort("weights undefined at t=" + fmt(path.times[k]) + ": " + e.what());
        }
    }
    Decomposition d = G.ranked ? rank_master_decomposition(G, path.times, mu, pis, method)
                               : master_decomposition(G, path.times, mu, pis);
    {
        std::ofstream os(out / "decomposition.csv");
        if (!os) throw RuntimeAbort("cannot write decomposition.csv");
        os << "t,lhs,gterm,drift_int,lt_term,residual\n";
        for (std::size_t k = 0; k < d.times.size(); ++k)
            os << fmt(d.times[k]) << ',' << fmt(d.lhs[k]) << ',' << fmt(d.gterm[k]) << ',' << fmt(d.drift_int[k])
               << ',' << fmt(d.lt_term[k]) << ',' << fmt(d.residual[k]) << '\n';
    }
    bool positive = true;
    for (std::size_t k = 0; k < mu.size(); ++k) positive = positive && all_positive(mu[k]) && all_positive(pis[k]);
    if (!positive) {
        std::cerr << "note: portfolio or market has zero weights; palwong.csv not written\n";
        return 0;
    }
    PalWongLedger L = palwong_decomposition(path.times, mu, pis);
    std::ofstream os(out / "palwong.csv");
    if (!os) throw RuntimeAbort("cannot write palwong.csv");
    os << "t,lhs,free_energy_cum,entropy,cross_cum,residual\n";
    double fe = 0.0, cr = 0.0;
    for (std::size_t k = 0; k < L.times.size(); ++k) {
        if (k > 0) {
            fe += L.free_energy[k - 1];
            cr += L.cross[k - 1];
        }
        os << fmt(L.times[k]) << ',' << fmt(L.lhs[k]) << ',' << fmt(fe) << ',' << fmt(L.entropy[k]) << ','
           << fmt(cr) << ',' << fmt(L.residual[k]) << '\n';
    }
    return 0;
}

int cmd_bounds(const json& cfg, const fs::path& out) {
    check_keys(cfg, {"bounds"}, "bounds");
    require(cfg.contains("bounds") && cfg["bounds"].is_array(), "bounds: 'bounds' must be an array");
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& b : cfg["bounds"]) arr.push_back(to_json(bound_from_json(b)));
    write_json(out / "bounds.json", arr);
    return 0;
}

RebalancePolicy make_policy(const json& j) {
    check_keys(j, {"kind", "k", "metric", "band"}, "policy");
    const std::string kind = get_str(j, "kind", "every_k", "policy");
    if (kind == "every_k") return RebalancePolicy::every(get_int(j, "k", 1, "policy"));
    if (kind == "threshold") {
        const std::string m = get_str(j, "metric", "total_variation", "policy");
        require(m == "total_variation" || m == "relative_entropy", "policy: unknown metric '" + m + "'");
        return RebalancePolicy::threshold(
            m == "total_variation" ? RebalanceMetric::TotalVariation : RebalanceMetric::RelativeEntropy,
            get_num(j, "band", "policy"));
    }
    throw ValidationError("policy: unknown kind '" + kind + "'");
}

CostModel make_costs(const json& j) {
    check_keys(j, {"rate", "convention"}, "costs");
    CostModel c;
    c.rate = get_num(j, "rate", 0.0, "costs");
    require(c.rate >= 0.0, "costs: rate must be nonnegative");
    const std::string conv = get_str(j, "convention", "one_way", "costs");
    require(conv == "one_way" || conv == "round_trip", "costs: convention must be 'one_way' or 'round_trip'");
    c.convention = conv == "one_way" ? CostConvention::OneWay : CostConvention::RoundTrip;
    return c;
}

int cmd_backtest(const json& cfg, const fs::path& out) {
    check_keys(cfg, {"data", "rules", "costs", "policy", "zero_weight_adjustment"}, "backtest");
    require(cfg.contains("rules") && cfg["rules"].is_array() && !cfg["rules"].empty(),
            "backtest: 'rules' must be a nonempty array");
    std::vector<RulePtr> rules;
    for (const auto& r : cfg["rules"]) rules.push_back(make_rule(r));
    const CostModel costs = make_costs(cfg.value("costs", json::object()));
    const RebalancePolicy policy = make_policy(cfg.value("policy", json::object()));
    BacktestOptions opt;
    if (cfg.contains("zero_weight_adjustment")) {
        require(cfg["zero_weight_adjustment"].is_boolean(), "backtest: zero_weight_adjustment must be a boolean");
        opt.zero_weight_adjustment = cfg["zero_weight_adjustment"].get<bool>();
    }
    LoadedData data = load_caps_csv(get_str(cfg, "data", "", "backtest"));

    const int R = static_cast<int>(rules.size());
    std::vector<BacktestReport> reports(R);
    std::vector<std::string> errors(R);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < R; ++i) {
        try {
            reports[i] = run_backtest(*rules[i], data.path, costs, policy, opt);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (int i = 0; i < R; ++i)
        if (!errors[i].empty()) throw RuntimeAbort(rules[i]->name() + ": " + errors[i]);

    for (int i = 0; i < R; ++i) {
        for (const auto& id : data.forward_filled) reports[i].flags.push_back("forward-filled: " + id);
        char stem[64];
        std::snprintf(stem, sizeof stem, "report_%02d_", i);
        const std::string base = stem + reports[i].rule;
        write_report_csv(reports[i], (out / (base + ".csv")).string());
        write_report_json(reports[i], (out / (base + ".json")).string());
    }
    std::ofstream os(out / "relative_wealth.csv");
    if (!os) throw RuntimeAbort("cannot write relative_wealth.csv");
    os << "date";
    for (int i = 0; i < R; ++i) os << ",r" << i << '_' << reports[i].rule;
    os << '\n';
    for (std::size_t k = 0; k < data.dates.size(); ++k) {
        os << data.dates[k];
        for (int i = 0; i < R; ++i) os << ',' << fmt(std::log(reports[i].V[k] / reports[i].V_mkt[k]));
        os << '\n';
    }
    return 0;
}

int cmd_verify(const json& cfg, const fs::path& out) {
    check_keys(cfg, {"model", "grid", "n_paths", "seed", "generator", "bound", "regime"}, "verify");
    for (const char* k : {"model", "grid", "generator", "bound"})
        require(cfg.contains(k), std::string("verify: missing '") + k + "'");
    EnsembleConfig ec;
    ec.spec = make_model(cfg["model"]);
    ec.grid = make_grid(cfg["grid"]);
    ec.n_paths = get_int(cfg, "n_paths", 100, "verify");
    ec.seed = get_seed(cfg, "seed", "verify");
    ec.generator = make_generator(cfg["generator"]);
    ec.bound = bound_from_json(cfg["bound"]);
    require(ec.bound.value.has_value(), "verify: bound " + ec.bound.kind + " has no finite horizon");
    ec.floor = floor_function(ec.bound);
    if (cfg.contains("regime")) ec.regime = make_regime(cfg["regime"]);
    EnsembleSummary s = verify_ensemble(ec);

    nlohmann::ordered_json j;
    j["bound"] = to_json(ec.bound);
    j["paths"] = s.paths;
    j["aborted"] = s.aborted;
    j["excluded"] = s.excluded;
    j["qualifying"] = s.qualifying;
    j["qualifying_fraction"] = s.paths ? double(s.qualifying) / s.paths : 0.0;
    j["terminal_pass"] = s.terminal_pass;
    j["terminal_floor_pass"] = s.terminal_floor_pass;
    j["floor_pass_all"] = s.floor_pass_all;
    if (s.qualifying) {
        j["terminal_pass_fraction"] = double(s.terminal_pass) / s.qualifying;
        j["min_terminal_lhs"] = s.min_terminal_lhs;
        j["min_terminal_margin"] = s.min_terminal_margin;
    }
    j["clamp_events"] = s.clamp_events;
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& o : s.outcomes) {
        nlohmann::ordered_json p;
        p["aborted"] = o.aborted;
        p["qualifying"] = o.qualifying;
        if (o.aborted) {
            p["diagnostic"] = o.diagnostic;
        } else if (o.qualifying) {
            p["terminal_lhs"] = o.report.terminal_lhs;
            p["terminal_margin"] = o.report.terminal_margin;
            p["fraction_above"] = o.report.fraction_above;
        }
        per.push_back(p);
    }
    j["per_path"] = per;
    write_json(out / "verify.json", j);
    return s.aborted == s.paths ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spt: stochastic portfolio theory experiments"};
    app.require_subcommand(1);
    std::string config, outdir;
    using Cmd = int (*)(const json&, const fs::path&);
    std::vector<std::pair<CLI::App*, Cmd>> cmds;
    auto add = [&](const char* name, const char* help, Cmd fn) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON config file")->required();
        sub->add_option("--out", outdir, "output directory")->required();
        cmds.emplace_back(sub, fn);
    };
    add("simulate", "simulate market paths", cmd_simulate);
    add("decompose", "master-equation and Pal-Wong decompositions of one path", cmd_decompose);
    add("bounds", "relative-arbitrage horizon bounds", cmd_bounds);
    add("backtest", "backtest portfolio rules on capitalisation data", cmd_backtest);
    add("verify", "pathwise relative-arbitrage checks over an ensemble", cmd_verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        apply_thread_limit_from_env();
        const json cfg = read_config(config);
        const fs::path out = prepare_out(outdir);
        for (auto& [sub, fn] : cmds)
            if (sub->parsed()) return fn(cfg, out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const RuntimeAbort& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
