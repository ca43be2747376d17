#include "spt/config.hpp"

namespace spt {

std::vector<std::string> model_types() {
    return {"vsm", "gen_vsm", "hybrid_atlas", "atlas", "fkk", "gbm", "mean_reverting"};
}

namespace {

Vec optional_x0(const json& j, int n, const std::string& where) {
    if (!j.contains("x0")) return Vec();
    Vec x0 = get_vec(j, "x0", where);
    require(x0.size() == n, where + ": x0 must have " + std::to_string(n) + " entries");
    require(all_positive(x0), where + ": x0 must be positive");
    return x0;
}

Vec scalar_or_vec(const json& j, const char* key, int n, double fallback, const std::string& where) {
    if (!j.contains(key)) return Vec::Constant(n, fallback);
    if (j[key].is_number()) return Vec::Constant(n, get_num(j, key, where));
    Vec v = get_vec(j, key, where);
    require(v.size() == n, where + ": '" + key + "' must have " + std::to_string(n) + " entries");
    return v;
}

}  // namespace

ItoMarketSpec make_model(const json& j) {
    require(j.is_object(), "model: expected a JSON object");
    const std::string type = get_str(j, "type", "", "model");
    const std::string where = "model '" + type + "'";
    ItoMarketSpec s;
    if (type == "vsm") {
        check_keys(j, {"type", "n", "alpha", "x0"}, where);
        s = vsm_spec(get_int(j, "n", where), get_num(j, "alpha", 0.0, where));
    } else if (type == "gen_vsm") {
        check_keys(j, {"type", "n", "alpha", "sigma", "beta", "K", "x0"}, where);
        const int n = get_int(j, "n", where);
        require(n >= 2, where + ": n must be >= 2");
        const double K = get_num(j, "K", 1.0, where);
        require(K > 0.0, where + ": K must be positive");
        s = gen_vsm_spec(n, scalar_or_vec(j, "alpha", n, 0.0, where), get_num(j, "sigma", 1.0, where),
                         get_num(j, "beta", 0.5, where), [K](const Vec&) { return K; });
    } else if (type == "hybrid_atlas") {
        check_keys(j, {"type", "gamma", "gammas", "gs", "sigmas", "rho", "x0"}, where);
        Vec gs = get_vec(j, "gs", where);
        const int n = static_cast<int>(gs.size());
        Mat rho = j.contains("rho") ? get_mat(j, "rho", where) : Mat::Zero(n, n);
        s = hybrid_atlas_spec(get_num(j, "gamma", 0.0, where), scalar_or_vec(j, "gammas", n, 0.0, where), gs,
                              get_vec(j, "sigmas", where), rho);
    } else if (type == "atlas") {
        check_keys(j, {"type", "n", "g", "sigmas", "x0"}, where);
        const int n = get_int(j, "n", where);
        require(n >= 1, where + ": n must be >= 1");
        s = atlas_spec(n, get_num(j, "g", where), scalar_or_vec(j, "sigmas", n, 1.0, where));
    } else if (type == "fkk") {
        check_keys(j, {"type", "n", "delta", "sigma", "gs", "M", "x0"}, where);
        const int n = get_int(j, "n", where);
        require(n >= 2, where + ": n must be >= 2");
        Mat sigma = j.contains("sigma") ? get_mat(j, "sigma", where) : Mat(Mat::Identity(n, n));
        s = fkk_diverse_spec(n, get_num(j, "delta", where), sigma, scalar_or_vec(j, "gs", n, 0.0, where),
                             get_num(j, "M", 1.0, where), optional_x0(j, n, where));
        return s;
    } else if (type == "gbm") {
        check_keys(j, {"type", "gamma", "sigma", "x0"}, where);
        s = constant_spec(get_vec(j, "gamma", where), get_mat(j, "sigma", where), "gbm");
    } else if (type == "mean_reverting") {
        check_keys(j, {"type", "n", "kappa", "s", "x0"}, where);
        s = log_mean_reverting_spec(get_int(j, "n", where), get_num(j, "kappa", where), get_num(j, "s", where));
    } else {
        std::string all;
        for (const auto& m : model_types()) all += (all.empty() ? "" : ", ") + m;
        throw ValidationError("model: unknown type '" + type + "' (known: " + all + ")");
    }
    Vec x0 = optional_x0(j, s.n, where);
    if (x0.size()) s.x0 = x0;
    return s;
}

SimGrid make_grid(const json& j) {
    check_keys(j, {"T", "steps", "scheme"}, "grid");
    SimGrid g;
    g.T = get_num(j, "T", "grid");
    g.steps = get_int(j, "steps", "grid");
    g.scheme = parse_scheme(get_str(j, "scheme", "euler-log", "grid"));
    require(g.T > 0.0, "grid: T must be positive");
    require(g.steps >= 1, "grid: steps must be >= 1");
    return g;
}

RegimeParams make_regime(const json& j) {
    check_keys(j, {"diverse_delta", "weak_diverse_delta", "nofail_delta", "fk05_p", "fk05_zeta"}, "regime");
    RegimeParams r;
    if (j.contains("diverse_delta")) r.diverse_delta = get_num(j, "diverse_delta", "regime");
    if (j.contains("weak_diverse_delta")) r.weak_diverse_delta = get_num(j, "weak_diverse_delta", "regime");
    if (j.contains("nofail_delta")) r.nofail_delta = get_num(j, "nofail_delta", "regime");
    if (j.contains("fk05_p")) r.fk05_p = get_num(j, "fk05_p", "regime");
    r.fk05_zeta = get_num(j, "fk05_zeta", 0.0, "regime");
    return r;
}

std::uint64_t get_seed(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return 0;
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
        throw ValidationError(where + ": '" + key + "' must be a nonnegative integer");
    return it->get<std::uint64_t>();
}

}  // namespace spt
