#pragma once

#include "spt/common.hpp"
#include "spt/generator.hpp"

#include <vector>

namespace spt {

struct RankMap {
    std::vector<std::vector<int>> perm;  // perm[t][k] = index of the stock ranked k+1 at time t
    std::vector<Vec> ranked;
};

RankMap rank_map(const std::vector<Vec>& weights);

void check_weight_row(const Vec& mu, double tol = 1e-9);

Vec fgp_weights(const Generator& G, const Vec& mu);
Vec rank_fgp_weights(const Generator& G, const Vec& mu);
Vec dwp_weights(const Vec& mu, double p);
Vec ewp_weights(const Vec& mu, double c);
Vec rank_dwp_weights(const Vec& mu, double r, int m, bool top);
Vec q_mirror(const Vec& pi, const Vec& mu, double q);
Vec fk05_mirror_dwp(const Vec& mu, double p);
Vec gamma_shape_weights(const Vec& mu, double k, double theta);

}  // namespace spt
