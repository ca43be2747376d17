#include "spt/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spt {

std::vector<int> rank_order(const Vec& x) {
    std::vector<int> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return x[a] > x[b]; });
    return idx;
}

void close_row(Vec& row) {
    if (row.size() == 0) return;
    Eigen::Index k = 0;
    row.cwiseAbs().maxCoeff(&k);
    double rest = 0.0;
    for (Eigen::Index i = 0; i < row.size(); ++i)
        if (i != k) rest += row[i];
    row[k] = 1.0 - rest;
}

bool all_positive(const Vec& x) {
    return (x.array() > 0.0).all();
}

bool all_nonnegative(const Vec& x) {
    return (x.array() >= 0.0).all();
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

}  // namespace spt
