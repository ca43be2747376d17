#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace spt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Bad input or configuration. The CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A computation that started fine but could not continue. Exit code 1.
class RuntimeAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Indices sorted by decreasing value; ties go to the lower index first.
std::vector<int> rank_order(const Vec& x);

// Subtracts the row-sum residue from the largest-magnitude entry.
void close_row(Vec& row);

bool all_positive(const Vec& x);
bool all_nonnegative(const Vec& x);

void require(bool cond, const std::string& msg);

}  // namespace spt
