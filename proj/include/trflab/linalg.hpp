#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace trflab {

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Solves A X = B for symmetric positive-definite A (Cholesky).
/// Throws NotPositiveDefinite when the factorization fails.
Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// True when a Cholesky factorization of `a` succeeds.
bool is_spd(const Eigen::MatrixXd& a);

}  // namespace trflab
