#include "trflab/linalg.hpp"

#include <string>

namespace trflab {

Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw std::invalid_argument("spd_solve: incompatible shapes " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " and " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("spd_solve: matrix is not positive definite");
  }
  return llt.solve(b);
}

bool is_spd(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  return llt.info() == Eigen::Success;
}

}  // namespace trflab
