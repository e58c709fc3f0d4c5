#include "trflab/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "trflab/linalg.hpp"

namespace trflab {

Eigen::VectorXd to_vector(const Sequence& x) {
  const auto flat = x.flat();
  return Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

Sequence to_sequence(const Eigen::VectorXd& v, std::size_t n_frames, std::size_t dim) {
  return Sequence(n_frames, dim, std::vector<double>(v.data(), v.data() + v.size()));
}

namespace {

void check_shape(std::size_t n_frames, std::size_t dim, const Sequence& x, const char* what) {
  if (x.n_frames() != n_frames || x.dim() != dim) {
    throw std::invalid_argument(std::string(what) + ": input shape does not match the world");
  }
}

}  // namespace

Sequence gp_posterior_x0(const GaussianWorldDenoiser& d, const Sequence& x, double sigma) {
  check_shape(d.n_frames, d.dim, x, "gp_posterior_x0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("gp_posterior_x0: sigma must be >= 0");
  if (sigma == 0.0) return x;
  Eigen::MatrixXd noisy_cov = d.cov;
  noisy_cov.diagonal().array() += sigma * sigma;
  const Eigen::VectorXd centered = to_vector(x) - d.mean;
  const Eigen::VectorXd out = d.mean + d.cov * spd_solve(noisy_cov, centered);
  return to_sequence(out, d.n_frames, d.dim);
}

GmmWorldDenoiser GmmWorldDenoiser::isotropic(std::size_t n_frames, std::size_t dim,
                                             std::vector<double> weights,
                                             std::vector<Eigen::VectorXd> means,
                                             std::vector<double> tau_sq) {
  if (weights.size() != means.size() || weights.size() != tau_sq.size() || weights.empty()) {
    throw std::invalid_argument("GmmWorldDenoiser: component arrays disagree");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("GmmWorldDenoiser: weights must be > 0");
    total += w;
  }
  GmmWorldDenoiser out{n_frames, dim, {}};
  const auto size = static_cast<Eigen::Index>(n_frames * dim);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (means[k].size() != size) throw std::invalid_argument("GmmWorldDenoiser: mean size");
    if (!(tau_sq[k] > 0.0)) throw std::invalid_argument("GmmWorldDenoiser: tau^2 must be > 0");
    out.components.push_back(
        {weights[k] / total, std::move(means[k]), Eigen::VectorXd::Constant(size, tau_sq[k])});
  }
  return out;
}

double log_sum_exp(const std::vector<double>& v) {
  const double hi = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

std::vector<double> gmm_responsibilities(const GmmWorldDenoiser& d, const Sequence& x,
                                         double sigma) {
  check_shape(d.n_frames, d.dim, x, "gmm_responsibilities");
  const Eigen::VectorXd xv = to_vector(x);
  const double s2 = sigma * sigma;
  std::vector<double> logp(d.components.size());
  for (std::size_t k = 0; k < d.components.size(); ++k) {
    const auto& c = d.components[k];
    const Eigen::ArrayXd var = c.var.array() + s2;
    const Eigen::ArrayXd diff = xv.array() - c.mean.array();
    logp[k] = std::log(c.weight) -
              0.5 * ((diff * diff / var).sum() + (2.0 * std::numbers::pi * var).log().sum());
  }
  const double norm = log_sum_exp(logp);
  for (double& lp : logp) lp = std::exp(lp - norm);
  return logp;
}

Sequence gmm_posterior_x0(const GmmWorldDenoiser& d, const Sequence& x, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gmm_posterior_x0: sigma must be > 0");
  const auto resp = gmm_responsibilities(d, x, sigma);
  const Eigen::VectorXd xv = to_vector(x);
  const double s2 = sigma * sigma;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(xv.size());
  for (std::size_t k = 0; k < d.components.size(); ++k) {
    if (resp[k] == 0.0) continue;
    const auto& c = d.components[k];
    const Eigen::ArrayXd shrink = c.var.array() / (c.var.array() + s2);
    out.array() += resp[k] * (c.mean.array() + shrink * (xv.array() - c.mean.array()));
  }
  return to_sequence(out, d.n_frames, d.dim);
}

EdmCoefficients edm_coefficients(double sigma, double sigma_data) {
  const double s2 = sigma * sigma;
  const double d2 = sigma_data * sigma_data;
  const double root = std::sqrt(s2 + d2);
  return {d2 / (s2 + d2), sigma * sigma_data / root, 1.0 / root, std::log(sigma) / 4.0};
}

Sequence precondition_apply(const RawNetwork& net, const Sequence& x, double sigma,
                            const Condition& cond, double sigma_data) {
  if (!(sigma > 0.0)) throw std::invalid_argument("precondition_apply: sigma must be > 0");
  const auto c = edm_coefficients(sigma, sigma_data);
  Sequence raw = net(c.c_in * x, c.c_noise, cond);
  require_same_shape(raw, x, "precondition_apply");
  Sequence out = c.c_skip * x;
  for (std::size_t i = 0; i < out.size(); ++i) out.flat()[i] += c.c_out * raw.flat()[i];
  return out;
}

}  // namespace trflab
