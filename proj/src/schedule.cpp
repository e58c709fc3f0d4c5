#include "trflab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace trflab {

NoiseSchedule::NoiseSchedule(std::vector<double> sigmas, double sigma_min, double sigma_max,
                             double rho)
    : sigmas_(std::move(sigmas)), sigma_min_(sigma_min), sigma_max_(sigma_max), rho_(rho) {
  if (sigmas_.size() < 2) throw std::invalid_argument("NoiseSchedule: need at least 2 levels");
  if (!(sigmas_.back() > 0.0)) throw std::invalid_argument("NoiseSchedule: sigma_min must be > 0");
  for (std::size_t i = 1; i < sigmas_.size(); ++i) {
    if (!(sigmas_[i] < sigmas_[i - 1])) {
      throw std::invalid_argument("NoiseSchedule: levels must be strictly decreasing (index " +
                                  std::to_string(i) + ")");
    }
  }
}

double NoiseSchedule::level(int t) const {
  const int T = static_cast<int>(sigmas_.size());
  if (t < -1 || t >= T) {
    throw std::out_of_range("NoiseSchedule::level: timestep " + std::to_string(t) +
                            " outside [-1, " + std::to_string(T - 1) + "]");
  }
  if (t == -1) return 0.0;
  return sigmas_[static_cast<std::size_t>(T - 1 - t)];
}

void ChurnParams::validate() const {
  if (!(s_churn >= 0.0)) throw std::invalid_argument("churn: s_churn must be >= 0");
  if (!(s_tmin <= s_tmax)) throw std::invalid_argument("churn: s_tmin must be <= s_tmax");
  if (!(s_noise > 0.0)) throw std::invalid_argument("churn: s_noise must be > 0");
}

NoiseSchedule build_karras(int n_steps, double sigma_min, double sigma_max, double rho) {
  if (n_steps < 2) throw std::invalid_argument("build_karras: need at least 2 steps");
  if (!(sigma_min > 0.0 && sigma_min < sigma_max)) {
    throw std::invalid_argument("build_karras: need 0 < sigma_min < sigma_max");
  }
  if (!(rho > 0.0)) throw std::invalid_argument("build_karras: rho must be > 0");

  const double max_inv_rho = std::pow(sigma_max, 1.0 / rho);
  const double min_inv_rho = std::pow(sigma_min, 1.0 / rho);
  std::vector<double> sigmas(static_cast<std::size_t>(n_steps));
  for (int i = 0; i < n_steps; ++i) {
    const double ramp = static_cast<double>(i) / static_cast<double>(n_steps - 1);
    sigmas[static_cast<std::size_t>(i)] =
        std::pow(max_inv_rho + ramp * (min_inv_rho - max_inv_rho), rho);
  }
  // pin endpoints so they are exact despite pow round-off
  sigmas.front() = sigma_max;
  sigmas.back() = sigma_min;
  return NoiseSchedule(std::move(sigmas), sigma_min, sigma_max, rho);
}

NoiseSchedule build_karras(const ScheduleParams& p) {
  return build_karras(p.steps, p.sigma_min, p.sigma_max, p.rho);
}

double injection_std(const NoiseSchedule& s, int t) {
  const int T = static_cast<int>(s.n_steps());
  if (t < 1 || t > T - 1) {
    throw std::out_of_range("injection_std: timestep " + std::to_string(t) + " outside [1, " +
                            std::to_string(T - 1) + "]");
  }
  return injection_std(s.level(t), s.level(t - 1));
}

double injection_std(double sigma_t, double sigma_prev) {
  return std::sqrt(std::max(0.0, sigma_t * sigma_t - sigma_prev * sigma_prev));
}

double churn_gamma(const ChurnParams& p, double sigma, int n_steps) {
  if (sigma < p.s_tmin || sigma > p.s_tmax || n_steps <= 0) return 0.0;
  return std::min(p.s_churn / n_steps, std::numbers::sqrt2 - 1.0);
}

}  // namespace trflab
