#pragma once

#include <cstddef>
#include <vector>

namespace trflab {

/// Descending noise levels. `sigmas[0]` is sigma_max and `sigmas[T-1]` is
/// sigma_min. Sampling loops index by timestep t in [0, T-1], counting down,
/// where level(t) = sigmas[T-1-t]; level(-1) is the terminal level 0.
class NoiseSchedule {
 public:
  NoiseSchedule(std::vector<double> sigmas, double sigma_min, double sigma_max, double rho);

  std::size_t n_steps() const { return sigmas_.size(); }
  const std::vector<double>& sigmas() const { return sigmas_; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }
  double rho() const { return rho_; }

  /// Noise level at timestep t, t in [-1, T-1]; level(-1) == 0.
  double level(int t) const;

 private:
  std::vector<double> sigmas_;
  double sigma_min_;
  double sigma_max_;
  double rho_;
};

struct ChurnParams {
  double s_churn = 0.5;
  double s_tmin = 0.05;
  double s_tmax = 50.0;
  double s_noise = 1.0;

  void validate() const;
};

struct ScheduleParams {
  int steps = 25;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;
};

NoiseSchedule build_karras(int n_steps, double sigma_min, double sigma_max, double rho);
NoiseSchedule build_karras(const ScheduleParams& p);

/// Std of the re-injection draw at timestep t: sqrt(level(t)^2 - level(t-1)^2),
/// 1 <= t <= T-1.
double injection_std(const NoiseSchedule& s, int t);
/// sqrt(sigma_t^2 - sigma_prev^2), clamped at 0 for equal levels.
double injection_std(double sigma_t, double sigma_prev);

/// EDM churn factor gamma for a step at noise level `sigma` in a T-step run.
double churn_gamma(const ChurnParams& p, double sigma, int n_steps);

}  // namespace trflab
