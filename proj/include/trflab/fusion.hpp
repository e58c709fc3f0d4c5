#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "trflab/denoiser.hpp"
#include "trflab/rng.hpp"
#include "trflab/sampler.hpp"
#include "trflab/schedule.hpp"
#include "trflab/sequence.hpp"

namespace trflab {

enum class AlphaKind { kLinear, kExponential, kCustom };

/// Per-frame fusion weights. Frame n of the fused latent takes alpha_n of the
/// forward path and 1 - alpha_n of the time-reversed backward path.
struct AlphaSchedule {
  AlphaKind kind = AlphaKind::kLinear;
  double lambda = 0.0;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  double operator[](std::size_t n) const { return weights[n]; }

  /// Arbitrary weights in [0, 1]; used for degenerate schedules such as all
  /// ones (pure forward) or all zeros (pure backward).
  static AlphaSchedule custom(std::vector<double> weights);
  static AlphaSchedule constant(std::size_t n_frames, double value);
};

/// linear: 1 - n/(N-1). exponential(lambda):
/// (exp(-lambda n/(N-1)) - exp(-lambda)) / (1 - exp(-lambda)). Requires N >= 2.
AlphaSchedule alpha_weights(AlphaKind kind, std::size_t n_frames, double lambda = 3.0);

/// alpha_n x_fwd^n + (1 - alpha_n) x_bwd^{N-1-n}. Weights of exactly 1 or 0
/// copy the selected path without arithmetic.
Sequence fuse(const Sequence& x_fwd, const Sequence& x_bwd, const AlphaSchedule& alpha);

/// Weighted least squares whose exact minimizer is fuse():
/// sum_n alpha_n |x^n - x_fwd^n|^2 + (1 - alpha_n) |x^n - x_bwd^{N-1-n}|^2.
double fusion_objective(const Sequence& x, const Sequence& x_fwd, const Sequence& x_bwd,
                        const AlphaSchedule& alpha);

struct TrfConfig {
  /// Re-injection rounds per step (M).
  int reinjections = 2;
  /// Re-injection runs while t > t0. Unset means ceil(T/2).
  std::optional<int> t0;
  AlphaSchedule alpha;
  /// Both paths start from the same x_T (the backward one reversed).
  bool share_initial_noise = true;
  /// The backward path sees the churned fused latent instead of its own churn draw.
  bool share_churn_noise = true;
  ChurnParams churn;

  int resolve_t0(int n_steps) const;
  void validate(std::size_t n_frames, int n_steps) const;
};

/// x + eps with eps ~ N(0, injection_std(t)^2 I), lifting a latent at level
/// sigma_{t-1} back to sigma_t.
Sequence reinject(const Sequence& x, const NoiseSchedule& schedule, int t, NoiseStreams& noise);

/// Time reversal fusion: per step, churn the fused latent once, run a
/// forward Euler step on it conditioned on c_s and a backward one on its
/// reversal conditioned on c_e, fuse; above t0 re-inject noise and repeat
/// the step-and-fuse M times.
SampleResult trf_sample(const Denoiser& backend, const NoiseSchedule& schedule,
                        const Condition& c_s, const Condition& c_e, const TrfConfig& cfg,
                        std::size_t n_frames, std::size_t dim, NoiseStreams& noise);

}  // namespace trflab
