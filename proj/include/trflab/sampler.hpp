#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "trflab/denoiser.hpp"
#include "trflab/rng.hpp"
#include "trflab/schedule.hpp"
#include "trflab/sequence.hpp"

namespace trflab {

/// One outer step of a sampling run.
struct StepRecord {
  int t = 0;
  double sigma = 0.0;
  double sigma_hat = 0.0;
  double sigma_next = 0.0;
  std::uint64_t latent_hash = 0;
  std::uint64_t denoised_hash = 0;
  /// Fusions performed in this step (TRF only; 0 for single-path samplers).
  int fusions = 0;
  /// Fusion objective of the last fuse, and the norm of the forward/backward
  /// disagreement (TRF only).
  double objective = 0.0;
  double disagreement = 0.0;
  /// Latent after the step.
  Sequence latent;
};

struct StepTrace {
  std::vector<StepRecord> steps;

  int total_fusions() const;
  /// One JSON object per line, without latent snapshots.
  void write_jsonl(std::ostream& out) const;
};

/// 64-bit FNV-1a over the raw bytes of the values.
std::uint64_t fnv1a_hash(const Sequence& x);

/// sigma_hat = sigma (1 + gamma); x_hat = x + sqrt(sigma_hat^2 - sigma^2) s_noise eps.
/// gamma == 0 returns (x, sigma) without drawing.
std::pair<Sequence, double> churn_perturb(const Sequence& x, double sigma, double gamma,
                                          double s_noise, NoiseStreams& noise,
                                          NoisePurpose purpose = NoisePurpose::kChurn);

/// Euler step of the probability-flow ODE from sigma_hat to sigma_next.
Sequence edm_euler_step(const Denoiser& backend, const Sequence& x_hat, double sigma_hat,
                        double sigma_next, const Condition& cond);
/// Same step, also returning the denoiser output it used.
std::pair<Sequence, Sequence> edm_euler_step_with_x0(const Denoiser& backend,
                                                     const Sequence& x_hat, double sigma_hat,
                                                     double sigma_next, const Condition& cond);

struct SampleResult {
  Sequence x;
  StepTrace trace;
};

/// Single conditional path: x_T ~ N(0, sigma_max^2), then churn + Euler for
/// t = T-1 .. 0 down to noise level 0.
SampleResult sample(const Denoiser& backend, const NoiseSchedule& schedule,
                    const Condition& cond, const ChurnParams& churn, std::size_t n_frames,
                    std::size_t dim, NoiseStreams& noise);

}  // namespace trflab
