#pragma once

#include <cmath>
#include <cstdint>

#include "trflab/denoiser.hpp"
#include "trflab/rng.hpp"
#include "trflab/sequence.hpp"

namespace trflab::testing {

inline Sequence random_sequence(std::size_t n, std::size_t d, RngStream& rng, double scale = 1.0) {
  return gaussian_noise(n, d, scale, rng);
}

inline double max_abs_diff(const Sequence& a, const Sequence& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.flat()[i] - b.flat()[i]));
  return m;
}

/// Fixed Gaussian law N(mean, cov) that ignores the condition.
class FixedGaussian final : public Denoiser {
 public:
  explicit FixedGaussian(GaussianWorldDenoiser g) : g_(std::move(g)) {}
  Sequence predict_x0(const Sequence& x, double sigma, const Condition&) const override {
    return gp_posterior_x0(g_, x, sigma);
  }

 private:
  GaussianWorldDenoiser g_;
};

inline Condition start_condition(Frame f) { return {std::move(f), ConditionRole::kStart, std::nullopt}; }
inline Condition end_condition(Frame f) { return {std::move(f), ConditionRole::kEnd, std::nullopt}; }

}  // namespace trflab::testing
