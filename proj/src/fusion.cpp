#include "trflab/fusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trflab {

AlphaSchedule AlphaSchedule::custom(std::vector<double> weights) {
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("alpha weights must lie in [0, 1]");
  }
  return {AlphaKind::kCustom, 0.0, std::move(weights)};
}

AlphaSchedule AlphaSchedule::constant(std::size_t n_frames, double value) {
  return custom(std::vector<double>(n_frames, value));
}

AlphaSchedule alpha_weights(AlphaKind kind, std::size_t n_frames, double lambda) {
  if (n_frames < 2) throw std::invalid_argument("alpha_weights: need N >= 2");
  AlphaSchedule out{kind, kind == AlphaKind::kExponential ? lambda : 0.0,
                    std::vector<double>(n_frames)};
  const double last = static_cast<double>(n_frames - 1);
  switch (kind) {
    case AlphaKind::kLinear:
      for (std::size_t n = 0; n < n_frames; ++n) out.weights[n] = 1.0 - static_cast<double>(n) / last;
      break;
    case AlphaKind::kExponential: {
      if (!(lambda > 0.0)) throw std::invalid_argument("alpha_weights: lambda must be > 0");
      // (e^{-l s} - e^{-l}) / (1 - e^{-l}) written with expm1 to stay accurate as l -> 0
      const double denom = -std::expm1(-lambda);
      for (std::size_t n = 0; n < n_frames; ++n) {
        const double s = static_cast<double>(n) / last;
        out.weights[n] = std::exp(-lambda) * std::expm1(lambda * (1.0 - s)) / denom;
      }
      break;
    }
    case AlphaKind::kCustom:
      throw std::invalid_argument("alpha_weights: use AlphaSchedule::custom for explicit weights");
  }
  out.weights.front() = 1.0;
  out.weights.back() = 0.0;
  return out;
}

Sequence fuse(const Sequence& x_fwd, const Sequence& x_bwd, const AlphaSchedule& alpha) {
  require_same_shape(x_fwd, x_bwd, "fuse");
  const std::size_t n_frames = x_fwd.n_frames();
  if (alpha.size() != n_frames) {
    throw std::invalid_argument("fuse: alpha has " + std::to_string(alpha.size()) +
                                " weights for " + std::to_string(n_frames) + " frames");
  }
  Sequence out(n_frames, x_fwd.dim());
  for (std::size_t n = 0; n < n_frames; ++n) {
    const double w = alpha[n];
    const auto f = x_fwd.frame(n);
    const auto b = x_bwd.frame(n_frames - 1 - n);
    if (w == 1.0) {
      out.set_frame(n, f);
    } else if (w == 0.0) {
      out.set_frame(n, b);
    } else {
      auto o = out.frame(n);
      for (std::size_t k = 0; k < o.size(); ++k) o[k] = w * f[k] + (1.0 - w) * b[k];
    }
  }
  return out;
}

double fusion_objective(const Sequence& x, const Sequence& x_fwd, const Sequence& x_bwd,
                        const AlphaSchedule& alpha) {
  require_same_shape(x, x_fwd, "fusion_objective");
  require_same_shape(x, x_bwd, "fusion_objective");
  const std::size_t n_frames = x.n_frames();
  if (alpha.size() != n_frames) throw std::invalid_argument("fusion_objective: alpha length");
  double total = 0.0;
  for (std::size_t n = 0; n < n_frames; ++n) {
    const double df = distance(x.frame(n), x_fwd.frame(n));
    const double db = distance(x.frame(n), x_bwd.frame(n_frames - 1 - n));
    total += alpha[n] * df * df + (1.0 - alpha[n]) * db * db;
  }
  return total;
}

int TrfConfig::resolve_t0(int n_steps) const { return t0 ? *t0 : (n_steps + 1) / 2; }

void TrfConfig::validate(std::size_t n_frames, int n_steps) const {
  if (reinjections < 0) throw std::invalid_argument("trf: M must be >= 0");
  const int t0v = resolve_t0(n_steps);
  if (t0v < 0 || t0v > n_steps) {
    throw std::invalid_argument("trf: t0 = " + std::to_string(t0v) + " outside [0, " +
                                std::to_string(n_steps) + "]");
  }
  if (alpha.size() != n_frames) {
    throw std::invalid_argument("trf: alpha has " + std::to_string(alpha.size()) +
                                " weights for " + std::to_string(n_frames) + " frames");
  }
  churn.validate();
}

Sequence reinject(const Sequence& x, const NoiseSchedule& schedule, int t, NoiseStreams& noise) {
  const double std = injection_std(schedule, t);
  return x + noise.draw(NoisePurpose::kReinjection, x.n_frames(), x.dim(), std);
}

namespace {

struct FusedStep {
  Sequence fused;
  Sequence denoised_fwd;
  double objective;
  double disagreement;
};

FusedStep step_and_fuse(const Denoiser& backend, const Sequence& fwd_in, const Sequence& bwd_in,
                        double sigma_from, double sigma_to, const Condition& c_s,
                        const Condition& c_e, const AlphaSchedule& alpha) {
  auto [x_fwd, x0_fwd] = edm_euler_step_with_x0(backend, fwd_in, sigma_from, sigma_to, c_s);
  Sequence x_bwd = edm_euler_step(backend, bwd_in, sigma_from, sigma_to, c_e);
  Sequence fused = fuse(x_fwd, x_bwd, alpha);
  const double objective = fusion_objective(fused, x_fwd, x_bwd, alpha);
  const Sequence gap = x_fwd - reverse(x_bwd);
  return {std::move(fused), std::move(x0_fwd), objective, std::sqrt(squared_norm(gap.flat()))};
}

}  // namespace

SampleResult trf_sample(const Denoiser& backend, const NoiseSchedule& schedule,
                        const Condition& c_s, const Condition& c_e, const TrfConfig& cfg,
                        std::size_t n_frames, std::size_t dim, NoiseStreams& noise) {
  if (n_frames < 2) throw std::invalid_argument("trf_sample: need at least 2 frames");
  if (c_s.frame.dim() != c_e.frame.dim()) {
    throw std::invalid_argument("trf_sample: start and end conditions differ in dimension");
  }
  const int T = static_cast<int>(schedule.n_steps());
  cfg.validate(n_frames, T);
  const int t0 = cfg.resolve_t0(T);

  SampleResult result;
  result.x = noise.draw(NoisePurpose::kInitial, n_frames, dim, schedule.sigma_max());
  for (int t = T - 1; t >= 0; --t) {
    const double sigma = schedule.level(t);
    const double sigma_next = schedule.level(t - 1);
    const double gamma = churn_gamma(cfg.churn, sigma, T);
    const bool first = t == T - 1;

    auto [x_hat, sigma_hat] = churn_perturb(result.x, sigma, gamma, cfg.churn.s_noise, noise);
    Sequence bwd_in;
    if (first && !cfg.share_initial_noise) {
      Sequence own = noise.draw(NoisePurpose::kBackwardInitial, n_frames, dim, sigma);
      bwd_in = churn_perturb(own, sigma, gamma, cfg.churn.s_noise, noise,
                             NoisePurpose::kBackwardChurn)
                   .first;
    } else if (!cfg.share_churn_noise) {
      bwd_in = churn_perturb(reverse(result.x), sigma, gamma, cfg.churn.s_noise, noise,
                             NoisePurpose::kBackwardChurn)
                   .first;
    } else {
      bwd_in = reverse(x_hat);
    }

    FusedStep step = step_and_fuse(backend, x_hat, bwd_in, sigma_hat, sigma_next, c_s, c_e, cfg.alpha);
    int fusions = 1;
    if (t > t0) {
      for (int m = 0; m < cfg.reinjections; ++m) {
        Sequence x_t = reinject(step.fused, schedule, t, noise);
        step = step_and_fuse(backend, x_t, reverse(x_t), sigma, sigma_next, c_s, c_e, cfg.alpha);
        ++fusions;
      }
    }
    result.x = std::move(step.fused);
    result.trace.steps.push_back({t, sigma, sigma_hat, sigma_next, fnv1a_hash(result.x),
                                  fnv1a_hash(step.denoised_fwd), fusions, step.objective,
                                  step.disagreement, result.x});
  }
  return result;
}

}  // namespace trflab
