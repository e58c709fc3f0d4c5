#include "trflab/sampler.hpp"

#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace trflab {

int StepTrace::total_fusions() const {
  int total = 0;
  for (const auto& s : steps) total += s.fusions;
  return total;
}

void StepTrace::write_jsonl(std::ostream& out) const {
  for (const auto& s : steps) {
    nlohmann::json j = {{"t", s.t},
                        {"sigma", s.sigma},
                        {"sigma_hat", s.sigma_hat},
                        {"sigma_next", s.sigma_next},
                        {"latent_hash", s.latent_hash},
                        {"denoised_hash", s.denoised_hash},
                        {"fusions", s.fusions},
                        {"objective", s.objective},
                        {"disagreement", s.disagreement}};
    out << j.dump() << '\n';
  }
}

std::uint64_t fnv1a_hash(const Sequence& x) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double v : x.flat()) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

std::pair<Sequence, double> churn_perturb(const Sequence& x, double sigma, double gamma,
                                          double s_noise, NoiseStreams& noise,
                                          NoisePurpose purpose) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("churn_perturb: gamma must be >= 0");
  if (gamma == 0.0) return {x, sigma};
  const double sigma_hat = sigma * (1.0 + gamma);
  const double extra = std::sqrt(sigma_hat * sigma_hat - sigma * sigma) * s_noise;
  Sequence x_hat = x;
  x_hat += noise.draw(purpose, x.n_frames(), x.dim(), extra);
  return {std::move(x_hat), sigma_hat};
}

std::pair<Sequence, Sequence> edm_euler_step_with_x0(const Denoiser& backend,
                                                     const Sequence& x_hat, double sigma_hat,
                                                     double sigma_next, const Condition& cond) {
  if (!(sigma_hat > 0.0)) throw std::invalid_argument("edm_euler_step: sigma_hat must be > 0");
  Sequence x0 = backend.predict_x0(x_hat, sigma_hat, cond);
  require_same_shape(x0, x_hat, "edm_euler_step");
  const double h = sigma_next - sigma_hat;
  Sequence out = x_hat;
  auto o = out.flat();
  const auto xs = x_hat.flat();
  const auto d0 = x0.flat();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double slope = (xs[i] - d0[i]) / sigma_hat;
    o[i] = xs[i] + h * slope;
  }
  return {std::move(out), std::move(x0)};
}

Sequence edm_euler_step(const Denoiser& backend, const Sequence& x_hat, double sigma_hat,
                        double sigma_next, const Condition& cond) {
  return edm_euler_step_with_x0(backend, x_hat, sigma_hat, sigma_next, cond).first;
}

SampleResult sample(const Denoiser& backend, const NoiseSchedule& schedule,
                    const Condition& cond, const ChurnParams& churn, std::size_t n_frames,
                    std::size_t dim, NoiseStreams& noise) {
  churn.validate();
  const int T = static_cast<int>(schedule.n_steps());
  SampleResult result;
  result.x = noise.draw(NoisePurpose::kInitial, n_frames, dim, schedule.sigma_max());
  for (int t = T - 1; t >= 0; --t) {
    const double sigma = schedule.level(t);
    const double sigma_next = schedule.level(t - 1);
    const double gamma = churn_gamma(churn, sigma, T);
    auto [x_hat, sigma_hat] = churn_perturb(result.x, sigma, gamma, churn.s_noise, noise);
    auto [x_next, x0] = edm_euler_step_with_x0(backend, x_hat, sigma_hat, sigma_next, cond);
    result.x = std::move(x_next);
    result.trace.steps.push_back({t, sigma, sigma_hat, sigma_next, fnv1a_hash(result.x),
                                  fnv1a_hash(x0), 0, 0.0, 0.0, result.x});
  }
  return result;
}

}  // namespace trflab
