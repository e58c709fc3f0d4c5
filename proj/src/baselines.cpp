#include "trflab/baselines.hpp"

#include <stdexcept>

namespace trflab {

std::vector<Frame> interpolated_conditions(const Frame& c_s, const Frame& c_e,
                                           std::size_t n_frames) {
  if (c_s.dim() != c_e.dim()) throw std::invalid_argument("interpolated_conditions: dims differ");
  if (n_frames < 2) throw std::invalid_argument("interpolated_conditions: need N >= 2");
  std::vector<Frame> out;
  out.reserve(n_frames);
  const double last = static_cast<double>(n_frames - 1);
  for (std::size_t n = 0; n < n_frames; ++n) {
    const double s = static_cast<double>(n) / last;
    Frame f(c_s.dim());
    for (std::size_t k = 0; k < f.dim(); ++k) f[k] = (1.0 - s) * c_s[k] + s * c_e[k];
    out.push_back(std::move(f));
  }
  return out;
}

SampleResult baseline_condition_interp(const Denoiser& backend, const NoiseSchedule& schedule,
                                       const Condition& c_s, const Condition& c_e,
                                       const ChurnParams& churn, std::size_t n_frames,
                                       std::size_t dim, NoiseStreams& noise,
                                       bool swap_end_with_noise) {
  Frame end = c_e.frame;
  if (swap_end_with_noise) {
    const Sequence swap = gaussian_noise(1, end.dim(), 1.0, noise.stream(NoisePurpose::kConditionSwap));
    end = swap.frame_copy(0);
  }
  Condition cond{c_s.frame, ConditionRole::kStart,
                 interpolated_conditions(c_s.frame, end, n_frames)};
  return sample(backend, schedule, cond, churn, n_frames, dim, noise);
}

SampleResult baseline_inpaint(const Denoiser& backend, const NoiseSchedule& schedule,
                              const Condition& c_s, const Frame& end_frame,
                              const ChurnParams& churn, std::size_t n_frames, std::size_t dim,
                              NoiseStreams& noise) {
  if (end_frame.dim() != dim) throw std::invalid_argument("baseline_inpaint: end frame dim");
  churn.validate();
  const int T = static_cast<int>(schedule.n_steps());
  SampleResult result;
  result.x = noise.draw(NoisePurpose::kInitial, n_frames, dim, schedule.sigma_max());
  for (int t = T - 1; t >= 0; --t) {
    const double sigma = schedule.level(t);
    const double sigma_next = schedule.level(t - 1);
    const double gamma = churn_gamma(churn, sigma, T);
    auto [x_hat, sigma_hat] = churn_perturb(result.x, sigma, gamma, churn.s_noise, noise);
    auto [x_next, x0] = edm_euler_step_with_x0(backend, x_hat, sigma_hat, sigma_next, c_s);
    const Sequence eps = gaussian_noise(1, dim, sigma_next, noise.stream(NoisePurpose::kInpaint));
    auto last = x_next.frame(n_frames - 1);
    for (std::size_t k = 0; k < dim; ++k) last[k] = end_frame[k] + eps(0, k);
    result.x = std::move(x_next);
    result.trace.steps.push_back({t, sigma, sigma_hat, sigma_next, fnv1a_hash(result.x),
                                  fnv1a_hash(x0), 0, 0.0, 0.0, result.x});
  }
  return result;
}

}  // namespace trflab
