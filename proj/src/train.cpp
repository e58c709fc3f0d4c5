#include "trflab/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace trflab {

double edm_loss_weight(double sigma, double sigma_data) {
  const double s = sigma * sigma_data;
  return (sigma * sigma + sigma_data * sigma_data) / (s * s);
}

std::vector<NoiseDraw> draw_training_noise(std::span<const TrainingExample> batch,
                                           const EdmLossParams& lp, RngStream& rng) {
  std::vector<NoiseDraw> out;
  out.reserve(batch.size());
  for (const auto& item : batch) {
    const double sigma = std::exp(lp.p_mean + lp.p_std * rng.normal());
    out.push_back({sigma, gaussian_noise(item.clean.n_frames(), item.clean.dim(), 1.0, rng)});
  }
  return out;
}

ItemLoss edm_item_loss(const Sequence& raw, const Sequence& x_noisy, const Sequence& x0,
                       double sigma, double sigma_data) {
  require_same_shape(raw, x0, "edm_item_loss");
  require_same_shape(x_noisy, x0, "edm_item_loss");
  const auto c = edm_coefficients(sigma, sigma_data);
  const double lambda = edm_loss_weight(sigma, sigma_data);
  ItemLoss out{0.0, Sequence(x0.n_frames(), x0.dim())};
  auto r = raw.flat();
  auto xn = x_noisy.flat();
  auto x = x0.flat();
  auto g = out.d_raw.flat();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double resid = c.c_skip * xn[i] + c.c_out * r[i] - x[i];
    out.loss += lambda * resid * resid;
    g[i] = 2.0 * lambda * c.c_out * resid;
  }
  return out;
}

LossAndGrad edm_loss(const MlpParams& params, std::span<const TrainingExample> batch,
                     std::span<const NoiseDraw> noise) {
  if (batch.empty() || noise.size() != batch.size()) {
    throw std::invalid_argument("edm_loss: batch and noise must be non-empty and aligned");
  }
  const auto& desc = params.descriptor();
  const double sd = desc.sigma_data;
  const auto b = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(desc.input_dim()), b);
  std::vector<Sequence> noisy;
  noisy.reserve(batch.size());
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& item = batch[static_cast<std::size_t>(j)];
    const auto& nd = noise[static_cast<std::size_t>(j)];
    noisy.push_back(item.clean + nd.sigma * nd.eps);
    const auto c = edm_coefficients(nd.sigma, sd);
    inputs.col(j) = mlp_input(desc, c.c_in * noisy.back(), c.c_noise, item.cond);
  }
  MlpTape tape;
  const Eigen::MatrixXd out = mlp_forward(params, inputs, &tape);
  Eigen::MatrixXd d_out(out.rows(), out.cols());
  LossAndGrad result{0.0, MlpParams(desc)};
  const double inv_b = 1.0 / static_cast<double>(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& item = batch[static_cast<std::size_t>(j)];
    const Sequence raw = to_sequence(out.col(j), desc.n_frames, desc.frame_dim);
    const auto il = edm_item_loss(raw, noisy[static_cast<std::size_t>(j)], item.clean,
                                  noise[static_cast<std::size_t>(j)].sigma, sd);
    result.loss += il.loss * inv_b;
    d_out.col(j) = to_vector(il.d_raw) * inv_b;
  }
  mlp_backward(params, tape, d_out, result.grads);
  return result;
}

double edm_loss_of(const Denoiser& denoiser, std::span<const TrainingExample> batch,
                   std::span<const NoiseDraw> noise, double sigma_data) {
  if (batch.empty() || noise.size() != batch.size()) {
    throw std::invalid_argument("edm_loss_of: batch and noise must be non-empty and aligned");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& item = batch[j];
    const Sequence noisy = item.clean + noise[j].sigma * noise[j].eps;
    const Sequence pred = denoiser.predict_x0(noisy, noise[j].sigma, Condition{item.cond, ConditionRole::kStart, std::nullopt});
    const double lambda = edm_loss_weight(noise[j].sigma, sigma_data);
    total += lambda * squared_norm((pred - item.clean).flat());
  }
  return total / static_cast<double>(batch.size());
}

Adam::Adam(std::size_t n_params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n_params, 0.0), v_(n_params, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: size mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    params[i] -= lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
  }
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be > 0");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("train: lr must be >= 0");
  if (!(loss.p_std >= 0.0)) throw std::invalid_argument("train: p_std must be >= 0");
  if (!(loss.sigma_data > 0.0)) throw std::invalid_argument("train: sigma_data must be > 0");
}

TrainingDiverged::TrainingDiverged(std::size_t s, double loss)
    : std::runtime_error("training diverged at step " + std::to_string(s) + " (loss " +
                         std::to_string(loss) + ")"),
      step(s) {}

MlpDescriptor descriptor_for(const World& world, const TrainConfig& cfg) {
  MlpDescriptor d;
  d.n_frames = static_cast<std::uint32_t>(world_n_frames(world));
  d.frame_dim = static_cast<std::uint32_t>(world_frame_dim(world));
  d.cond_dim = d.frame_dim;
  d.n_fourier = cfg.n_fourier;
  d.sigma_data = cfg.loss.sigma_data;
  d.hidden = cfg.hidden;
  return d;
}

TrainResult train(const World& world, const TrainConfig& cfg, const TrainCallback& cb) {
  RngStream init_rng = RngStream(cfg.seed, 0).substream(101);
  return train(world, cfg, MlpParams::random_init(descriptor_for(world, cfg), init_rng), cb);
}

TrainResult train(const World& world, const TrainConfig& cfg, MlpParams init,
                  const TrainCallback& cb) {
  cfg.validate();
  if (!(init.descriptor() == descriptor_for(world, cfg))) {
    throw std::invalid_argument("train: initial parameters do not match the world");
  }
  RngStream data_rng = RngStream(cfg.seed, 0).substream(102);
  RngStream noise_rng = RngStream(cfg.seed, 0).substream(103);
  TrainResult result{std::move(init), {}};
  result.loss_curve.reserve(cfg.steps);
  Adam adam(result.params.values().size());
  std::vector<TrainingExample> batch(cfg.batch_size);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (auto& item : batch) item = draw_training_example(world, data_rng);
    const auto noise = draw_training_noise(batch, cfg.loss, noise_rng);
    auto lg = edm_loss(result.params, batch, noise);
    if (!std::isfinite(lg.loss)) throw TrainingDiverged(step, lg.loss);
    adam.step(result.params.values(), lg.grads.values(), cfg.lr);
    result.loss_curve.push_back(lg.loss);
    if (cb) cb(step, lg.loss);
  }
  return result;
}

double estimate_sigma_data(const World& world, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("estimate_sigma_data: n must be > 0");
  RngStream rng = RngStream(seed, 0).substream(104);
  double sum = 0.0, sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ex = draw_training_example(world, rng);
    for (double v : ex.clean.flat()) {
      sum += v;
      sum_sq += v * v;
    }
    count += ex.clean.size();
  }
  const double mean = sum / static_cast<double>(count);
  return std::sqrt(std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean));
}

double smoothed_loss(std::span<const double> curve, std::size_t window, bool from_start) {
  if (curve.empty() || window == 0) throw std::invalid_argument("smoothed_loss: empty input");
  const std::size_t w = std::min(window, curve.size());
  auto first = from_start ? curve.begin() : curve.end() - static_cast<std::ptrdiff_t>(w);
  return std::accumulate(first, first + static_cast<std::ptrdiff_t>(w), 0.0) /
         static_cast<double>(w);
}

}  // namespace trflab
