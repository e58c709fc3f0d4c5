#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "trflab/mlp.hpp"
#include "trflab/worlds.hpp"

namespace trflab {

struct EdmLossParams {
  double p_mean = -1.2;
  double p_std = 1.2;
  double sigma_data = 0.5;
};

/// lambda(sigma) = (sigma^2 + sigma_data^2) / (sigma * sigma_data)^2.
double edm_loss_weight(double sigma, double sigma_data);

/// Noise level and perturbation drawn for one training item.
struct NoiseDraw {
  double sigma;
  Sequence eps;
};

/// Per item: sigma = exp(p_mean + p_std z), then eps ~ N(0, I) of the item's shape.
std::vector<NoiseDraw> draw_training_noise(std::span<const TrainingExample> batch,
                                           const EdmLossParams& lp, RngStream& rng);

struct ItemLoss {
  double loss;
  Sequence d_raw;  // d loss / d F, where D = c_skip x + c_out F
};

/// Weighted loss lambda ||c_skip x_noisy + c_out F - x0||^2 for one raw output F.
ItemLoss edm_item_loss(const Sequence& raw, const Sequence& x_noisy, const Sequence& x0,
                       double sigma, double sigma_data);

struct LossAndGrad {
  double loss = 0.0;  // batch mean
  MlpParams grads;
};

LossAndGrad edm_loss(const MlpParams& params, std::span<const TrainingExample> batch,
                     std::span<const NoiseDraw> noise);

/// Same objective for an arbitrary denoiser (no gradients).
double edm_loss_of(const Denoiser& denoiser, std::span<const TrainingExample> batch,
                   std::span<const NoiseDraw> noise, double sigma_data);

class Adam {
 public:
  Adam(std::size_t n_params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::vector<double>& params, const std::vector<double>& grads, double lr);
  std::uint64_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

struct TrainConfig {
  std::size_t steps = 5000;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> hidden = {256, 256};
  std::uint32_t n_fourier = 8;
  EdmLossParams loss;

  void validate() const;
};

struct TrainingDiverged : std::runtime_error {
  std::size_t step;
  TrainingDiverged(std::size_t step, double loss);
};

struct TrainResult {
  MlpParams params;
  std::vector<double> loss_curve;
};

MlpDescriptor descriptor_for(const World& world, const TrainConfig& cfg);

/// Called after every step with (step, loss).
using TrainCallback = std::function<void(std::size_t, double)>;

/// Adam on the EDM loss with batches drawn from the world. Throws
/// TrainingDiverged on a non-finite loss.
TrainResult train(const World& world, const TrainConfig& cfg, const TrainCallback& cb = {});

/// Continues from given parameters.
TrainResult train(const World& world, const TrainConfig& cfg, MlpParams init,
                  const TrainCallback& cb = {});

/// Standard deviation of all values of `n` fresh clean sequences.
double estimate_sigma_data(const World& world, std::size_t n, std::uint64_t seed);

/// Mean of the first (from_start) or last `window` losses.
double smoothed_loss(std::span<const double> curve, std::size_t window, bool from_start);

}  // namespace trflab
