#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trflab/denoiser.hpp"
#include "trflab/rng.hpp"

namespace trflab {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Shape of the denoising MLP: input is [c_in x (N*d), Fourier features of
/// c_noise, condition frame], then SiLU hidden layers, then a linear output of N*d.
struct MlpDescriptor {
  std::uint32_t n_frames = 16;
  std::uint32_t frame_dim = 2;
  std::uint32_t cond_dim = 2;
  std::uint32_t n_fourier = 8;
  double sigma_data = 0.5;
  std::vector<std::uint32_t> hidden = {256, 256};

  std::size_t input_dim() const { return n_frames * frame_dim + n_fourier + cond_dim; }
  std::size_t output_dim() const { return static_cast<std::size_t>(n_frames) * frame_dim; }
  std::size_t n_layers() const { return hidden.size() + 1; }
  /// (rows, cols) of layer l's weight.
  std::pair<std::size_t, std::size_t> weight_shape(std::size_t l) const;
  std::size_t parameter_count() const;

  bool operator==(const MlpDescriptor&) const = default;
};

/// All weights in one flat buffer: per layer a row-major weight block
/// followed by its bias.
class MlpParams {
 public:
  MlpParams() = default;
  explicit MlpParams(MlpDescriptor desc);

  /// Hidden weights ~ N(0, 1/fan_in); output layer and biases zero, so the
  /// untrained denoiser is D(x) = c_skip x.
  static MlpParams random_init(const MlpDescriptor& desc, RngStream& rng);

  const MlpDescriptor& descriptor() const { return desc_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  Eigen::Map<RowMatrix> weight(std::size_t l);
  Eigen::Map<const RowMatrix> weight(std::size_t l) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t l);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const;

  std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }

 private:
  MlpDescriptor desc_;
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;
};

/// sin/cos of c_noise at frequencies 1, 2, 4, ...
Eigen::VectorXd fourier_features(double c_noise, std::size_t n_features);

/// Activations kept for the backward pass. Columns are batch items.
struct MlpTape {
  std::vector<Eigen::MatrixXd> pre;   // pre-activations of hidden layers
  std::vector<Eigen::MatrixXd> post;  // layer inputs: post[0] = X, post[l] = silu(pre[l-1])
};

Eigen::MatrixXd mlp_forward(const MlpParams& p, const Eigen::MatrixXd& inputs, MlpTape* tape);

/// Accumulates parameter gradients into `grads` for the output gradient
/// `d_out` (same layout as the forward output).
void mlp_backward(const MlpParams& p, const MlpTape& tape, const Eigen::MatrixXd& d_out,
                  MlpParams& grads);

/// Network input column for one item.
Eigen::VectorXd mlp_input(const MlpDescriptor& desc, const Sequence& scaled_x, double c_noise,
                          const Frame& cond);

/// EDM-preconditioned MLP as a Denoiser.
class MlpDenoiser final : public Denoiser {
 public:
  explicit MlpDenoiser(MlpParams params);
  Sequence predict_x0(const Sequence& x, double sigma, const Condition& cond) const override;
  const MlpParams& params() const { return params_; }

 private:
  MlpParams params_;
};

}  // namespace trflab
