#include "trflab/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trflab {

std::pair<std::size_t, std::size_t> MlpDescriptor::weight_shape(std::size_t l) const {
  const std::size_t in = l == 0 ? input_dim() : hidden[l - 1];
  const std::size_t out = l == hidden.size() ? output_dim() : hidden[l];
  return {out, in};
}

std::size_t MlpDescriptor::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < n_layers(); ++l) {
    const auto [rows, cols] = weight_shape(l);
    total += rows * cols + rows;
  }
  return total;
}

MlpParams::MlpParams(MlpDescriptor desc) : desc_(std::move(desc)) {
  if (desc_.n_frames == 0 || desc_.frame_dim == 0) throw std::invalid_argument("mlp: empty output");
  if (desc_.n_fourier % 2 != 0) throw std::invalid_argument("mlp: n_fourier must be even");
  if (!(desc_.sigma_data > 0.0)) throw std::invalid_argument("mlp: sigma_data must be > 0");
  for (auto w : desc_.hidden) {
    if (w == 0) throw std::invalid_argument("mlp: hidden width must be > 0");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l < desc_.n_layers(); ++l) {
    offsets_.push_back(offset);
    const auto [rows, cols] = desc_.weight_shape(l);
    offset += rows * cols + rows;
  }
  values_.assign(offset, 0.0);
}

MlpParams MlpParams::random_init(const MlpDescriptor& desc, RngStream& rng) {
  MlpParams p(desc);
  for (std::size_t l = 0; l + 1 < desc.n_layers(); ++l) {
    auto w = p.weight(l);
    const double scale = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
  }
  return p;
}

Eigen::Map<RowMatrix> MlpParams::weight(std::size_t l) {
  const auto [rows, cols] = desc_.weight_shape(l);
  return {values_.data() + offsets_[l], static_cast<Eigen::Index>(rows),
          static_cast<Eigen::Index>(cols)};
}

Eigen::Map<const RowMatrix> MlpParams::weight(std::size_t l) const {
  const auto [rows, cols] = desc_.weight_shape(l);
  return {values_.data() + offsets_[l], static_cast<Eigen::Index>(rows),
          static_cast<Eigen::Index>(cols)};
}

Eigen::Map<Eigen::VectorXd> MlpParams::bias(std::size_t l) {
  const auto [rows, cols] = desc_.weight_shape(l);
  return {values_.data() + offsets_[l] + rows * cols, static_cast<Eigen::Index>(rows)};
}

Eigen::Map<const Eigen::VectorXd> MlpParams::bias(std::size_t l) const {
  const auto [rows, cols] = desc_.weight_shape(l);
  return {values_.data() + offsets_[l] + rows * cols, static_cast<Eigen::Index>(rows)};
}

Eigen::VectorXd fourier_features(double c_noise, std::size_t n_features) {
  Eigen::VectorXd f(static_cast<Eigen::Index>(n_features));
  for (std::size_t k = 0; k < n_features / 2; ++k) {
    const double freq = std::ldexp(1.0, static_cast<int>(k));
    f(static_cast<Eigen::Index>(2 * k)) = std::sin(freq * c_noise);
    f(static_cast<Eigen::Index>(2 * k + 1)) = std::cos(freq * c_noise);
  }
  return f;
}

namespace {

Eigen::MatrixXd silu(const Eigen::MatrixXd& z) {
  return z.array() / (1.0 + (-z.array()).exp());
}

Eigen::MatrixXd silu_grad(const Eigen::MatrixXd& z) {
  const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-z.array()).exp());
  return (sig * (1.0 + z.array() * (1.0 - sig))).matrix();
}

}  // namespace

Eigen::MatrixXd mlp_forward(const MlpParams& p, const Eigen::MatrixXd& inputs, MlpTape* tape) {
  const auto& desc = p.descriptor();
  if (inputs.rows() != static_cast<Eigen::Index>(desc.input_dim())) {
    throw std::invalid_argument("mlp_forward: input has " + std::to_string(inputs.rows()) +
                                " rows, expected " + std::to_string(desc.input_dim()));
  }
  if (tape) {
    tape->pre.clear();
    tape->post.clear();
    tape->post.push_back(inputs);
  }
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l < desc.n_layers(); ++l) {
    Eigen::MatrixXd z = p.weight(l) * h;
    z.colwise() += p.bias(l);
    if (l + 1 == desc.n_layers()) return z;
    h = silu(z);
    if (tape) {
      tape->pre.push_back(std::move(z));
      tape->post.push_back(h);
    }
  }
  return h;
}

void mlp_backward(const MlpParams& p, const MlpTape& tape, const Eigen::MatrixXd& d_out,
                  MlpParams& grads) {
  const auto& desc = p.descriptor();
  Eigen::MatrixXd delta = d_out;
  for (std::size_t l = desc.n_layers(); l-- > 0;) {
    grads.weight(l).noalias() += delta * tape.post[l].transpose();
    grads.bias(l) += delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = p.weight(l).transpose() * delta;
    delta = back.cwiseProduct(silu_grad(tape.pre[l - 1]));
  }
}

Eigen::VectorXd mlp_input(const MlpDescriptor& desc, const Sequence& scaled_x, double c_noise,
                          const Frame& cond) {
  if (scaled_x.size() != desc.output_dim()) throw std::invalid_argument("mlp_input: sequence size");
  if (cond.dim() != desc.cond_dim) throw std::invalid_argument("mlp_input: condition size");
  Eigen::VectorXd in(static_cast<Eigen::Index>(desc.input_dim()));
  const auto nx = static_cast<Eigen::Index>(desc.output_dim());
  in.head(nx) = to_vector(scaled_x);
  in.segment(nx, desc.n_fourier) = fourier_features(c_noise, desc.n_fourier);
  for (std::size_t k = 0; k < cond.dim(); ++k) in(nx + desc.n_fourier + static_cast<Eigen::Index>(k)) = cond[k];
  return in;
}

MlpDenoiser::MlpDenoiser(MlpParams params) : params_(std::move(params)) {}

Sequence MlpDenoiser::predict_x0(const Sequence& x, double sigma, const Condition& cond) const {
  const auto& desc = params_.descriptor();
  if (x.n_frames() != desc.n_frames || x.dim() != desc.frame_dim) {
    throw std::invalid_argument("MlpDenoiser: input shape does not match the network");
  }
  const RawNetwork net = [this, &desc](const Sequence& scaled, double c_noise, const Condition& c) {
    const Eigen::MatrixXd out = mlp_forward(params_, mlp_input(desc, scaled, c_noise, c.frame_for(0)), nullptr);
    return to_sequence(out.col(0), desc.n_frames, desc.frame_dim);
  };
  return precondition_apply(net, x, sigma, cond, desc.sigma_data);
}

}  // namespace trflab
