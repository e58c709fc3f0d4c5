#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "trflab/sequence.hpp"

namespace trflab {

enum class ConditionRole { kStart, kEnd };

/// The clean bounding frame a generation is conditioned on. `per_frame`, when
/// set, carries one condition frame per output frame (used by the
/// interpolated-condition baseline); backends in this library only read the
/// frame-0 entry, the one their data process pins.
struct Condition {
  Frame frame;
  ConditionRole role = ConditionRole::kStart;
  std::optional<std::vector<Frame>> per_frame;

  const Frame& frame_for(std::size_t n) const {
    return per_frame ? (*per_frame)[n] : frame;
  }
};

/// Conditional clean-sequence predictor. Implementations are deterministic
/// and return a sequence of the input's shape.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Sequence predict_x0(const Sequence& x, double sigma, const Condition& cond) const = 0;
};

/// Gaussian data law N(mean, cov) over the stacked frames.
struct GaussianWorldDenoiser {
  std::size_t n_frames = 0;
  std::size_t dim = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// E[x0 | x] = mean + cov (cov + sigma^2 I)^{-1} (x - mean). Exact identity at sigma = 0.
Sequence gp_posterior_x0(const GaussianWorldDenoiser& d, const Sequence& x, double sigma);

/// One mixture component with diagonal covariance diag(var).
struct GmmComponent {
  double weight = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

struct GmmWorldDenoiser {
  std::size_t n_frames = 0;
  std::size_t dim = 0;
  std::vector<GmmComponent> components;

  /// Isotropic components N(mean_k, tau_k^2 I). Weights are normalized here.
  static GmmWorldDenoiser isotropic(std::size_t n_frames, std::size_t dim,
                                    std::vector<double> weights,
                                    std::vector<Eigen::VectorXd> means,
                                    std::vector<double> tau_sq);
};

/// Posterior component probabilities r_k(x) at noise level sigma (log-sum-exp).
std::vector<double> gmm_responsibilities(const GmmWorldDenoiser& d, const Sequence& x,
                                         double sigma);

/// Sum_k r_k(x) m_k(x), with m_k the per-component Gaussian posterior mean.
Sequence gmm_posterior_x0(const GmmWorldDenoiser& d, const Sequence& x, double sigma);

double log_sum_exp(const std::vector<double>& v);

struct EdmCoefficients {
  double c_skip;
  double c_out;
  double c_in;
  double c_noise;
};

EdmCoefficients edm_coefficients(double sigma, double sigma_data);

/// Raw network F(c_in * x, c_noise, cond) before preconditioning.
using RawNetwork =
    std::function<Sequence(const Sequence& scaled_x, double c_noise, const Condition& cond)>;

/// D(x) = c_skip x + c_out F(c_in x, c_noise, cond).
Sequence precondition_apply(const RawNetwork& net, const Sequence& x, double sigma,
                            const Condition& cond, double sigma_data);

Eigen::VectorXd to_vector(const Sequence& x);
Sequence to_sequence(const Eigen::VectorXd& v, std::size_t n_frames, std::size_t dim);

}  // namespace trflab
