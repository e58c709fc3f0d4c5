#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "trflab/denoiser.hpp"
#include "trflab/rng.hpp"
#include "trflab/sequence.hpp"

namespace trflab {

/// Per-coordinate AR(1) process pinned at frame 0:
///   x_0 = c + sqrt(eps_pin) z,  x_n = a x_{n-1} + q z.
struct PinnedGpWorld {
  double a = 0.9;
  double q = 0.1;
  std::size_t dim = 2;
  std::size_t n_frames = 16;
  double eps_pin = 1e-6;
  /// Std of the start frame when the world generates its own conditions.
  double start_std = 1.0;

  void validate() const;
};

/// Mixture of K template trajectories with isotropic per-component std tau.
/// With `bidirectional` set the law also contains K routes run backwards in
/// time (same weights), so a generation conditioned on either endpoint has
/// somewhere plausible to go. The backward components reverse
/// `return_routes` when given, otherwise the templates themselves; distinct
/// return routes make the world's dynamics differ between the two
/// directions.
struct TrajectoryGmmWorld {
  std::vector<Sequence> templates;
  std::vector<double> weights;
  double tau = 0.05;
  bool bidirectional = true;
  double eps_pin = 1e-6;
  std::vector<Sequence> return_routes;

  std::size_t n_modes() const { return templates.size(); }
  std::size_t n_frames() const { return templates.front().n_frames(); }
  std::size_t dim() const { return templates.front().dim(); }

  /// Mixture components as (weight, mean). The first K are the templates;
  /// when bidirectional the next K are their reversals.
  std::vector<std::pair<double, Sequence>> components() const;

  /// min over template pairs of the max per-frame distance.
  double min_template_separation() const;

  /// Throws unless weights are normalized, shapes agree and templates are
  /// separated by more than 6 tau.
  void validate() const;

  /// K arcs from `start` to `end`, lateral offsets evenly spaced in
  /// [-bulge, bulge] along the direction perpendicular to end - start.
  /// A `return_bulge` builds the return routes the same way.
  static TrajectoryGmmWorld arcs(const Frame& start, const Frame& end, std::size_t k_modes,
                                 double bulge, std::size_t n_frames, double tau,
                                 bool bidirectional = true,
                                 std::optional<double> return_bulge = std::nullopt);
};

/// Gaussian bumps on a G x G grid moving along positions from a 2-D
/// trajectory world. Positions are (row, col) in pixel units.
struct MovingBlobWorld {
  std::size_t grid = 16;
  double bump_std = 1.5;
  std::variant<PinnedGpWorld, TrajectoryGmmWorld> positions;
  /// Start positions for self-generated conditions are drawn uniformly
  /// from [margin, grid-1-margin]^2 (GP position worlds only).
  double start_margin = 3.0;

  std::size_t n_frames() const;
  std::size_t frame_dim() const { return grid * grid; }
  void validate() const;
};

using World = std::variant<PinnedGpWorld, TrajectoryGmmWorld, MovingBlobWorld>;

/// Exact conditional law of the GP world given frame 0 = cond.
GaussianWorldDenoiser conditional_moments(const PinnedGpWorld& world, const Frame& cond);
GaussianWorldDenoiser conditional_moments(const World& world, const Frame& cond);

/// Reweights components by w_k N(cond; mu_k^0, tau^2 I) and pins frame 0 of
/// each to cond with variance eps_pin. Throws std::domain_error when cond
/// has zero likelihood under every component.
GmmWorldDenoiser conditional_gmm(const TrajectoryGmmWorld& world, const Frame& cond);

Sequence sample_sequence(const PinnedGpWorld& world, const Frame& cond, RngStream& rng);
/// Draw plus the index of the component it came from (see components()).
std::pair<Sequence, std::size_t> sample_sequence_with_mode(const TrajectoryGmmWorld& world,
                                                           const Frame& cond, RngStream& rng);
Sequence sample_sequence(const TrajectoryGmmWorld& world, const Frame& cond, RngStream& rng);

struct RenderedFrame {
  Frame frame;
  bool clamped = false;
};

/// Isotropic bump with peak 1 at `pos` (row, col). Positions outside the
/// grid are clamped to it and flagged.
RenderedFrame render_blob(const MovingBlobWorld& world, std::span<const double> pos);
Sequence render_sequence(const MovingBlobWorld& world, const Sequence& positions);
/// (row, col) of the brightest pixel.
std::pair<double, double> peak_position(const MovingBlobWorld& world, std::span<const double> frame);

/// Position trajectory starting at `start` and its rendering.
std::pair<Sequence, Sequence> sample_blob_sequence(const MovingBlobWorld& world,
                                                   const Frame& start, RngStream& rng);

struct TrainingExample {
  Sequence clean;
  Frame cond;
};

/// Clean sequence with a self-generated start condition (frame 0).
TrainingExample draw_training_example(const World& world, RngStream& rng);

std::size_t world_n_frames(const World& world);
std::size_t world_frame_dim(const World& world);

/// Posterior-mean denoiser for the GP or GMM world. Blob worlds have no
/// analytic backend and are rejected.
std::unique_ptr<Denoiser> make_analytic_backend(const World& world);

}  // namespace trflab
