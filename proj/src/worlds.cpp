#include "trflab/worlds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace trflab {

// ---------------------------------------------------------------- GP world

void PinnedGpWorld::validate() const {
  if (!(std::abs(a) <= 1.0)) throw std::invalid_argument("gp world: |a| must be <= 1");
  if (!(q > 0.0)) throw std::invalid_argument("gp world: q must be > 0");
  if (dim < 1) throw std::invalid_argument("gp world: dim must be >= 1");
  if (n_frames < 1) throw std::invalid_argument("gp world: n_frames must be >= 1");
  if (!(eps_pin > 0.0)) throw std::invalid_argument("gp world: eps_pin must be > 0");
  if (!(start_std >= 0.0)) throw std::invalid_argument("gp world: start_std must be >= 0");
}

GaussianWorldDenoiser conditional_moments(const PinnedGpWorld& world, const Frame& cond) {
  world.validate();
  if (cond.dim() != world.dim) {
    throw std::invalid_argument("conditional_moments: condition has dim " +
                                std::to_string(cond.dim()) + ", world has " +
                                std::to_string(world.dim));
  }
  const std::size_t n = world.n_frames;
  const std::size_t d = world.dim;
  const auto size = static_cast<Eigen::Index>(n * d);

  // marginal variance of frame m and powers of a
  std::vector<double> var(n);
  std::vector<double> a_pow(n);
  var[0] = world.eps_pin;
  a_pow[0] = 1.0;
  for (std::size_t m = 1; m < n; ++m) {
    var[m] = world.a * world.a * var[m - 1] + world.q * world.q;
    a_pow[m] = a_pow[m - 1] * world.a;
  }

  GaussianWorldDenoiser out{n, d, Eigen::VectorXd(size), Eigen::MatrixXd::Zero(size, size)};
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = 0; k < d; ++k) out.mean(static_cast<Eigen::Index>(m * d + k)) = a_pow[m] * cond[k];
  }
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t l = 0; l < n; ++l) {
      const std::size_t lo = std::min(m, l);
      const double c = a_pow[m > l ? m - l : l - m] * var[lo];
      for (std::size_t k = 0; k < d; ++k) {
        out.cov(static_cast<Eigen::Index>(m * d + k), static_cast<Eigen::Index>(l * d + k)) = c;
      }
    }
  }
  return out;
}

Sequence sample_sequence(const PinnedGpWorld& world, const Frame& cond, RngStream& rng) {
  world.validate();
  if (cond.dim() != world.dim) throw std::invalid_argument("sample_sequence: condition dim");
  Sequence x(world.n_frames, world.dim);
  const double pin_std = std::sqrt(world.eps_pin);
  for (std::size_t k = 0; k < world.dim; ++k) x(0, k) = cond[k] + pin_std * rng.normal();
  for (std::size_t m = 1; m < world.n_frames; ++m) {
    for (std::size_t k = 0; k < world.dim; ++k) {
      x(m, k) = world.a * x(m - 1, k) + world.q * rng.normal();
    }
  }
  return x;
}

// --------------------------------------------------------------- GMM world

std::vector<std::pair<double, Sequence>> TrajectoryGmmWorld::components() const {
  std::vector<std::pair<double, Sequence>> out;
  const double scale = bidirectional ? 0.5 : 1.0;
  for (std::size_t k = 0; k < templates.size(); ++k) out.emplace_back(scale * weights[k], templates[k]);
  if (bidirectional) {
    const auto& routes = return_routes.empty() ? templates : return_routes;
    for (std::size_t k = 0; k < routes.size(); ++k) {
      out.emplace_back(scale * weights[k], reverse(routes[k]));
    }
  }
  return out;
}

namespace {

double min_separation(const std::vector<Sequence>& routes) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < routes.size(); ++i) {
    for (std::size_t j = i + 1; j < routes.size(); ++j) {
      double worst = 0.0;
      for (std::size_t n = 0; n < routes[i].n_frames(); ++n) {
        worst = std::max(worst, distance(routes[i].frame(n), routes[j].frame(n)));
      }
      best = std::min(best, worst);
    }
  }
  return best;
}

Sequence arc_route(const Frame& start, const Frame& end, const std::vector<double>& perp,
                   double offset, std::size_t n_frames) {
  Sequence t(n_frames, start.dim());
  for (std::size_t n = 0; n < n_frames; ++n) {
    const double s = static_cast<double>(n) / static_cast<double>(n_frames - 1);
    const double lateral = offset * std::sin(std::numbers::pi * s);
    for (std::size_t c = 0; c < start.dim(); ++c) {
      t(n, c) = start[c] + s * (end[c] - start[c]) + lateral * perp[c];
    }
  }
  return t;
}

double arc_offset(std::size_t k, std::size_t k_modes, double bulge) {
  if (k_modes == 1) return 0.0;
  return bulge * (2.0 * static_cast<double>(k) / static_cast<double>(k_modes - 1) - 1.0);
}

}  // namespace

double TrajectoryGmmWorld::min_template_separation() const { return min_separation(templates); }

void TrajectoryGmmWorld::validate() const {
  if (templates.empty()) throw std::invalid_argument("gmm world: no templates");
  if (weights.size() != templates.size()) {
    throw std::invalid_argument("gmm world: weights and templates disagree in count");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("gmm world: weights must be > 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("gmm world: weights must sum to 1");
  for (const auto& t : templates) {
    if (!t.same_shape(templates.front())) throw std::invalid_argument("gmm world: template shapes differ");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("gmm world: tau must be > 0");
  if (!(eps_pin > 0.0)) throw std::invalid_argument("gmm world: eps_pin must be > 0");
  if (templates.size() > 1 && !(min_template_separation() > 6.0 * tau)) {
    throw std::invalid_argument("gmm world: templates closer than 6 tau");
  }
  if (!return_routes.empty()) {
    if (return_routes.size() != templates.size()) {
      throw std::invalid_argument("gmm world: need one return route per template");
    }
    for (const auto& r : return_routes) {
      if (!r.same_shape(templates.front())) {
        throw std::invalid_argument("gmm world: return route shape differs");
      }
    }
    if (return_routes.size() > 1 && !(min_separation(return_routes) > 6.0 * tau)) {
      throw std::invalid_argument("gmm world: return routes closer than 6 tau");
    }
  }
}

TrajectoryGmmWorld TrajectoryGmmWorld::arcs(const Frame& start, const Frame& end,
                                            std::size_t k_modes, double bulge,
                                            std::size_t n_frames, double tau,
                                            bool bidirectional,
                                            std::optional<double> return_bulge) {
  if (start.dim() != end.dim() || start.dim() == 0) {
    throw std::invalid_argument("arcs: endpoint dimensions disagree");
  }
  if (k_modes < 1 || n_frames < 2) throw std::invalid_argument("arcs: need K >= 1, N >= 2");
  const std::size_t d = start.dim();

  // unit direction perpendicular to the chord (first two coordinates)
  std::vector<double> perp(d, 0.0);
  if (d == 1) {
    perp[0] = 1.0;
  } else {
    const double dx = end[0] - start[0];
    const double dy = end[1] - start[1];
    const double len = std::hypot(dx, dy);
    if (len > 0.0) {
      perp[0] = -dy / len;
      perp[1] = dx / len;
    } else {
      perp[1] = 1.0;
    }
  }

  TrajectoryGmmWorld world;
  world.tau = tau;
  world.bidirectional = bidirectional;
  for (std::size_t k = 0; k < k_modes; ++k) {
    world.templates.push_back(arc_route(start, end, perp, arc_offset(k, k_modes, bulge), n_frames));
    world.weights.push_back(1.0 / static_cast<double>(k_modes));
    if (return_bulge) {
      world.return_routes.push_back(
          arc_route(start, end, perp, arc_offset(k, k_modes, *return_bulge), n_frames));
    }
  }
  world.validate();
  return world;
}

GmmWorldDenoiser conditional_gmm(const TrajectoryGmmWorld& world, const Frame& cond) {
  if (cond.dim() != world.dim()) throw std::invalid_argument("conditional_gmm: condition dim");
  const auto comps = world.components();
  const std::size_t n = world.n_frames();
  const std::size_t d = world.dim();
  const double tau2 = world.tau * world.tau;

  std::vector<double> logw(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double r2 = squared_norm([&] {
      std::vector<double> diff(d);
      for (std::size_t c = 0; c < d; ++c) diff[c] = cond[c] - comps[k].second(0, c);
      return diff;
    }());
    logw[k] = std::log(comps[k].first) - 0.5 * r2 / tau2;
  }
  const double norm = log_sum_exp(logw);
  if (!std::isfinite(norm)) {
    throw std::domain_error("conditional_gmm: condition has zero likelihood under every mode");
  }

  GmmWorldDenoiser out{n, d, {}};
  const auto size = static_cast<Eigen::Index>(n * d);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double w = std::exp(logw[k] - norm);
    Eigen::VectorXd mean = to_vector(comps[k].second);
    Eigen::VectorXd var = Eigen::VectorXd::Constant(size, tau2);
    for (std::size_t c = 0; c < d; ++c) {
      mean(static_cast<Eigen::Index>(c)) = cond[c];
      var(static_cast<Eigen::Index>(c)) = world.eps_pin;
    }
    out.components.push_back({w, std::move(mean), std::move(var)});
  }
  return out;
}

std::pair<Sequence, std::size_t> sample_sequence_with_mode(const TrajectoryGmmWorld& world,
                                                           const Frame& cond, RngStream& rng) {
  const GmmWorldDenoiser post = conditional_gmm(world, cond);
  const double u = rng.uniform();
  std::size_t k = 0;
  double acc = 0.0;
  for (; k + 1 < post.components.size(); ++k) {
    acc += post.components[k].weight;
    if (u <= acc) break;
  }
  const auto& c = post.components[k];
  Sequence x(post.n_frames, post.dim);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    x.flat()[i] = c.mean(idx) + std::sqrt(c.var(idx)) * rng.normal();
  }
  return {std::move(x), k};
}

Sequence sample_sequence(const TrajectoryGmmWorld& world, const Frame& cond, RngStream& rng) {
  return sample_sequence_with_mode(world, cond, rng).first;
}

// -------------------------------------------------------------- blob world

std::size_t MovingBlobWorld::n_frames() const {
  return std::visit(
      [](const auto& w) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(w)>, PinnedGpWorld>) {
          return w.n_frames;
        } else {
          return w.n_frames();
        }
      },
      positions);
}

void MovingBlobWorld::validate() const {
  if (grid < 2) throw std::invalid_argument("blob world: grid must be >= 2");
  if (!(bump_std > 0.0)) throw std::invalid_argument("blob world: bump_std must be > 0");
  std::visit(
      [](const auto& w) {
        using T = std::decay_t<decltype(w)>;
        w.validate();
        std::size_t d = 0;
        if constexpr (std::is_same_v<T, PinnedGpWorld>) {
          d = w.dim;
        } else {
          d = w.dim();
        }
        if (d != 2) throw std::invalid_argument("blob world: position world must have d = 2");
      },
      positions);
}

RenderedFrame render_blob(const MovingBlobWorld& world, std::span<const double> pos) {
  if (pos.size() != 2) throw std::invalid_argument("render_blob: position must be 2-D");
  const double hi = static_cast<double>(world.grid - 1);
  RenderedFrame out{Frame(world.grid * world.grid), false};
  double r = pos[0];
  double c = pos[1];
  if (!(r >= 0.0 && r <= hi) || !(c >= 0.0 && c <= hi)) {
    out.clamped = true;
    r = std::clamp(std::isfinite(r) ? r : 0.0, 0.0, hi);
    c = std::clamp(std::isfinite(c) ? c : 0.0, 0.0, hi);
  }
  const double inv = 1.0 / (2.0 * world.bump_std * world.bump_std);
  for (std::size_t i = 0; i < world.grid; ++i) {
    for (std::size_t j = 0; j < world.grid; ++j) {
      const double dr = static_cast<double>(i) - r;
      const double dc = static_cast<double>(j) - c;
      out.frame[i * world.grid + j] = std::exp(-(dr * dr + dc * dc) * inv);
    }
  }
  return out;
}

Sequence render_sequence(const MovingBlobWorld& world, const Sequence& positions) {
  if (positions.dim() != 2) throw std::invalid_argument("render_sequence: positions must be 2-D");
  Sequence out(positions.n_frames(), world.frame_dim());
  for (std::size_t n = 0; n < positions.n_frames(); ++n) {
    out.set_frame(n, render_blob(world, positions.frame(n)).frame.values());
  }
  return out;
}

std::pair<double, double> peak_position(const MovingBlobWorld& world, std::span<const double> frame) {
  if (frame.size() != world.frame_dim()) throw std::invalid_argument("peak_position: frame size");
  const auto it = std::max_element(frame.begin(), frame.end());
  const auto idx = static_cast<std::size_t>(it - frame.begin());
  return {static_cast<double>(idx / world.grid), static_cast<double>(idx % world.grid)};
}

std::pair<Sequence, Sequence> sample_blob_sequence(const MovingBlobWorld& world,
                                                   const Frame& start, RngStream& rng) {
  Sequence pos = std::visit(
      [&](const auto& w) { return sample_sequence(w, start, rng); }, world.positions);
  Sequence frames = render_sequence(world, pos);
  return {std::move(pos), std::move(frames)};
}

// ------------------------------------------------------------ World variant

std::size_t world_n_frames(const World& world) {
  return std::visit(
      [](const auto& w) -> std::size_t {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, PinnedGpWorld>) {
          return w.n_frames;
        } else {
          return w.n_frames();
        }
      },
      world);
}

std::size_t world_frame_dim(const World& world) {
  return std::visit(
      [](const auto& w) -> std::size_t {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, PinnedGpWorld>) {
          return w.dim;
        } else if constexpr (std::is_same_v<T, TrajectoryGmmWorld>) {
          return w.dim();
        } else {
          return w.frame_dim();
        }
      },
      world);
}

GaussianWorldDenoiser conditional_moments(const World& world, const Frame& cond) {
  if (const auto* gp = std::get_if<PinnedGpWorld>(&world)) return conditional_moments(*gp, cond);
  throw std::invalid_argument("conditional_moments: only defined for the GP world");
}

namespace {

Frame draw_gp_start(const PinnedGpWorld& w, RngStream& rng) {
  Frame f(w.dim);
  for (std::size_t k = 0; k < w.dim; ++k) f[k] = w.start_std * rng.normal();
  return f;
}

Frame draw_gmm_start(const TrajectoryGmmWorld& w, RngStream& rng) {
  const auto comps = w.components();
  const double u = rng.uniform();
  std::size_t k = 0;
  double acc = 0.0;
  for (; k + 1 < comps.size(); ++k) {
    acc += comps[k].first;
    if (u <= acc) break;
  }
  Frame f(w.dim());
  for (std::size_t c = 0; c < w.dim(); ++c) f[c] = comps[k].second(0, c) + w.tau * rng.normal();
  return f;
}

}  // namespace

TrainingExample draw_training_example(const World& world, RngStream& rng) {
  if (const auto* gp = std::get_if<PinnedGpWorld>(&world)) {
    Frame start = draw_gp_start(*gp, rng);
    Sequence x = sample_sequence(*gp, start, rng);
    return {std::move(x), std::move(start)};
  }
  if (const auto* gmm = std::get_if<TrajectoryGmmWorld>(&world)) {
    Frame start = draw_gmm_start(*gmm, rng);
    Sequence x = sample_sequence(*gmm, start, rng);
    return {std::move(x), std::move(start)};
  }
  const auto& blob = std::get<MovingBlobWorld>(world);
  Frame start_pos(2);
  if (const auto* gmm = std::get_if<TrajectoryGmmWorld>(&blob.positions)) {
    start_pos = draw_gmm_start(*gmm, rng);
  } else {
    const double lo = blob.start_margin;
    const double hi = static_cast<double>(blob.grid - 1) - blob.start_margin;
    for (std::size_t k = 0; k < 2; ++k) start_pos[k] = lo + (hi - lo) * rng.uniform();
  }
  auto [pos, frames] = sample_blob_sequence(blob, start_pos, rng);
  return {frames, frames.frame_copy(0)};
}

namespace {

class GpBackend final : public Denoiser {
 public:
  explicit GpBackend(PinnedGpWorld world) : world_(world) { world_.validate(); }
  Sequence predict_x0(const Sequence& x, double sigma, const Condition& cond) const override {
    return gp_posterior_x0(conditional_moments(world_, cond.frame_for(0)), x, sigma);
  }

 private:
  PinnedGpWorld world_;
};

class GmmBackend final : public Denoiser {
 public:
  explicit GmmBackend(TrajectoryGmmWorld world) : world_(std::move(world)) { world_.validate(); }
  Sequence predict_x0(const Sequence& x, double sigma, const Condition& cond) const override {
    return gmm_posterior_x0(conditional_gmm(world_, cond.frame_for(0)), x, sigma);
  }

 private:
  TrajectoryGmmWorld world_;
};

}  // namespace

std::unique_ptr<Denoiser> make_analytic_backend(const World& world) {
  if (const auto* gp = std::get_if<PinnedGpWorld>(&world)) return std::make_unique<GpBackend>(*gp);
  if (const auto* gmm = std::get_if<TrajectoryGmmWorld>(&world)) {
    return std::make_unique<GmmBackend>(*gmm);
  }
  throw std::invalid_argument("no analytic backend for the blob world; use a trained checkpoint");
}

}  // namespace trflab
