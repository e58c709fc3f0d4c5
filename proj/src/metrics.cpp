#include "trflab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace trflab {

double endpoint_error(const Sequence& x, const Frame& target) {
  if (x.n_frames() == 0 || x.dim() != target.dim()) {
    throw std::invalid_argument("endpoint_error: dimension mismatch");
  }
  return distance(x.frame(x.n_frames() - 1), target.values());
}

double roughness(const Sequence& x) {
  if (x.n_frames() < 3) throw std::invalid_argument("roughness: need at least 3 frames");
  double worst = 0.0;
  for (std::size_t n = 1; n + 1 < x.n_frames(); ++n) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.dim(); ++k) {
      const double dd = x(n + 1, k) - 2.0 * x(n, k) + x(n - 1, k);
      s += dd * dd;
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

namespace {

// mean |u_i - v_j| over pairs, skipping i == j when `skip_diagonal`
double mean_pair_distance(std::span<const Sequence> u, std::span<const Sequence> v,
                          bool skip_diagonal) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (skip_diagonal && i == j) continue;
      total += distance(u[i].flat(), v[j].flat());
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

}  // namespace

double energy_distance(std::span<const Sequence> a, std::span<const Sequence> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("energy_distance: empty sample set");
  for (const auto& s : a) require_same_shape(s, a.front(), "energy_distance");
  for (const auto& s : b) require_same_shape(s, a.front(), "energy_distance");
  const bool paired = a.size() == b.size() && a.size() > 1;
  const double cross = mean_pair_distance(a, b, paired);
  const double within_a = mean_pair_distance(a, a, true);
  const double within_b = mean_pair_distance(b, b, true);
  return 2.0 * cross - within_a - within_b;
}

double ModeCoverage::max_share() const {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) return 0.0;
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(total);
}

ModeCoverage mode_coverage(std::span<const Sequence> samples, const TrajectoryGmmWorld& world) {
  ModeCoverage out{std::vector<std::size_t>(world.n_modes(), 0), 0};
  for (const auto& s : samples) {
    require_same_shape(s, world.templates.front(), "mode_coverage");
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < world.n_modes(); ++k) {
      const double dist = distance(s.flat(), world.templates[k].flat());
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    ++out.counts[best];
  }
  out.modes_hit = static_cast<std::size_t>(
      std::count_if(out.counts.begin(), out.counts.end(), [](std::size_t c) { return c > 0; }));
  return out;
}

void MetricReport::set(const std::string& name, double value, std::size_t count) {
  if (!std::isfinite(value)) throw std::invalid_argument("MetricReport: non-finite " + name);
  values_[name] = {value, count};
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace trflab
