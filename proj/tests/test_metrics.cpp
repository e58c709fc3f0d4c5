#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "support.hpp"
#include "trflab/metrics.hpp"
#include "trflab/worlds.hpp"

using namespace trflab;
using trflab::testing::random_sequence;

TEST_CASE("endpoint error") {
  const Sequence x(3, 2, {0, 0, 1, 1, 3, 4});
  CHECK(endpoint_error(x, Frame{3.0, 4.0}) == 0.0);
  CHECK(endpoint_error(Sequence(2, 1, {0.0, 3.0}), Frame{1.0}) == 2.0);
  RngStream rng(1, 0);
  for (int i = 0; i < 100; ++i) {
    const Sequence s = random_sequence(5, 3, rng);
    const Frame target{rng.normal(), rng.normal(), rng.normal()};
    CHECK(endpoint_error(s, target) == distance(reverse(s).frame(0), target.values()));
  }
  CHECK_THROWS_AS(endpoint_error(x, Frame{1.0}), std::invalid_argument);
}

TEST_CASE("roughness") {
  CHECK(roughness(Sequence(3, 1, {0.0, 0.0, 1.0})) == 1.0);
  Sequence affine(6, 2);
  for (std::size_t n = 0; n < 6; ++n) {
    affine(n, 0) = 0.5 + 2.0 * static_cast<double>(n);
    affine(n, 1) = -1.0 * static_cast<double>(n);
  }
  CHECK(roughness(affine) < 1e-14);

  for (double jump : {0.1, 1.0, 7.5}) {
    Sequence s(8, 1);
    for (std::size_t n = 0; n < 8; ++n) s(n, 0) = 0.3 * static_cast<double>(n) + (n >= 4 ? jump : 0.0);
    CHECK(roughness(s) == doctest::Approx(jump).epsilon(1e-12));
  }
  CHECK_THROWS_AS(roughness(Sequence(2, 1)), std::invalid_argument);
}

TEST_CASE("endpoint error and roughness are translation invariant") {
  RngStream rng(2, 0);
  for (int i = 0; i < 100; ++i) {
    const Sequence s = random_sequence(6, 2, rng);
    const Frame target{rng.normal(), rng.normal()};
    const double dx = 10.0 * rng.normal(), dy = 10.0 * rng.normal();
    Sequence moved = s;
    for (std::size_t n = 0; n < 6; ++n) {
      moved(n, 0) += dx;
      moved(n, 1) += dy;
    }
    const Frame moved_target{target[0] + dx, target[1] + dy};
    CHECK(endpoint_error(moved, moved_target) == doctest::Approx(endpoint_error(s, target)).epsilon(1e-9));
    CHECK(roughness(moved) == doctest::Approx(roughness(s)).epsilon(1e-9));
  }
}

namespace {

std::vector<Sequence> gaussian_set(std::size_t count, double offset, RngStream& rng) {
  std::vector<Sequence> out;
  for (std::size_t i = 0; i < count; ++i) {
    Sequence s = random_sequence(4, 2, rng);
    for (double& v : s.flat()) v += offset;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("energy distance") {
  RngStream rng(3, 0);
  const auto a = gaussian_set(50, 0.0, rng);
  CHECK(energy_distance(a, a) == 0.0);

  std::vector<Sequence> doubled_a, doubled_b;
  const auto b = gaussian_set(40, 0.7, rng);
  for (const auto& s : a) doubled_a.push_back(2.0 * s);
  for (const auto& s : b) doubled_b.push_back(2.0 * s);
  CHECK(energy_distance(doubled_a, doubled_b) ==
        doctest::Approx(2.0 * energy_distance(a, b)).epsilon(1e-12));

  const auto base = gaussian_set(500, 0.0, rng);
  double prev = -INFINITY;
  for (double delta : {0.0, 0.5, 1.0, 2.0}) {
    const auto other = gaussian_set(500, delta, rng);
    const double d = energy_distance(base, other);
    CHECK(d > prev);
    prev = d;
    if (delta == 0.0) CHECK(std::abs(d) < 0.05);
    if (delta == 2.0) CHECK(d > 1.0);
  }
  CHECK_THROWS_AS(energy_distance(std::vector<Sequence>{}, a), std::invalid_argument);
}

TEST_CASE("energy distance on one point each is the doubled distance") {
  const std::vector<Sequence> a{Sequence(1, 1, {0.0})}, b{Sequence(1, 1, {3.0})};
  CHECK(energy_distance(a, b) == doctest::Approx(6.0));
  const std::vector<Sequence> a2{Sequence(1, 1, {0.0}), Sequence(1, 1, {1.0})};
  const std::vector<Sequence> b3{Sequence(1, 1, {3.0}), Sequence(1, 1, {4.0}), Sequence(1, 1, {5.0})};
  // cross mean 3.5, within a 1, within b (1+2+1)*2/6 = 4/3
  CHECK(energy_distance(a2, b3) == doctest::Approx(2.0 * 3.5 - 1.0 - 4.0 / 3.0));
}

TEST_CASE("mode coverage") {
  const auto w = TrajectoryGmmWorld::arcs({0, 0}, {4, 0}, 3, 2.0, 16, 0.05, false);
  std::vector<Sequence> at_two(10, w.templates[2]);
  const auto c = mode_coverage(at_two, w);
  CHECK(c.counts == std::vector<std::size_t>{0, 0, 10});
  CHECK(c.modes_hit == 1);
  CHECK(c.max_share() == 1.0);

  const auto single = TrajectoryGmmWorld::arcs({0, 0}, {4, 0}, 1, 2.0, 16, 0.05, false);
  RngStream rng(1, 0);
  std::vector<Sequence> noise_samples;
  for (int i = 0; i < 20; ++i) noise_samples.push_back(random_sequence(16, 2, rng, 3.0));
  CHECK(mode_coverage(noise_samples, single).modes_hit == 1);

  std::vector<Sequence> draws;
  for (int i = 0; i < 10000; ++i) draws.push_back(sample_sequence(w, Frame{0.0, 0.0}, rng));
  const auto hist = mode_coverage(draws, w);
  CHECK(hist.modes_hit == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(static_cast<double>(hist.counts[k]) / 10000.0 - w.weights[k]) < 0.03);
  }
}

TEST_CASE("metric report rejects non-finite values") {
  MetricReport r;
  r.set("a", 1.5, 3);
  CHECK(r.at("a").value == 1.5);
  CHECK(r.at("a").count == 3);
  CHECK_THROWS(r.set("b", NAN, 1));
  CHECK_THROWS(r.set("c", INFINITY, 1));
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  const std::vector<double> v{1.0, 2.0, 6.0};
  CHECK(mean(v) == 3.0);
}
