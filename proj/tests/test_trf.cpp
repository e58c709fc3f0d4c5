#include "doctest.h"

#include <array>
#include <cmath>
#include <stdexcept>

#include "support.hpp"
#include "trflab/fusion.hpp"
#include "trflab/worlds.hpp"

using namespace trflab;
using trflab::testing::end_condition;
using trflab::testing::max_abs_diff;
using trflab::testing::random_sequence;
using trflab::testing::start_condition;

TEST_CASE("alpha schedules") {
  const auto lin = alpha_weights(AlphaKind::kLinear, 4);
  CHECK(lin[0] == 1.0);
  CHECK(lin[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(lin[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(lin[3] == 0.0);

  const auto near_linear = alpha_weights(AlphaKind::kExponential, 16, 1e-4);
  const auto lin16 = alpha_weights(AlphaKind::kLinear, 16);
  for (std::size_t n = 0; n < 16; ++n) CHECK(std::abs(near_linear[n] - lin16[n]) < 1e-4);

  for (double lambda : {0.1, 1.0, 3.0, 10.0}) {
    const auto e = alpha_weights(AlphaKind::kExponential, 9, lambda);
    CHECK(e[0] == 1.0);
    CHECK(e[8] == 0.0);
    for (std::size_t n = 1; n < 9; ++n) CHECK(e[n] <= e[n - 1]);
    const double s = 3.0 / 8.0;
    CHECK(e[3] == doctest::Approx((std::exp(-lambda * s) - std::exp(-lambda)) /
                                  (1.0 - std::exp(-lambda)))
                      .epsilon(1e-13));
  }
  CHECK_THROWS_AS(alpha_weights(AlphaKind::kLinear, 1), std::invalid_argument);
  CHECK_THROWS_AS(alpha_weights(AlphaKind::kExponential, 4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(AlphaSchedule::custom({0.5, 1.5}), std::invalid_argument);
}

TEST_CASE("fuse examples") {
  const Sequence f(2, 1, {1.0, 2.0});
  const Sequence b(2, 1, {5.0, 7.0});
  CHECK(fuse(f, b, alpha_weights(AlphaKind::kLinear, 2)) == Sequence(2, 1, {1.0, 5.0}));

  const Sequence f3(3, 1, {0.0, 2.0, 0.0});
  const Sequence b3(3, 1, {0.0, 4.0, 0.0});
  CHECK(fuse(f3, b3, AlphaSchedule::custom({1.0, 0.5, 0.0}))(1, 0) == 3.0);

  RngStream rng(3, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const Sequence x = random_sequence(7, 3, rng);
    const auto alpha = alpha_weights(trial % 2 ? AlphaKind::kLinear : AlphaKind::kExponential, 7);
    CHECK(max_abs_diff(fuse(x, reverse(x), alpha), x) < 1e-15);
    CHECK(fusion_objective(fuse(x, reverse(x), alpha), x, reverse(x), alpha) < 1e-28);
  }
  CHECK_THROWS_AS(fuse(Sequence(3, 1), Sequence(3, 2), alpha_weights(AlphaKind::kLinear, 3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(fuse(Sequence(3, 1), Sequence(3, 1), alpha_weights(AlphaKind::kLinear, 4)),
                  std::invalid_argument);
}

TEST_CASE("fusion objective weight pattern at N=2") {
  RngStream rng(8, 0);
  const Sequence x = random_sequence(2, 3, rng);
  const Sequence f = random_sequence(2, 3, rng);
  const Sequence b = random_sequence(2, 3, rng);
  const double expected = std::pow(distance(x.frame(0), f.frame(0)), 2) +
                          std::pow(distance(x.frame(1), b.frame(0)), 2);
  CHECK(fusion_objective(x, f, b, alpha_weights(AlphaKind::kLinear, 2)) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("fuse minimizes the fusion objective") {
  RngStream rng(11, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Sequence f = random_sequence(6, 2, rng);
    const Sequence b = random_sequence(6, 2, rng);
    std::vector<double> w(6);
    for (auto& v : w) v = rng.uniform();
    const auto alpha = AlphaSchedule::custom(w);
    const Sequence x = fuse(f, b, alpha);
    const double best = fusion_objective(x, f, b, alpha);
    for (int p = 0; p < 200; ++p) {
      const double scale = std::pow(10.0, -6.0 + 6.0 * rng.uniform());
      const Sequence y = x + random_sequence(6, 2, rng, scale);
      CHECK(fusion_objective(y, f, b, alpha) >= best - 1e-12);
    }
  }
}

TEST_CASE("fused endpoints copy the path endpoints exactly") {
  RngStream rng(12, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Sequence f = random_sequence(5, 2, rng, 10.0);
    const Sequence b = random_sequence(5, 2, rng, 10.0);
    const auto alpha = alpha_weights(trial % 2 ? AlphaKind::kLinear : AlphaKind::kExponential, 5);
    const Sequence x = fuse(f, b, alpha);
    CHECK(x.frame_copy(0) == f.frame_copy(0));
    CHECK(x.frame_copy(4) == b.frame_copy(0));
  }
}

TEST_CASE("trf config validation") {
  TrfConfig cfg;
  cfg.alpha = alpha_weights(AlphaKind::kLinear, 4);
  CHECK(cfg.resolve_t0(25) == 13);
  CHECK(cfg.resolve_t0(50) == 25);
  CHECK_NOTHROW(cfg.validate(4, 25));
  CHECK_THROWS_AS(cfg.validate(5, 25), std::invalid_argument);
  cfg.t0 = 26;
  CHECK_THROWS_AS(cfg.validate(4, 25), std::invalid_argument);
  cfg.t0 = 0;
  cfg.reinjections = -1;
  CHECK_THROWS_AS(cfg.validate(4, 25), std::invalid_argument);
}

namespace {

/// Scalar pinned GP with two frames: x0 = c + sqrt(e) z0, x1 = a x0 + q z1.
struct ScalarGp2 {
  double a, q, e;

  std::array<double, 2> denoise(std::array<double, 2> x, double sigma, double c) const {
    const double m0 = c, m1 = a * c;
    const double c00 = e, c01 = a * e, c11 = a * a * e + q * q;
    const double s2 = sigma * sigma;
    const double p00 = c00 + s2, p01 = c01, p11 = c11 + s2;
    const double det = p00 * p11 - p01 * p01;
    const double r0 = x[0] - m0, r1 = x[1] - m1;
    const double v0 = (p11 * r0 - p01 * r1) / det;
    const double v1 = (-p01 * r0 + p00 * r1) / det;
    return {m0 + c00 * v0 + c01 * v1, m1 + c01 * v0 + c11 * v1};
  }

  std::array<double, 2> euler(std::array<double, 2> x, double from, double to, double c) const {
    const auto d = denoise(x, from, c);
    return {x[0] + (to - from) * (x[0] - d[0]) / from, x[1] + (to - from) * (x[1] - d[1]) / from};
  }
};

}  // namespace

TEST_CASE("trf matches a straight-line reference on a 3-step scalar GP") {
  PinnedGpWorld w;
  w.a = 0.8;
  w.q = 0.6;
  w.dim = 1;
  w.n_frames = 2;
  w.eps_pin = 1e-3;
  const auto backend = make_analytic_backend(World{w});
  const auto schedule = build_karras(3, 0.1, 10.0, 7.0);
  const double cs = 0.7, ce = -1.3;

  TrfConfig cfg;
  cfg.reinjections = 2;
  cfg.t0 = 1;
  cfg.alpha = AlphaSchedule::custom({0.75, 0.25});
  cfg.churn.s_churn = 1.0;
  cfg.churn.s_tmin = 0.0;
  cfg.churn.s_tmax = 100.0;
  cfg.churn.s_noise = 1.05;

  NoiseStreams noise(2024);
  const auto r = trf_sample(*backend, schedule, start_condition(Frame{cs}),
                            end_condition(Frame{ce}), cfg, 2, 1, noise);

  const ScalarGp2 gp{w.a, w.q, w.eps_pin};
  RngStream root(2024, 0);
  RngStream init = root.substream(1), churn = root.substream(2), reinj = root.substream(3);
  const double al0 = 0.75, al1 = 0.25;
  const double sig[3] = {schedule.sigmas()[2], schedule.sigmas()[1], schedule.sigmas()[0]};
  auto level = [&](int t) { return t < 0 ? 0.0 : sig[t]; };

  std::array<double, 2> x{10.0 * init.normal(), 10.0 * init.normal()};
  REQUIRE(r.trace.steps.size() == 3);
  for (int t = 2; t >= 0; --t) {
    const double s = level(t), sn = level(t - 1);
    const double gamma = std::min(1.0 / 3.0, std::sqrt(2.0) - 1.0);
    const double sh = s * (1.0 + gamma);
    const double k = std::sqrt(sh * sh - s * s) * 1.05;
    std::array<double, 2> xh{x[0] + k * churn.normal(), x[1] + k * churn.normal()};
    auto fwd = gp.euler(xh, sh, sn, cs);
    auto bwd = gp.euler({xh[1], xh[0]}, sh, sn, ce);
    x = {al0 * fwd[0] + (1 - al0) * bwd[1], al1 * fwd[1] + (1 - al1) * bwd[0]};
    if (t > 1) {
      const double inj = std::sqrt(s * s - sn * sn);
      for (int m = 0; m < 2; ++m) {
        std::array<double, 2> xt{x[0] + inj * reinj.normal(), x[1] + inj * reinj.normal()};
        fwd = gp.euler(xt, s, sn, cs);
        bwd = gp.euler({xt[1], xt[0]}, s, sn, ce);
        x = {al0 * fwd[0] + (1 - al0) * bwd[1], al1 * fwd[1] + (1 - al1) * bwd[0]};
      }
    }
    const auto& step = r.trace.steps[static_cast<std::size_t>(2 - t)];
    CHECK(step.t == t);
    CHECK(step.fusions == (t > 1 ? 3 : 1));
    CHECK(std::abs(step.latent(0, 0) - x[0]) < 1e-12);
    CHECK(std::abs(step.latent(1, 0) - x[1]) < 1e-12);
  }
}

TEST_CASE("M = 0 fuses exactly once per step") {
  PinnedGpWorld w;
  const auto backend = make_analytic_backend(World{w});
  TrfConfig cfg;
  cfg.reinjections = 0;
  cfg.alpha = alpha_weights(AlphaKind::kLinear, 16);
  NoiseStreams noise(1);
  const auto r = trf_sample(*backend, build_karras(ScheduleParams{}), start_condition(Frame{0.0, 0.0}),
                            end_condition(Frame{1.0, 1.0}), cfg, 16, 2, noise);
  CHECK(r.trace.total_fusions() == 25);
  cfg.reinjections = 2;
  NoiseStreams again(1);
  const auto r2 = trf_sample(*backend, build_karras(ScheduleParams{}), start_condition(Frame{0.0, 0.0}),
                             end_condition(Frame{1.0, 1.0}), cfg, 16, 2, again);
  CHECK(r2.trace.total_fusions() == 25 + 2 * (24 - 14 + 1));
}

TEST_CASE("alpha of all ones reproduces forward-only sampling") {
  PinnedGpWorld w;
  const auto backend = make_analytic_backend(World{w});
  const auto schedule = build_karras(ScheduleParams{});
  TrfConfig cfg;
  cfg.reinjections = 0;
  cfg.alpha = AlphaSchedule::constant(16, 1.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    NoiseStreams a(seed), b(seed);
    const auto c_s = start_condition(Frame{0.3, -0.2});
    const auto trf = trf_sample(*backend, schedule, c_s, end_condition(Frame{2.0, 2.0}), cfg, 16, 2, a);
    const auto fwd = sample(*backend, schedule, c_s, cfg.churn, 16, 2, b);
    CHECK(trf.x == fwd.x);
  }
}

TEST_CASE("with alpha of all ones the end condition has no influence, for any M") {
  PinnedGpWorld w;
  const auto backend = make_analytic_backend(World{w});
  const auto schedule = build_karras(ScheduleParams{});
  TrfConfig cfg;
  cfg.reinjections = 3;
  cfg.alpha = AlphaSchedule::constant(16, 1.0);
  NoiseStreams a(9), b(9);
  const auto c_s = start_condition(Frame{0.3, -0.2});
  const auto r1 = trf_sample(*backend, schedule, c_s, end_condition(Frame{2.0, 2.0}), cfg, 16, 2, a);
  const auto r2 = trf_sample(*backend, schedule, c_s, end_condition(Frame{-5.0, 1.0}), cfg, 16, 2, b);
  CHECK(r1.x == r2.x);
}

TEST_CASE("reversal symmetry in a time-symmetric world") {
  PinnedGpWorld w;
  w.a = 1.0;
  w.q = 0.3;
  const auto backend = make_analytic_backend(World{w});
  const auto schedule = build_karras(ScheduleParams{});
  TrfConfig cfg;
  cfg.alpha = alpha_weights(AlphaKind::kLinear, 16);
  const Frame a{0.0, 0.0}, b{1.5, -0.5};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    NoiseStreams plain(seed), mirrored(seed, true);
    const auto r1 = trf_sample(*backend, schedule, start_condition(a), end_condition(b), cfg, 16, 2, plain);
    const auto r2 = trf_sample(*backend, schedule, start_condition(b), end_condition(a), cfg, 16, 2, mirrored);
    CHECK(max_abs_diff(r1.x, reverse(r2.x)) < 1e-10);
  }
}

TEST_CASE("re-injection lifts the latent to the current noise level") {
  PinnedGpWorld w;
  const auto schedule = build_karras(ScheduleParams{});
  const int t = 10;
  const double s_prev = schedule.level(t - 1), s = schedule.level(t);
  RngStream data(5, 0), lat(5, 1);
  NoiseStreams noise(5);
  const int trials = 40000;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (int i = 0; i < trials; ++i) {
    const Sequence x0 = sample_sequence(w, Frame{0.0, 0.0}, data);
    const Sequence x = x0 + gaussian_noise(16, 2, s_prev, lat);
    const Sequence lifted = reinject(x, schedule, t, noise);
    const Sequence added = lifted - x0;
    sum_sq += squared_norm(added.flat());
    count += added.size();
  }
  CHECK(std::abs(sum_sq / static_cast<double>(count) / (s * s) - 1.0) < 0.02);
}

TEST_CASE("trf is deterministic and pins its endpoints to the conditions") {
  PinnedGpWorld w;
  const auto backend = make_analytic_backend(World{w});
  ScheduleParams p;
  p.steps = 50;
  const auto schedule = build_karras(p);
  TrfConfig cfg;
  cfg.alpha = alpha_weights(AlphaKind::kLinear, 16);
  const Frame a{0.0, 0.0}, b{1.0, 0.5};
  NoiseStreams n1(3), n2(3);
  const auto r1 = trf_sample(*backend, schedule, start_condition(a), end_condition(b), cfg, 16, 2, n1);
  const auto r2 = trf_sample(*backend, schedule, start_condition(a), end_condition(b), cfg, 16, 2, n2);
  CHECK(r1.x == r2.x);
  CHECK(distance(r1.x.frame(0), a.values()) < 0.01);
  CHECK(distance(r1.x.frame(15), b.values()) < 0.01);
  for (const auto& s : r1.trace.steps) {
    CHECK(std::isfinite(s.objective));
    CHECK(s.disagreement >= 0.0);
  }
}
