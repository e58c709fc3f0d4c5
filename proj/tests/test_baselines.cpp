#include "doctest.h"

#include <stdexcept>

#include "support.hpp"
#include "trflab/baselines.hpp"
#include "trflab/metrics.hpp"
#include "trflab/worlds.hpp"

using namespace trflab;
using trflab::testing::end_condition;
using trflab::testing::max_abs_diff;
using trflab::testing::start_condition;

namespace {

class ConditionSpy final : public Denoiser {
 public:
  explicit ConditionSpy(const Denoiser& inner) : inner_(inner) {}
  Sequence predict_x0(const Sequence& x, double sigma, const Condition& cond) const override {
    last = cond;
    return inner_.predict_x0(x, sigma, cond);
  }
  mutable Condition last;

 private:
  const Denoiser& inner_;
};

}  // namespace

TEST_CASE("interpolated conditions") {
  const auto c = interpolated_conditions(Frame{0.0, 2.0}, Frame{3.0, -1.0}, 4);
  REQUIRE(c.size() == 4);
  CHECK(c[0] == Frame{0.0, 2.0});
  CHECK(c[1][0] == doctest::Approx(1.0));
  CHECK(c[2][1] == doctest::Approx(0.0));
  CHECK(c[3] == Frame{3.0, -1.0});
  CHECK_THROWS_AS(interpolated_conditions(Frame{0.0}, Frame{0.0, 1.0}, 4), std::invalid_argument);
}

TEST_CASE("interpolation baseline with equal conditions equals forward sampling") {
  PinnedGpWorld w;
  const auto backend = make_analytic_backend(World{w});
  const auto schedule = build_karras(ScheduleParams{});
  const Frame c{0.4, -0.9};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    NoiseStreams a(seed), b(seed);
    const auto base = baseline_condition_interp(*backend, schedule, start_condition(c), end_condition(c),
                                                ChurnParams{}, 16, 2, a);
    const auto fwd = sample(*backend, schedule, start_condition(c), ChurnParams{}, 16, 2, b);
    CHECK(base.x == fwd.x);
  }
}

TEST_CASE("swapping the end condition with noise leaves frame 0 unchanged in law") {
  PinnedGpWorld w;
  const auto backend = make_analytic_backend(World{w});
  ScheduleParams p;
  p.steps = 10;
  const auto schedule = build_karras(p);
  const Frame a{0.0, 0.0}, b{2.0, 1.0};
  std::vector<Sequence> plain, swapped, other;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    NoiseStreams n1(seed), n2(seed + 1000), n3(seed + 2000);
    auto f0 = [](const SampleResult& r) { return Sequence(1, 2, {r.x(0, 0), r.x(0, 1)}); };
    plain.push_back(f0(baseline_condition_interp(*backend, schedule, start_condition(a), end_condition(b),
                                                 ChurnParams{}, 16, 2, n1)));
    swapped.push_back(f0(baseline_condition_interp(*backend, schedule, start_condition(a), end_condition(b),
                                                   ChurnParams{}, 16, 2, n2, true)));
    other.push_back(f0(baseline_condition_interp(*backend, schedule, start_condition(a), end_condition(b),
                                                 ChurnParams{}, 16, 2, n3)));
  }
  const double d_swap = energy_distance(plain, swapped);
  const double d_null = energy_distance(plain, other);
  CHECK(d_swap < 1e-4);
  CHECK(d_null < 1e-4);

  ConditionSpy spy(*backend);
  NoiseStreams n1(1), n2(1);
  const auto r1 = baseline_condition_interp(spy, schedule, start_condition(a), end_condition(b),
                                            ChurnParams{}, 16, 2, n1);
  const Frame seen_plain = spy.last.frame_for(15);
  const auto r2 = baseline_condition_interp(spy, schedule, start_condition(a), end_condition(b),
                                            ChurnParams{}, 16, 2, n2, true);
  const Frame seen_swapped = spy.last.frame_for(15);
  CHECK(seen_plain == b);
  CHECK_FALSE(seen_swapped == b);
  CHECK(spy.last.frame_for(0) == a);
  CHECK(r1.x == r2.x);
}

TEST_CASE("inpainting lands on the end frame") {
  PinnedGpWorld w;
  const auto backend = make_analytic_backend(World{w});
  const auto schedule = build_karras(ScheduleParams{});
  const Frame end{1.2, -0.4};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    NoiseStreams noise(seed);
    const auto r = baseline_inpaint(*backend, schedule, start_condition(Frame{0.0, 0.0}), end,
                                    ChurnParams{}, 16, 2, noise);
    CHECK(endpoint_error(r.x, end) < 0.01);
  }
  NoiseStreams noise(0);
  CHECK_THROWS_AS(baseline_inpaint(*backend, schedule, start_condition(Frame{0.0, 0.0}), Frame{1.0},
                                   ChurnParams{}, 16, 2, noise),
                  std::invalid_argument);
}

TEST_CASE("inpainting toward the natural endpoint stays close to forward sampling") {
  PinnedGpWorld w;
  w.q = 0.03;
  const auto backend = make_analytic_backend(World{w});
  ScheduleParams p;
  p.steps = 50;
  const auto schedule = build_karras(p);
  const auto c = start_condition(Frame{0.5, 0.5});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    NoiseStreams a(seed), b(seed);
    const auto fwd = sample(*backend, schedule, c, ChurnParams{}, 16, 2, a);
    const auto inp = baseline_inpaint(*backend, schedule, c, fwd.x.frame_copy(15), ChurnParams{}, 16, 2, b);
    double worst = 0.0;
    for (std::size_t n = 0; n < 16; ++n) worst = std::max(worst, distance(fwd.x.frame(n), inp.x.frame(n)));
    CHECK(worst < 0.05);
  }
}
