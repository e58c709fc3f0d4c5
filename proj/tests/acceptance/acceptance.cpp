#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "trflab/baselines.hpp"
#include "trflab/experiment.hpp"
#include "trflab/fusion.hpp"
#include "trflab/metrics.hpp"
#include "trflab/mlp.hpp"
#include "trflab/train.hpp"
#include "trflab/worlds.hpp"

using namespace trflab;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

Condition start_at(Frame f) { return {std::move(f), ConditionRole::kStart, std::nullopt}; }
Condition end_at(Frame f) { return {std::move(f), ConditionRole::kEnd, std::nullopt}; }

ScheduleParams steps(int t) {
  ScheduleParams p;
  p.steps = t;
  return p;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome fusion_optimality() {
  RngStream rng(1001, 0);
  double worst = INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    const Sequence f = gaussian_noise(16, 2, 1.0, rng);
    const Sequence b = gaussian_noise(16, 2, 1.0, rng);
    std::vector<double> w(16);
    for (auto& v : w) v = rng.uniform();
    const auto alpha = AlphaSchedule::custom(w);
    const Sequence x = fuse(f, b, alpha);
    const double best = fusion_objective(x, f, b, alpha);
    for (int p = 0; p < 1000; ++p) {
      const double scale = std::pow(10.0, -8.0 + 8.0 * rng.uniform());
      const Sequence y = x + gaussian_noise(16, 2, scale, rng);
      worst = std::min(worst, fusion_objective(y, f, b, alpha) - best);
    }
  }
  return {worst >= -1e-12, fmt("min objective gain over 1e5 perturbations %.3g", worst)};
}

Outcome degenerate_alpha() {
  PinnedGpWorld w;
  const auto backend = make_analytic_backend(World{w});
  const auto schedule = build_karras(ScheduleParams{});
  const Frame a{0.5, -0.5}, b{1.5, 0.7};
  TrfConfig cfg;
  cfg.reinjections = 0;
  int ones = 0, zeros = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.alpha = AlphaSchedule::constant(16, 1.0);
    NoiseStreams n1(seed), n2(seed);
    const auto trf1 = trf_sample(*backend, schedule, start_at(a), end_at(b), cfg, 16, 2, n1);
    const auto fwd = sample(*backend, schedule, start_at(a), cfg.churn, 16, 2, n2);
    ones += trf1.x == fwd.x;

    cfg.alpha = AlphaSchedule::constant(16, 0.0);
    NoiseStreams n3(seed), n4(seed, true);
    const auto trf0 = trf_sample(*backend, schedule, start_at(a), end_at(b), cfg, 16, 2, n3);
    const auto bwd = sample(*backend, schedule, start_at(b), cfg.churn, 16, 2, n4);
    zeros += trf0.x == reverse(bwd.x);
  }
  return {ones == 20 && zeros == 20,
          fmt("alpha=1 identical %.0f/20, alpha=0 identical %.0f/20", ones, zeros)};
}

struct GpComparison {
  std::vector<double> trf_endpoint, interp_endpoint;
  int smoother = 0;
};

GpComparison gp_comparison(int seeds) {
  PinnedGpWorld w;
  const auto backend = make_analytic_backend(World{w});
  const auto schedule = build_karras(steps(50));
  const Frame a{-2.0, 0.0}, b{2.0, 0.0};
  TrfConfig cfg;
  cfg.alpha = alpha_weights(AlphaKind::kLinear, 16);
  GpComparison out;
  for (int s = 0; s < seeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    NoiseStreams n1(seed), n2(seed), n3(seed);
    const auto trf = trf_sample(*backend, schedule, start_at(a), end_at(b), cfg, 16, 2, n1).x;
    const auto interp =
        baseline_condition_interp(*backend, schedule, start_at(a), end_at(b), cfg.churn, 16, 2, n2).x;
    out.trf_endpoint.push_back(endpoint_error(trf, b));
    out.interp_endpoint.push_back(endpoint_error(interp, b));
    if (s < 100) {
      const auto inpaint = baseline_inpaint(*backend, schedule, start_at(a), b, cfg.churn, 16, 2, n3).x;
      out.smoother += roughness(trf) < roughness(inpaint);
    }
  }
  return out;
}

Outcome endpoint_adherence(const GpComparison& c) {
  const double trf = median(c.trf_endpoint), interp = median(c.interp_endpoint);
  return {trf < 0.05 && interp >= 5.0 * trf,
          fmt("median endpoint error trf %.4g, interp %.4g (ratio %.1f)", trf, interp, interp / trf)};
}

Outcome smoothness(const GpComparison& c) {
  return {c.smoother >= 90, fmt("trf smoother than inpainting on %.0f/100 seeds", c.smoother)};
}

Outcome sampler_fidelity() {
  PinnedGpWorld w;
  const auto backend = make_analytic_backend(World{w});
  const auto schedule = build_karras(steps(100));
  const Frame c{0.5, -0.5};
  const auto truth = conditional_moments(w, c);
  const int n = 5000;
  const auto dim = truth.mean.size();
  Eigen::MatrixXd samples(dim, n);
  for (int s = 0; s < n; ++s) {
    NoiseStreams noise(static_cast<std::uint64_t>(s));
    samples.col(s) = to_vector(sample(*backend, schedule, start_at(c), ChurnParams{}, 16, 2, noise).x);
  }
  const Eigen::VectorXd mean = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - mean;
  const Eigen::MatrixXd cov = centered * centered.transpose() / (n - 1);
  const double mean_err = (mean - truth.mean).cwiseAbs().maxCoeff();
  const double cov_err = (cov - truth.cov).norm() / truth.cov.norm();
  return {mean_err < 0.05 && cov_err < 0.1,
          fmt("max mean abs error %.4g, covariance relative Frobenius error %.4g", mean_err, cov_err)};
}

Outcome reinjection_effect() {
  const auto world = TrajectoryGmmWorld::arcs({0.0, 0.0}, {4.0, 0.0}, 3, 2.0, 16, 0.05, true, 3.0);
  const auto backend = make_analytic_backend(World{world});
  const int T = 50;
  const auto schedule = build_karras(steps(T));
  double med[2];
  for (int i = 0; i < 2; ++i) {
    TrfConfig cfg;
    cfg.alpha = alpha_weights(AlphaKind::kLinear, 16);
    cfg.reinjections = i == 0 ? 0 : 2;
    cfg.t0 = T / 2;
    std::vector<double> r;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      NoiseStreams noise(seed);
      r.push_back(roughness(trf_sample(*backend, schedule, start_at({0.0, 0.0}), end_at({4.0, 0.0}),
                                       cfg, 16, 2, noise)
                                .x));
    }
    med[i] = median(r);
  }
  return {med[1] < med[0], fmt("median roughness M=0 %.4f, M=2 %.4f", med[0], med[1])};
}

Outcome diversity() {
  const auto world = TrajectoryGmmWorld::arcs({0.0, 0.0}, {4.0, 0.0}, 3, 2.0, 16, 0.05);
  const auto backend = make_analytic_backend(World{world});
  const auto schedule = build_karras(ScheduleParams{});
  TrfConfig cfg;
  cfg.alpha = alpha_weights(AlphaKind::kLinear, 16);
  std::vector<Sequence> samples;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    NoiseStreams noise(seed);
    samples.push_back(
        trf_sample(*backend, schedule, start_at({0.0, 0.0}), end_at({4.0, 0.0}), cfg, 16, 2, noise).x);
  }
  const auto cov = mode_coverage(samples, world);
  return {cov.modes_hit >= 2 && cov.max_share() <= 0.95,
          fmt("modes hit %.0f, largest share %.3f", static_cast<double>(cov.modes_hit), cov.max_share())};
}

Outcome learned_backend() {
  MovingBlobWorld blob;
  PinnedGpWorld positions;
  positions.a = 1.0;
  positions.q = 0.3;
  blob.positions = positions;
  const World world{blob};
  TrainConfig cfg;
  cfg.loss.p_mean = -0.4;
  cfg.loss.sigma_data = estimate_sigma_data(world, 256, 0);
  const auto start = std::chrono::steady_clock::now();
  const auto trained = train(world, cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double first = smoothed_loss(trained.loss_curve, 100, true);
  const double last = smoothed_loss(trained.loss_curve, 100, false);

  const MlpDenoiser net(trained.params);
  const auto schedule = build_karras(ScheduleParams{});
  TrfConfig tc;
  tc.alpha = alpha_weights(AlphaKind::kLinear, 16);
  RngStream pick(77, 5);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ex = draw_training_example(world, pick);
    const auto target = peak_position(blob, ex.clean.frame(15));
    NoiseStreams noise(seed);
    const auto x = trf_sample(net, schedule, start_at(ex.clean.frame_copy(0)),
                              end_at(ex.clean.frame_copy(15)), tc, 16, blob.frame_dim(), noise)
                       .x;
    const auto got = peak_position(blob, x.frame(15));
    total += std::hypot(got.first - target.first, got.second - target.second);
  }
  const double err = total / 20.0;
  return {last <= 0.5 * first && err <= 1.5,
          fmt("smoothed loss %.1f -> %.1f (ratio %.3f)", first, last, last / first) +
              fmt(", mean endpoint peak error %.3f cells, training %.0fs", err, seconds)};
}

Outcome bookkeeping() {
  double worst_var = 0.0;
  RngStream rng(1009, 0);
  for (int T : {2, 3, 10, 25, 50, 100, 1000}) {
    for (double rho : {1.0, 3.0, 7.0}) {
      const auto s = build_karras(T, 0.002, 80.0, rho);
      for (int t = 1; t < T; ++t) {
        const double inj = injection_std(s, t);
        const double lhs = s.level(t - 1) * s.level(t - 1) + inj * inj;
        const double rhs = s.level(t) * s.level(t);
        worst_var = std::max(worst_var, std::abs(lhs - rhs) / rhs);
      }
    }
  }
  int reversal_ok = 0, pinning_ok = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto n = static_cast<std::size_t>(2 + trial % 20);
    const auto d = static_cast<std::size_t>(1 + trial % 5);
    const Sequence x = gaussian_noise(n, d, 10.0, rng);
    reversal_ok += reverse(reverse(x)) == x;
    const Sequence y = gaussian_noise(n, d, 10.0, rng);
    const auto alpha = alpha_weights(trial % 2 ? AlphaKind::kLinear : AlphaKind::kExponential, n,
                                     0.1 + 5.0 * rng.uniform());
    const Sequence f = fuse(x, y, alpha);
    pinning_ok += f.frame_copy(0) == x.frame_copy(0) && f.frame_copy(n - 1) == y.frame_copy(0);
  }
  return {worst_var <= 1e-12 && reversal_ok == 10000 && pinning_ok == 10000,
          fmt("variance identity max rel error %.3g, involution %.0f/10000", worst_var, reversal_ok) +
              fmt(", endpoint pinning %.0f/10000", pinning_ok)};
}

Outcome reproducibility() {
  const auto root = std::filesystem::temp_directory_path() / "trflab_acceptance_repro";
  std::filesystem::remove_all(root);
  ExperimentConfig cfg;
  cfg.seeds = {0, 1, 2, 3};
  cfg.start = std::vector<double>{-2.0, 0.0};
  cfg.end = std::vector<double>{2.0, 0.0};
  cfg.output_dir = (root / "run").string();
  const auto first = run_experiment(cfg);
  const auto second = run_experiment(cfg);
  bool same = first.content_hash == second.content_hash && first.outputs.size() == second.outputs.size();
  for (std::size_t i = 0; same && i < first.outputs.size(); ++i) {
    same = first.outputs[i].sha256 == second.outputs[i].sha256;
  }
  std::filesystem::remove_all(root);
  return {same, "content hash " + first.content_hash.substr(0, 16) + (same ? " reproduced" : " differs")};
}

}  // namespace

int main() {
  const GpComparison gp = gp_comparison(200);
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, fusion_optimality},
      {2, degenerate_alpha},
      {3, [&] { return endpoint_adherence(gp); }},
      {4, [&] { return smoothness(gp); }},
      {5, sampler_fidelity},
      {6, reinjection_effect},
      {7, diversity},
      {8, learned_backend},
      {9, bookkeeping},
      {10, reproducibility},
  };
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
