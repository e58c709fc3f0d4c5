#include "trflab/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include "trflab/baselines.hpp"
#include "trflab/checkpoint.hpp"
#include "trflab/fusion.hpp"
#include "trflab/hash.hpp"
#include "trflab/io.hpp"

namespace fs = std::filesystem;

namespace trflab {
namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json metrics_json(const MetricReport& r) {
  Json j = Json::object();
  for (const auto& [name, v] : r.values()) j[name] = {{"value", v.value}, {"count", v.count}};
  return j;
}

MetricReport metrics_from_json(const Json& j) {
  MetricReport r;
  for (const auto& [name, v] : j.items()) {
    r.set(name, v.at("value").get<double>(), v.at("count").get<std::size_t>());
  }
  return r;
}

NoiseSchedule make_schedule(const ExperimentConfig& cfg) {
  try {
    return build_karras(cfg.schedule);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("schedule", e.what());
  }
}

void prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  fs::remove(fs::path(dir) / "manifest.json", ec);
}

std::string file_sha(const std::string& path) { return sha256_hex(read_file(path)); }

void finish_manifest(ExperimentManifest& m, const std::string& dir,
                     std::chrono::steady_clock::time_point t_begin) {
  m.content_hash = sha256_hex(manifest_hashed_part(m).dump());
  m.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  write_file_atomic((fs::path(dir) / "manifest.json").string(), m.to_json().dump(2) + "\n");
}

std::string config_hash(const ExperimentConfig& cfg) {
  Json j = to_json(cfg);
  j.erase("output_dir");
  j.erase("workers");
  return sha256_hex(j.dump());
}

ExperimentManifest new_manifest(const ExperimentConfig& cfg) {
  ExperimentManifest m;
  m.config = to_json(cfg);
  m.config_hash = config_hash(cfg);
  m.started_at = utc_now();
  return m;
}

/// Peak (row, col) of every frame of a rendered blob sequence.
Sequence peak_track(const MovingBlobWorld& world, const Sequence& frames) {
  Sequence track(frames.n_frames(), 2);
  for (std::size_t n = 0; n < frames.n_frames(); ++n) {
    const auto [r, c] = peak_position(world, frames.frame(n));
    track(n, 0) = r;
    track(n, 1) = c;
  }
  return track;
}

void add_summary(MetricReport& r, const std::string& name, const std::vector<double>& v) {
  r.set(name + "_median", median(v), v.size());
  r.set(name + "_mean", mean(v), v.size());
}

}  // namespace

Json ExperimentManifest::to_json() const {
  Json j = manifest_hashed_part(*this);
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["started_at"] = started_at;
  j["content_hash"] = content_hash;
  return j;
}

Json manifest_hashed_part(const ExperimentManifest& m) {
  Json config = m.config;
  config.erase("output_dir");
  config.erase("workers");
  Json outputs = Json::array();
  for (const auto& o : m.outputs) outputs.push_back({{"seed", o.seed}, {"file", o.file}, {"sha256", o.sha256}});
  return {{"format_version", kManifestVersion},
          {"config", config},
          {"config_hash", m.config_hash},
          {"outputs", outputs},
          {"metrics", metrics_json(m.metrics)}};
}

std::unique_ptr<Denoiser> make_backend(const ExperimentConfig& cfg, const World& world) {
  if (cfg.backend.checkpoint.empty()) {
    if (std::holds_alternative<MovingBlobWorld>(world)) {
      throw ConfigError("backend", "blob worlds need a checkpoint backend");
    }
    return make_analytic_backend(world);
  }
  MlpParams params = load_checkpoint(cfg.backend.checkpoint);
  const auto& d = params.descriptor();
  if (d.n_frames != world_n_frames(world) || d.frame_dim != world_frame_dim(world) ||
      d.cond_dim != world_frame_dim(world)) {
    throw CheckpointShapeMismatch(
        "descriptor", "checkpoint " + cfg.backend.checkpoint + " is for " +
                          std::to_string(d.n_frames) + "x" + std::to_string(d.frame_dim) +
                          " sequences, the world has " + std::to_string(world_n_frames(world)) +
                          "x" + std::to_string(world_frame_dim(world)));
  }
  return std::make_unique<MlpDenoiser>(std::move(params));
}

std::pair<Frame, Frame> condition_frames(const ExperimentConfig& cfg, const World& world) {
  if (!cfg.start) throw ConfigError("conditions.start", "required for sampling");
  if (!cfg.end) throw ConfigError("conditions.end", "required for sampling");
  const auto make = [&](const std::vector<double>& v, const char* key) {
    if (const auto* blob = std::get_if<MovingBlobWorld>(&world)) {
      if (v.size() != 2) throw ConfigError(key, "blob conditions are (row, col) positions");
      return render_blob(*blob, v).frame;
    }
    if (v.size() != world_frame_dim(world)) {
      throw ConfigError(key, "has dimension " + std::to_string(v.size()) + ", the world has " +
                                 std::to_string(world_frame_dim(world)));
    }
    return Frame(v);
  };
  return {make(*cfg.start, "conditions.start"), make(*cfg.end, "conditions.end")};
}

SampleResult run_chain(const ExperimentConfig& cfg, const World& world, const Denoiser& backend,
                       const Frame& start, const Frame& end, std::uint64_t seed) {
  const NoiseSchedule schedule = make_schedule(cfg);
  const std::size_t n = world_n_frames(world);
  const std::size_t d = world_frame_dim(world);
  const Condition c_s{start, ConditionRole::kStart, std::nullopt};
  const Condition c_e{end, ConditionRole::kEnd, std::nullopt};
  NoiseStreams noise(seed);
  switch (cfg.sampler) {
    case SamplerKind::kForward:
      return sample(backend, schedule, c_s, cfg.churn, n, d, noise);
    case SamplerKind::kTrf:
      return trf_sample(backend, schedule, c_s, c_e, make_trf_config(cfg, n), n, d, noise);
    case SamplerKind::kBaselineInterp:
      return baseline_condition_interp(backend, schedule, c_s, c_e, cfg.churn, n, d, noise);
    case SamplerKind::kBaselineInpaint:
      return baseline_inpaint(backend, schedule, c_s, end, cfg.churn, n, d, noise);
  }
  throw std::logic_error("unknown sampler");
}

MetricReport evaluate_samples(const ExperimentConfig& cfg, const World& world,
                              const std::vector<Sequence>& samples) {
  MetricReport report;
  if (samples.empty()) return report;
  std::vector<Sequence> tracks;
  Frame start_target, end_target;
  const TrajectoryGmmWorld* modes_world = nullptr;
  if (const auto* blob = std::get_if<MovingBlobWorld>(&world)) {
    for (const auto& s : samples) tracks.push_back(peak_track(*blob, s));
    if (cfg.start) start_target = Frame(*cfg.start);
    if (cfg.end) end_target = Frame(*cfg.end);
    modes_world = std::get_if<TrajectoryGmmWorld>(&blob->positions);
  } else {
    tracks = samples;
    auto [s, e] = condition_frames(cfg, world);
    start_target = std::move(s);
    end_target = std::move(e);
    modes_world = std::get_if<TrajectoryGmmWorld>(&world);
  }
  std::vector<double> end_err, start_err, rough;
  for (const auto& t : tracks) {
    if (end_target.dim() == t.dim()) end_err.push_back(endpoint_error(t, end_target));
    if (start_target.dim() == t.dim()) start_err.push_back(endpoint_error(reverse(t), start_target));
    if (t.n_frames() >= 3) rough.push_back(roughness(t));
  }
  if (!end_err.empty()) add_summary(report, "endpoint_error", end_err);
  if (!start_err.empty()) add_summary(report, "start_error", start_err);
  if (!rough.empty()) add_summary(report, "roughness", rough);
  if (modes_world) {
    const auto cov = mode_coverage(tracks, *modes_world);
    report.set("modes_hit", static_cast<double>(cov.modes_hit), tracks.size());
    report.set("max_mode_share", cov.max_share(), tracks.size());
  }
  if (const auto* gp = std::get_if<PinnedGpWorld>(&world);
      gp && cfg.sampler == SamplerKind::kForward && samples.size() >= 2 && cfg.start) {
    RngStream ref = RngStream(0x5eedULL, 0).substream(201);
    std::vector<Sequence> reference;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      reference.push_back(sample_sequence(*gp, Frame(*cfg.start), ref));
    }
    report.set("energy_distance_vs_world", energy_distance(samples, reference), samples.size());
  }
  return report;
}

ExperimentManifest run_experiment(const ExperimentConfig& cfg) {
  const auto t_begin = std::chrono::steady_clock::now();
  ExperimentManifest manifest = new_manifest(cfg);
  const World world = build_world(cfg.world);
  const auto backend = make_backend(cfg, world);
  const auto [start, end] = condition_frames(cfg, world);
  make_schedule(cfg);
  if (cfg.sampler == SamplerKind::kTrf) make_trf_config(cfg, world_n_frames(world));
  prepare_output_dir(cfg.output_dir);

  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<Sequence> samples(n_seeds);
  std::vector<std::exception_ptr> errors(n_seeds);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n_seeds; i = next++) {
      try {
        samples[i] = run_chain(cfg, world, *backend, start, end, cfg.seeds[i]).x;
        const std::string file = "trajectory_seed" + std::to_string(cfg.seeds[i]) + ".csv";
        export_trajectory_csv(samples[i], (fs::path(cfg.output_dir) / file).string());
        if (cfg.export_pgm) {
          if (const auto* blob = std::get_if<MovingBlobWorld>(&world)) {
            export_frames_pgm(samples[i], blob->grid,
                              (fs::path(cfg.output_dir) / ("frames_seed" + std::to_string(cfg.seeds[i])))
                                  .string());
          }
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(cfg.workers, std::max<std::size_t>(n_seeds, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t i = 0; i < n_seeds; ++i) {
    const std::string file = "trajectory_seed" + std::to_string(cfg.seeds[i]) + ".csv";
    manifest.outputs.push_back(
        {cfg.seeds[i], file, file_sha((fs::path(cfg.output_dir) / file).string())});
  }
  manifest.metrics = evaluate_samples(cfg, world, samples);
  finish_manifest(manifest, cfg.output_dir, t_begin);
  return manifest;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg) {
  const auto t_begin = std::chrono::steady_clock::now();
  const auto axis = [](const auto& values, auto base) {
    using T = decltype(base);
    return values.empty() ? std::vector<T>{base} : std::vector<T>(values.begin(), values.end());
  };
  const auto ms = axis(cfg.sweep.reinjections, cfg.trf.reinjections);
  std::vector<std::optional<int>> t0s;
  if (cfg.sweep.t0.empty()) {
    t0s.push_back(cfg.trf.t0);
  } else {
    for (int t : cfg.sweep.t0) t0s.emplace_back(t);
  }
  const auto alphas = axis(cfg.sweep.alpha, cfg.trf.alpha);
  const auto churns = axis(cfg.sweep.s_churn, cfg.churn.s_churn);

  prepare_output_dir(cfg.output_dir);
  std::error_code ec;
  fs::remove(fs::path(cfg.output_dir) / "sweep_manifest.json", ec);

  std::vector<SweepPoint> points;
  std::string csv = "point,reinjections,t0,alpha,s_churn,endpoint_error_median,roughness_median,content_hash\n";
  Json listing = Json::array();
  for (int m : ms) {
    for (const auto& t0 : t0s) {
      for (AlphaKind a : alphas) {
        for (double sc : churns) {
          ExperimentConfig sub = cfg;
          sub.sweep = {};
          sub.sampler = SamplerKind::kTrf;
          sub.trf.reinjections = m;
          sub.trf.t0 = t0;
          sub.trf.alpha = a;
          sub.churn.s_churn = sc;
          char name[32];
          std::snprintf(name, sizeof name, "point_%03zu", points.size());
          sub.output_dir = (fs::path(cfg.output_dir) / name).string();
          auto manifest = run_experiment(sub);
          const auto metric = [&](const char* key) {
            const auto& v = manifest.metrics.values();
            return v.count(key) ? format_double(v.at(key).value) : std::string("");
          };
          const std::string alpha = a == AlphaKind::kExponential ? "exponential" : "linear";
          const std::string t0_text = t0 ? std::to_string(*t0) : "auto";
          csv += std::string(name) + "," + std::to_string(m) + "," + t0_text + "," + alpha + "," +
                 format_double(sc) + "," + metric("endpoint_error_median") + "," +
                 metric("roughness_median") + "," + manifest.content_hash + "\n";
          listing.push_back({{"dir", name},
                             {"reinjections", m},
                             {"t0", t0 ? Json(*t0) : Json(nullptr)},
                             {"alpha", alpha},
                             {"s_churn", sc},
                             {"content_hash", manifest.content_hash}});
          points.push_back({m, t0, a, sc, std::move(manifest)});
        }
      }
    }
  }
  write_file_atomic((fs::path(cfg.output_dir) / "sweep.csv").string(), csv);
  Json echo = to_json(cfg);
  echo.erase("output_dir");
  echo.erase("workers");
  Json hashed = {{"format_version", kManifestVersion},
                 {"config", echo},
                 {"config_hash", config_hash(cfg)},
                 {"points", listing},
                 {"summary_sha256", sha256_hex(csv)}};
  Json j = hashed;
  j["content_hash"] = sha256_hex(hashed.dump());
  j["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  write_file_atomic((fs::path(cfg.output_dir) / "sweep_manifest.json").string(), j.dump(2) + "\n");
  return points;
}

TrainingRun run_training(const ExperimentConfig& cfg, const TrainCallback& progress) {
  const auto t_begin = std::chrono::steady_clock::now();
  const World world = build_world(cfg.world);
  ExperimentConfig resolved = cfg;
  TrainConfig tc = cfg.train.train;
  tc.loss.sigma_data = cfg.train.sigma_data ? *cfg.train.sigma_data
                                            : estimate_sigma_data(world, 256, tc.seed);
  resolved.train.sigma_data = tc.loss.sigma_data;
  ExperimentManifest manifest = new_manifest(resolved);
  prepare_output_dir(cfg.output_dir);

  TrainingRun run{train(world, tc, progress), {}};
  const fs::path dir(cfg.output_dir);
  save_checkpoint(run.result.params, (dir / "model.trfw").string());
  export_loss_curve_csv(run.result.loss_curve, (dir / "loss_curve.csv").string());
  for (const char* file : {"model.trfw", "loss_curve.csv"}) {
    manifest.outputs.push_back({tc.seed, file, file_sha((dir / file).string())});
  }
  const auto& curve = run.result.loss_curve;
  if (!curve.empty()) {
    const std::size_t window = std::min<std::size_t>(100, curve.size());
    const double first = smoothed_loss(curve, window, true);
    const double last = smoothed_loss(curve, window, false);
    manifest.metrics.set("loss_initial_smoothed", first, window);
    manifest.metrics.set("loss_final_smoothed", last, window);
    manifest.metrics.set("loss_ratio", last / first, curve.size());
  }
  manifest.metrics.set("sigma_data", tc.loss.sigma_data, 1);
  finish_manifest(manifest, cfg.output_dir, t_begin);
  run.manifest = std::move(manifest);
  return run;
}

EvalResult evaluate_run(const std::string& dir) {
  const fs::path root(dir);
  const auto bytes = read_file((root / "manifest.json").string());
  Json m;
  try {
    m = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception& e) {
    throw IoError(dir + "/manifest.json: " + e.what());
  }
  EvalResult out;
  const MetricReport recorded = metrics_from_json(m.at("metrics"));
  ExperimentConfig cfg = parse_config(m.at("config"));
  std::vector<Sequence> samples;
  bool trajectories = true;
  for (const auto& o : m.at("outputs")) {
    const std::string file = o.at("file").get<std::string>();
    const std::string path = (root / file).string();
    std::string actual;
    try {
      actual = file_sha(path);
    } catch (const IoError& e) {
      out.hashes_match = false;
      out.problems.push_back(e.what());
      continue;
    }
    if (actual != o.at("sha256").get<std::string>()) {
      out.hashes_match = false;
      out.problems.push_back(file + ": sha256 differs from the manifest");
      continue;
    }
    if (file.rfind("trajectory_", 0) == 0) {
      samples.push_back(import_trajectory_csv(path));
    } else {
      trajectories = false;
    }
  }
  if (trajectories && out.hashes_match) {
    out.metrics = evaluate_samples(cfg, build_world(cfg.world), samples);
    for (const auto& [name, v] : recorded.values()) {
      const auto& now = out.metrics.values();
      if (!now.count(name) || now.at(name).value != v.value) {
        out.problems.push_back("metric " + name + " does not match the manifest");
      }
    }
  } else {
    out.metrics = recorded;
  }
  return out;
}

}  // namespace trflab
