#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "trflab/config.hpp"
#include "trflab/denoiser.hpp"
#include "trflab/metrics.hpp"
#include "trflab/sampler.hpp"

namespace trflab {

inline constexpr int kManifestVersion = 1;

struct OutputFile {
  std::uint64_t seed = 0;
  std::string file;  // relative to the run directory
  std::string sha256;
};

struct ExperimentManifest {
  Json config;
  std::string config_hash;
  std::vector<OutputFile> outputs;
  MetricReport metrics;
  double wall_clock_seconds = 0.0;
  std::string started_at;
  /// SHA-256 over everything above except the wall-clock fields.
  std::string content_hash;

  Json to_json() const;
};

/// Manifest fields covered by the content hash. The output directory and
/// worker count are left out: they do not influence any output.
Json manifest_hashed_part(const ExperimentManifest& m);

/// Backend named by the config (analytic oracle or checkpointed MLP).
std::unique_ptr<Denoiser> make_backend(const ExperimentConfig& cfg, const World& world);

/// Start and end condition frames; blob worlds render their positions.
std::pair<Frame, Frame> condition_frames(const ExperimentConfig& cfg, const World& world);

/// Runs one chain of the configured sampler for `seed`.
SampleResult run_chain(const ExperimentConfig& cfg, const World& world, const Denoiser& backend,
                       const Frame& start, const Frame& end, std::uint64_t seed);

/// Metrics of a set of generated sequences (in seed order).
MetricReport evaluate_samples(const ExperimentConfig& cfg, const World& world,
                              const std::vector<Sequence>& samples);

/// Samples every seed, writes one trajectory CSV per seed and then
/// manifest.json into cfg.output_dir.
ExperimentManifest run_experiment(const ExperimentConfig& cfg);

struct SweepPoint {
  int reinjections;
  std::optional<int> t0;
  AlphaKind alpha;
  double s_churn;
  ExperimentManifest manifest;
};

/// Grid over the sweep axes; each point is a run in its own subdirectory,
/// followed by sweep.csv and sweep_manifest.json.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg);

struct TrainingRun {
  TrainResult result;
  ExperimentManifest manifest;
};

/// Trains the MLP on the configured world; writes model.trfw,
/// loss_curve.csv and manifest.json.
TrainingRun run_training(const ExperimentConfig& cfg,
                         const TrainCallback& progress = {});

struct EvalResult {
  bool hashes_match = true;
  std::vector<std::string> problems;
  MetricReport metrics;
};

/// Re-reads a finished run: checks output hashes and recomputes metrics.
EvalResult evaluate_run(const std::string& dir);

}  // namespace trflab
