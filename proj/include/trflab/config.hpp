#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "trflab/fusion.hpp"
#include "trflab/schedule.hpp"
#include "trflab/train.hpp"
#include "trflab/worlds.hpp"

namespace trflab {

using Json = nlohmann::json;

/// Invalid configuration; `key_path` is the dotted path of the offending key.
struct ConfigError : std::runtime_error {
  std::string key_path;
  ConfigError(std::string key_path, const std::string& message);
};

/// K arcs between two points (see TrajectoryGmmWorld::arcs).
struct ArcsSpec {
  std::vector<double> start = {0.0, 0.0};
  std::vector<double> end = {4.0, 0.0};
  std::size_t modes = 3;
  double bulge = 2.0;
  std::optional<double> return_bulge;
  std::size_t n_frames = 16;
  double tau = 0.05;
  bool bidirectional = true;
  double eps_pin = 1e-6;

  TrajectoryGmmWorld build() const;
};

struct BlobSpec {
  std::size_t grid = 16;
  double bump_std = 1.5;
  double start_margin = 3.0;
  std::variant<PinnedGpWorld, ArcsSpec> positions;

  MovingBlobWorld build() const;
};

using WorldSpec = std::variant<PinnedGpWorld, ArcsSpec, BlobSpec>;
World build_world(const WorldSpec& spec);

enum class SamplerKind { kForward, kTrf, kBaselineInterp, kBaselineInpaint };
std::string to_string(SamplerKind k);

struct BackendSpec {
  /// Empty means the analytic posterior-mean backend.
  std::string checkpoint;
};

struct TrfSpec {
  int reinjections = 2;
  std::optional<int> t0;
  AlphaKind alpha = AlphaKind::kLinear;
  double lambda = 3.0;
  bool share_initial_noise = true;
  bool share_churn_noise = true;
};

struct TrainSpec {
  TrainConfig train;
  /// Unset means estimate it from the world.
  std::optional<double> sigma_data;
};

/// Grid for `sweep`; an empty axis keeps the base config's value.
struct SweepSpec {
  std::vector<int> reinjections;
  std::vector<int> t0;
  std::vector<AlphaKind> alpha;
  std::vector<double> s_churn;
};

struct ExperimentConfig {
  WorldSpec world = PinnedGpWorld{};
  BackendSpec backend;
  ScheduleParams schedule;
  ChurnParams churn;
  SamplerKind sampler = SamplerKind::kTrf;
  TrfSpec trf;
  /// Condition frames; positions (row, col) for blob worlds.
  std::optional<std::vector<double>> start;
  std::optional<std::vector<double>> end;
  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = "run";
  std::size_t workers = 1;
  bool export_pgm = false;
  TrainSpec train;
  SweepSpec sweep;
};

/// Strict parse: unknown keys and wrong types are rejected with their path.
ExperimentConfig parse_config(const Json& j);
/// Canonical form with every default filled in.
Json to_json(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::string& path);

/// Applies "a.b.c=value" to a raw config document. The value is read as
/// JSON when it parses, otherwise as a string.
void apply_override(Json& raw, const std::string& assignment);

/// "A..B" (inclusive) or a single integer.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

TrfConfig make_trf_config(const ExperimentConfig& cfg, std::size_t n_frames);

}  // namespace trflab
