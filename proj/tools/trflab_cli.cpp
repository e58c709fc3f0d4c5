#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "trflab/config.hpp"
#include "trflab/experiment.hpp"
#include "trflab/io.hpp"

namespace {

using namespace trflab;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string seeds;
  long long seed = -1;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "JSON experiment config");
  cmd->add_option("--set", a.sets, "Override a config key, e.g. --set trf.reinjections=3");
  cmd->add_option("--seed", a.seed, "Single seed");
  cmd->add_option("--seeds", a.seeds, "Inclusive seed range A..B");
  cmd->add_option("--out", a.out, "Output directory");
}

ExperimentConfig resolve(const CommonArgs& a, const std::string& sampler) {
  Json raw = Json::object();
  if (!a.config.empty()) {
    std::ifstream f(a.config);
    if (!f) throw ConfigError("", "cannot open config " + a.config);
    try {
      raw = Json::parse(f);
    } catch (const Json::parse_error& e) {
      throw ConfigError("", a.config + ": " + e.what());
    }
  }
  for (const auto& s : a.sets) apply_override(raw, s);
  if (a.seed >= 0 && !a.seeds.empty()) throw ConfigError("seeds", "use either --seed or --seeds");
  if (a.seed >= 0) raw["seeds"] = Json::array({a.seed});
  if (!a.seeds.empty()) raw["seeds"] = parse_seed_range(a.seeds);
  if (!a.out.empty()) raw["output_dir"] = a.out;
  if (!sampler.empty()) raw["sampler"] = sampler;
  return parse_config(raw);
}

void print_manifest(const ExperimentManifest& m, const std::string& dir) {
  std::cout << "run: " << dir << "\n";
  for (const auto& [name, v] : m.metrics.values()) {
    std::cout << "  " << name << " = " << format_double(v.value) << " (n=" << v.count << ")\n";
  }
  std::cout << "content_hash: " << m.content_hash << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time reversal fusion sampling toolkit"};
  app.require_subcommand(1);

  CommonArgs sample_args, trf_args, baseline_args, train_args, sweep_args;
  auto* sample_cmd = app.add_subcommand("sample", "Forward-only conditional sampling");
  add_common(sample_cmd, sample_args);
  auto* trf_cmd = app.add_subcommand("trf", "Bounded generation by time reversal fusion");
  add_common(trf_cmd, trf_args);
  auto* baseline_cmd = app.add_subcommand("baseline", "Baseline bounded samplers");
  add_common(baseline_cmd, baseline_args);
  std::string baseline_kind = "interp";
  baseline_cmd->add_option("--kind", baseline_kind, "interp or inpaint")
      ->check(CLI::IsMember({"interp", "inpaint"}));
  auto* train_cmd = app.add_subcommand("train", "Train the MLP denoiser on a world");
  add_common(train_cmd, train_args);
  bool quiet = false;
  train_cmd->add_flag("--quiet", quiet, "No progress output");
  auto* eval_cmd = app.add_subcommand("eval", "Verify a finished run and recompute its metrics");
  std::string eval_dir;
  eval_cmd->add_option("run_dir", eval_dir, "Run directory containing manifest.json")->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid over M, t0, alpha and churn");
  add_common(sweep_cmd, sweep_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sample_cmd || *trf_cmd || *baseline_cmd) {
      const auto& args = *sample_cmd ? sample_args : *trf_cmd ? trf_args : baseline_args;
      const std::string sampler = *sample_cmd ? "forward"
                                  : *trf_cmd  ? "trf"
                                              : "baseline-" + baseline_kind;
      const auto cfg = resolve(args, sampler);
      print_manifest(run_experiment(cfg), cfg.output_dir);
    } else if (*train_cmd) {
      const auto cfg = resolve(train_args, "");
      const std::size_t every = std::max<std::size_t>(1, cfg.train.train.steps / 20);
      const auto run = run_training(cfg, [&](std::size_t step, double loss) {
        if (!quiet && (step % every == 0 || step + 1 == cfg.train.train.steps)) {
          std::cerr << "step " << step << " loss " << loss << "\n";
        }
      });
      print_manifest(run.manifest, cfg.output_dir);
    } else if (*eval_cmd) {
      const auto result = evaluate_run(eval_dir);
      for (const auto& [name, v] : result.metrics.values()) {
        std::cout << "  " << name << " = " << format_double(v.value) << " (n=" << v.count << ")\n";
      }
      for (const auto& p : result.problems) std::cerr << "problem: " << p << "\n";
      if (!result.problems.empty()) return kExitRuntime;
      std::cout << "ok: outputs match the manifest\n";
    } else if (*sweep_cmd) {
      const auto cfg = resolve(sweep_args, "trf");
      for (const auto& p : run_sweep(cfg)) {
        const auto& v = p.manifest.metrics.values();
        std::cout << "M=" << p.reinjections << " t0=" << (p.t0 ? std::to_string(*p.t0) : "auto")
                  << " alpha=" << (p.alpha == AlphaKind::kExponential ? "exponential" : "linear")
                  << " s_churn=" << p.s_churn;
        if (v.count("endpoint_error_median")) {
          std::cout << " endpoint_error_median=" << format_double(v.at("endpoint_error_median").value);
        }
        if (v.count("roughness_median")) {
          std::cout << " roughness_median=" << format_double(v.at("roughness_median").value);
        }
        std::cout << "\n";
      }
      std::cout << "sweep written to " << cfg.output_dir << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
