#include "trflab/config.hpp"

#include <fstream>
#include <set>

namespace trflab {

ConfigError::ConfigError(std::string path, const std::string& message)
    : std::runtime_error(path.empty() ? message : path + ": " + message),
      key_path(std::move(path)) {}

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

class Obj {
 public:
  Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    return v.get<double>();
  }

  std::optional<double> optional_number(const std::string& key, std::optional<double> def) {
    if (!has(key)) return def;
    if (j_.at(key).is_null()) return std::nullopt;
    return number(key, 0.0);
  }

  std::int64_t integer(const std::string& key, std::int64_t def) {
    if (!has(key)) return def;
    return as_integer(j_.at(key), path(key));
  }

  std::size_t count(const std::string& key, std::size_t def) {
    const auto v = integer(key, static_cast<std::int64_t>(def));
    if (v < 0) throw ConfigError(path(key), "must be >= 0");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) throw ConfigError(path(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    if (!j_.at(key).is_string()) throw ConfigError(path(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def) {
    if (!has(key)) return def;
    return as_numbers(j_.at(key), path(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(join(path_, key), "unknown key");
    }
  }

  static std::int64_t as_integer(const Json& v, const std::string& p) {
    if (!v.is_number_integer()) throw ConfigError(p, "expected an integer");
    return v.get<std::int64_t>();
  }

  static std::vector<double> as_numbers(const Json& v, const std::string& p) {
    if (!v.is_array()) throw ConfigError(p, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(p + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

AlphaKind parse_alpha(const std::string& s, const std::string& path) {
  if (s == "linear") return AlphaKind::kLinear;
  if (s == "exponential") return AlphaKind::kExponential;
  throw ConfigError(path, "alpha must be \"linear\" or \"exponential\", got \"" + s + "\"");
}

std::string alpha_name(AlphaKind k) { return k == AlphaKind::kExponential ? "exponential" : "linear"; }

SamplerKind parse_sampler(const std::string& s, const std::string& path) {
  if (s == "forward") return SamplerKind::kForward;
  if (s == "trf") return SamplerKind::kTrf;
  if (s == "baseline-interp") return SamplerKind::kBaselineInterp;
  if (s == "baseline-inpaint") return SamplerKind::kBaselineInpaint;
  throw ConfigError(path, "unknown sampler \"" + s +
                              "\" (forward, trf, baseline-interp, baseline-inpaint)");
}

PinnedGpWorld parse_gp(Obj& o) {
  PinnedGpWorld w;
  w.a = o.number("a", w.a);
  w.q = o.number("q", w.q);
  w.dim = o.count("dim", w.dim);
  w.n_frames = o.count("n_frames", w.n_frames);
  w.eps_pin = o.number("eps_pin", w.eps_pin);
  w.start_std = o.number("start_std", w.start_std);
  return w;
}

ArcsSpec parse_arcs(Obj& o) {
  ArcsSpec s;
  s.start = o.numbers("start", s.start);
  s.end = o.numbers("end", s.end);
  s.modes = o.count("modes", s.modes);
  s.bulge = o.number("bulge", s.bulge);
  s.return_bulge = o.optional_number("return_bulge", s.return_bulge);
  s.n_frames = o.count("n_frames", s.n_frames);
  s.tau = o.number("tau", s.tau);
  s.bidirectional = o.boolean("bidirectional", s.bidirectional);
  s.eps_pin = o.number("eps_pin", s.eps_pin);
  return s;
}

WorldSpec parse_world(const Json& j, const std::string& path, bool allow_blob) {
  Obj o(j, path);
  const std::string kind = o.string("kind", "gp");
  WorldSpec out;
  if (kind == "gp") {
    out = parse_gp(o);
  } else if (kind == "gmm") {
    out = parse_arcs(o);
  } else if (kind == "blob" && allow_blob) {
    BlobSpec b;
    b.grid = o.count("grid", b.grid);
    b.bump_std = o.number("bump_std", b.bump_std);
    b.start_margin = o.number("start_margin", b.start_margin);
    if (o.has("positions")) {
      const auto inner = parse_world(o.at("positions"), o.path("positions"), false);
      if (const auto* gp = std::get_if<PinnedGpWorld>(&inner)) {
        b.positions = *gp;
      } else {
        b.positions = std::get<ArcsSpec>(inner);
      }
    } else {
      PinnedGpWorld gp;
      gp.a = 1.0;
      gp.q = 0.3;
      b.positions = gp;
    }
    out = b;
  } else {
    throw ConfigError(o.path("kind"), "unknown world kind \"" + kind + "\"");
  }
  o.finish();
  return out;
}

Json gp_json(const PinnedGpWorld& w) {
  return {{"kind", "gp"}, {"a", w.a}, {"q", w.q}, {"dim", w.dim}, {"n_frames", w.n_frames},
          {"eps_pin", w.eps_pin}, {"start_std", w.start_std}};
}

Json arcs_json(const ArcsSpec& s) {
  return {{"kind", "gmm"},
          {"start", s.start},
          {"end", s.end},
          {"modes", s.modes},
          {"bulge", s.bulge},
          {"return_bulge", s.return_bulge ? Json(*s.return_bulge) : Json(nullptr)},
          {"n_frames", s.n_frames},
          {"tau", s.tau},
          {"bidirectional", s.bidirectional},
          {"eps_pin", s.eps_pin}};
}

Json world_json(const WorldSpec& spec) {
  if (const auto* gp = std::get_if<PinnedGpWorld>(&spec)) return gp_json(*gp);
  if (const auto* arcs = std::get_if<ArcsSpec>(&spec)) return arcs_json(*arcs);
  const auto& b = std::get<BlobSpec>(spec);
  Json positions = std::holds_alternative<PinnedGpWorld>(b.positions)
                       ? gp_json(std::get<PinnedGpWorld>(b.positions))
                       : arcs_json(std::get<ArcsSpec>(b.positions));
  return {{"kind", "blob"}, {"grid", b.grid}, {"bump_std", b.bump_std},
          {"start_margin", b.start_margin}, {"positions", positions}};
}

template <class T, class F>
std::vector<T> parse_list(Obj& o, const std::string& key, F&& item) {
  std::vector<T> out;
  if (!o.has(key)) return out;
  const Json& v = o.at(key);
  if (!v.is_array()) throw ConfigError(o.path(key), "expected an array");
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(item(v[i], o.path(key) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

TrajectoryGmmWorld ArcsSpec::build() const {
  if (start.size() != end.size()) throw ConfigError("world", "start and end differ in dimension");
  return TrajectoryGmmWorld::arcs(Frame(start), Frame(end), modes, bulge, n_frames, tau,
                                  bidirectional, return_bulge);
}

MovingBlobWorld BlobSpec::build() const {
  MovingBlobWorld w;
  w.grid = grid;
  w.bump_std = bump_std;
  w.start_margin = start_margin;
  if (const auto* gp = std::get_if<PinnedGpWorld>(&positions)) {
    w.positions = *gp;
  } else {
    w.positions = std::get<ArcsSpec>(positions).build();
  }
  return w;
}

World build_world(const WorldSpec& spec) {
  try {
    if (const auto* gp = std::get_if<PinnedGpWorld>(&spec)) {
      gp->validate();
      return *gp;
    }
    if (const auto* arcs = std::get_if<ArcsSpec>(&spec)) {
      auto w = arcs->build();
      w.eps_pin = arcs->eps_pin;
      w.validate();
      return w;
    }
    auto w = std::get<BlobSpec>(spec).build();
    if (auto* gw = std::get_if<TrajectoryGmmWorld>(&w.positions)) {
      gw->eps_pin = std::get<ArcsSpec>(std::get<BlobSpec>(spec).positions).eps_pin;
    }
    w.validate();
    return w;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("world", e.what());
  }
}

std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::kForward: return "forward";
    case SamplerKind::kTrf: return "trf";
    case SamplerKind::kBaselineInterp: return "baseline-interp";
    case SamplerKind::kBaselineInpaint: return "baseline-inpaint";
  }
  return "?";
}

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig cfg;
  Obj root(j, "");
  if (root.has("world")) cfg.world = parse_world(root.at("world"), "world", true);
  if (root.has("backend")) {
    Obj o(root.at("backend"), "backend");
    const std::string kind = o.string("kind", "analytic");
    if (kind == "checkpoint") {
      cfg.backend.checkpoint = o.string("path", "");
      if (cfg.backend.checkpoint.empty()) throw ConfigError("backend.path", "checkpoint path required");
    } else if (kind != "analytic") {
      throw ConfigError("backend.kind", "expected \"analytic\" or \"checkpoint\"");
    }
    o.finish();
  }
  if (root.has("schedule")) {
    Obj o(root.at("schedule"), "schedule");
    auto& s = cfg.schedule;
    s.steps = static_cast<int>(o.integer("steps", s.steps));
    s.sigma_min = o.number("sigma_min", s.sigma_min);
    s.sigma_max = o.number("sigma_max", s.sigma_max);
    s.rho = o.number("rho", s.rho);
    o.finish();
  }
  if (root.has("churn")) {
    Obj o(root.at("churn"), "churn");
    auto& c = cfg.churn;
    c.s_churn = o.number("s_churn", c.s_churn);
    c.s_tmin = o.number("s_tmin", c.s_tmin);
    c.s_tmax = o.number("s_tmax", c.s_tmax);
    c.s_noise = o.number("s_noise", c.s_noise);
    o.finish();
  }
  if (root.has("sampler")) {
    const Json& v = root.at("sampler");
    if (!v.is_string()) throw ConfigError("sampler", "expected a string");
    cfg.sampler = parse_sampler(v.get<std::string>(), "sampler");
  }
  if (root.has("trf")) {
    Obj o(root.at("trf"), "trf");
    auto& t = cfg.trf;
    t.reinjections = static_cast<int>(o.integer("reinjections", t.reinjections));
    if (o.has("t0") && !o.at("t0").is_null()) {
      t.t0 = static_cast<int>(Obj::as_integer(o.at("t0"), "trf.t0"));
    }
    t.alpha = parse_alpha(o.string("alpha", alpha_name(t.alpha)), "trf.alpha");
    t.lambda = o.number("lambda", t.lambda);
    t.share_initial_noise = o.boolean("share_initial_noise", t.share_initial_noise);
    t.share_churn_noise = o.boolean("share_churn_noise", t.share_churn_noise);
    o.finish();
  }
  if (root.has("conditions")) {
    Obj o(root.at("conditions"), "conditions");
    if (o.has("start")) cfg.start = Obj::as_numbers(o.at("start"), "conditions.start");
    if (o.has("end")) cfg.end = Obj::as_numbers(o.at("end"), "conditions.end");
    o.finish();
  }
  if (root.has("seeds")) {
    cfg.seeds = parse_list<std::uint64_t>(root, "seeds", [](const Json& v, const std::string& p) {
      const auto s = Obj::as_integer(v, p);
      if (s < 0) throw ConfigError(p, "seeds must be >= 0");
      return static_cast<std::uint64_t>(s);
    });
    if (cfg.seeds.empty()) throw ConfigError("seeds", "at least one seed required");
  }
  cfg.output_dir = root.string("output_dir", cfg.output_dir);
  cfg.workers = root.count("workers", cfg.workers);
  if (cfg.workers == 0) throw ConfigError("workers", "must be >= 1");
  cfg.export_pgm = root.boolean("export_pgm", cfg.export_pgm);
  if (root.has("train")) {
    Obj o(root.at("train"), "train");
    auto& t = cfg.train.train;
    t.steps = o.count("steps", t.steps);
    t.batch_size = o.count("batch_size", t.batch_size);
    t.lr = o.number("lr", t.lr);
    t.seed = static_cast<std::uint64_t>(o.count("seed", t.seed));
    if (o.has("hidden")) {
      t.hidden = parse_list<std::uint32_t>(o, "hidden", [](const Json& v, const std::string& p) {
        const auto w = Obj::as_integer(v, p);
        if (w <= 0) throw ConfigError(p, "hidden widths must be > 0");
        return static_cast<std::uint32_t>(w);
      });
    }
    t.n_fourier = static_cast<std::uint32_t>(o.count("n_fourier", t.n_fourier));
    t.loss.p_mean = o.number("p_mean", t.loss.p_mean);
    t.loss.p_std = o.number("p_std", t.loss.p_std);
    if (o.has("sigma_data")) {
      const Json& v = o.at("sigma_data");
      if (v.is_string() && v.get<std::string>() == "auto") {
        cfg.train.sigma_data.reset();
      } else if (v.is_number()) {
        cfg.train.sigma_data = v.get<double>();
      } else {
        throw ConfigError("train.sigma_data", "expected a number or \"auto\"");
      }
    }
    o.finish();
  }
  if (root.has("sweep")) {
    Obj o(root.at("sweep"), "sweep");
    auto& s = cfg.sweep;
    const auto as_int = [](const Json& v, const std::string& p) {
      return static_cast<int>(Obj::as_integer(v, p));
    };
    s.reinjections = parse_list<int>(o, "reinjections", as_int);
    s.t0 = parse_list<int>(o, "t0", as_int);
    s.alpha = parse_list<AlphaKind>(o, "alpha", [](const Json& v, const std::string& p) {
      if (!v.is_string()) throw ConfigError(p, "expected a string");
      return parse_alpha(v.get<std::string>(), p);
    });
    s.s_churn = parse_list<double>(o, "s_churn", [](const Json& v, const std::string& p) {
      if (!v.is_number()) throw ConfigError(p, "expected a number");
      return v.get<double>();
    });
    o.finish();
  }
  root.finish();

  try {
    cfg.churn.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("churn", e.what());
  }
  if (cfg.schedule.steps < 1) throw ConfigError("schedule.steps", "must be >= 1");
  if (cfg.trf.reinjections < 0) throw ConfigError("trf.reinjections", "must be >= 0");
  try {
    cfg.train.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("train", e.what());
  }
  return cfg;
}

Json to_json(const ExperimentConfig& cfg) {
  Json j;
  j["world"] = world_json(cfg.world);
  j["backend"] = cfg.backend.checkpoint.empty()
                     ? Json{{"kind", "analytic"}}
                     : Json{{"kind", "checkpoint"}, {"path", cfg.backend.checkpoint}};
  j["schedule"] = {{"steps", cfg.schedule.steps}, {"sigma_min", cfg.schedule.sigma_min},
                   {"sigma_max", cfg.schedule.sigma_max}, {"rho", cfg.schedule.rho}};
  j["churn"] = {{"s_churn", cfg.churn.s_churn}, {"s_tmin", cfg.churn.s_tmin},
                {"s_tmax", cfg.churn.s_tmax}, {"s_noise", cfg.churn.s_noise}};
  j["sampler"] = to_string(cfg.sampler);
  j["trf"] = {{"reinjections", cfg.trf.reinjections},
              {"t0", cfg.trf.t0 ? Json(*cfg.trf.t0) : Json(nullptr)},
              {"alpha", alpha_name(cfg.trf.alpha)},
              {"lambda", cfg.trf.lambda},
              {"share_initial_noise", cfg.trf.share_initial_noise},
              {"share_churn_noise", cfg.trf.share_churn_noise}};
  Json cond = Json::object();
  if (cfg.start) cond["start"] = *cfg.start;
  if (cfg.end) cond["end"] = *cfg.end;
  j["conditions"] = cond;
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  j["workers"] = cfg.workers;
  j["export_pgm"] = cfg.export_pgm;
  const auto& t = cfg.train.train;
  j["train"] = {{"steps", t.steps},
                {"batch_size", t.batch_size},
                {"lr", t.lr},
                {"seed", t.seed},
                {"hidden", t.hidden},
                {"n_fourier", t.n_fourier},
                {"p_mean", t.loss.p_mean},
                {"p_std", t.loss.p_std},
                {"sigma_data", cfg.train.sigma_data ? Json(*cfg.train.sigma_data) : Json("auto")}};
  Json alphas = Json::array();
  for (auto a : cfg.sweep.alpha) alphas.push_back(alpha_name(a));
  j["sweep"] = {{"reinjections", cfg.sweep.reinjections},
                {"t0", cfg.sweep.t0},
                {"alpha", alphas},
                {"s_churn", cfg.sweep.s_churn}};
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("", "cannot open config " + path);
  Json raw;
  try {
    raw = Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", path + ": " + e.what());
  }
  return parse_config(raw);
}

void apply_override(Json& raw, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  if (!raw.is_object()) raw = Json::object();
  Json* node = &raw;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError(key, "empty key segment");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    Json& next = (*node)[part];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) throw ConfigError(key.substr(0, dot), "is not an object");
    node = &next;
    pos = dot + 1;
  }
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  const auto parse_one = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("seeds", "bad seed \"" + s + "\" in \"" + text + "\"");
    }
    return static_cast<std::uint64_t>(std::stoull(s));
  };
  const auto sep = text.find("..");
  if (sep == std::string::npos) return {parse_one(text)};
  const auto lo = parse_one(text.substr(0, sep));
  const auto hi = parse_one(text.substr(sep + 2));
  if (hi < lo) throw ConfigError("seeds", "empty range \"" + text + "\"");
  std::vector<std::uint64_t> out;
  for (auto s = lo; s <= hi; ++s) out.push_back(s);
  return out;
}

TrfConfig make_trf_config(const ExperimentConfig& cfg, std::size_t n_frames) {
  TrfConfig t;
  t.reinjections = cfg.trf.reinjections;
  t.t0 = cfg.trf.t0;
  t.alpha = alpha_weights(cfg.trf.alpha, n_frames, cfg.trf.lambda);
  t.share_initial_noise = cfg.trf.share_initial_noise;
  t.share_churn_noise = cfg.trf.share_churn_noise;
  t.churn = cfg.churn;
  try {
    t.validate(n_frames, cfg.schedule.steps);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("trf", e.what());
  }
  return t;
}

}  // namespace trflab
