#include "lowrank_harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lowrank_harness/presets.hpp"

namespace lowrank::harness {
namespace {

using nlohmann::json;

[[noreturn]] void usage(const std::string& message) { throw UsageError(message); }

void require_known_keys(const json& object, const std::set<std::string>& allowed,
                        const char* where) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) {
      usage(std::string("unknown ") + where + " key: \"" + key + "\"");
    }
  }
}

double get_number(const json& object, const char* key) {
  const json& v = object.at(key);
  if (!v.is_number()) {
    usage(std::string("config key \"") + key + "\" must be a number");
  }
  return v.get<double>();
}

int get_int(const json& object, const char* key) {
  const json& v = object.at(key);
  if (!v.is_number_integer()) {
    usage(std::string("config key \"") + key + "\" must be an integer");
  }
  return v.get<int>();
}

std::string get_string(const json& object, const char* key) {
  const json& v = object.at(key);
  if (!v.is_string()) {
    usage(std::string("config key \"") + key + "\" must be a string");
  }
  return v.get<std::string>();
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "apgd") return Algorithm::Apgd;
  if (name == "gd") return Algorithm::Gd;
  if (name == "scaledgd") return Algorithm::ScaledGd;
  if (name == "scaledgd_lambda") return Algorithm::ScaledGdLambda;
  if (name == "precgd") return Algorithm::PrecGd;
  if (name == "noisyprecgd") return Algorithm::NoisyPrecGd;
  usage("unknown algorithm: \"" + name +
        "\" (expected apgd, gd, scaledgd, scaledgd_lambda, precgd, or noisyprecgd)");
}

InitKind parse_init(const std::string& name) {
  if (name == "spectral") return InitKind::Spectral;
  if (name == "random_gaussian") return InitKind::RandomGaussian;
  if (name == "small_random") return InitKind::SmallRandom;
  usage("unknown init: \"" + name +
        "\" (expected spectral, random_gaussian, or small_random)");
}

NamedSolver parse_solver(const json& object) {
  if (!object.is_object()) {
    usage("each \"solvers\" entry must be an object");
  }
  static const std::set<std::string> kKeys = {
      "name", "algorithm", "eta",        "lambda0",   "beta",
      "prec_c_lambda", "max_iters", "init", "init_scale", "stop_tol"};
  require_known_keys(object, kKeys, "solver");
  if (!object.contains("algorithm")) {
    usage("every solver entry needs an \"algorithm\" key");
  }
  NamedSolver solver;
  solver.run.algorithm = parse_algorithm(get_string(object, "algorithm"));
  solver.name = object.contains("name") ? get_string(object, "name")
                                        : algorithm_name(solver.run.algorithm);
  if (object.contains("eta")) solver.run.eta = get_number(object, "eta");
  if (object.contains("lambda0")) solver.run.lambda0 = get_number(object, "lambda0");
  if (object.contains("beta")) solver.run.beta = get_number(object, "beta");
  if (object.contains("prec_c_lambda")) {
    solver.run.prec_c_lambda = get_number(object, "prec_c_lambda");
  }
  if (object.contains("max_iters")) solver.run.max_iters = get_int(object, "max_iters");
  if (object.contains("init")) solver.run.init = parse_init(get_string(object, "init"));
  if (object.contains("init_scale")) solver.run.init_scale = get_number(object, "init_scale");
  if (object.contains("stop_tol")) solver.run.stop_tol = get_number(object, "stop_tol");
  return solver;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (item.empty()) {
      usage("empty entry in seed list \"" + text + "\"");
    }
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) {
        throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      usage("bad seed \"" + item + "\" in seed list");
    }
  }
  if (seeds.empty()) {
    usage("seed list is empty");
  }
  return seeds;
}

}  // namespace

const char* preset_name(Preset preset) {
  switch (preset) {
    case Preset::Fig1: return "fig1";
    case Preset::Fig2: return "fig2";
    case Preset::Fig3: return "fig3";
    case Preset::Fig4: return "fig4";
    case Preset::Fig5: return "fig5";
    case Preset::Fig6: return "fig6";
    case Preset::Fig78: return "fig78";
    case Preset::Custom: return "custom";
  }
  return "custom";
}

Preset parse_preset(const std::string& name) {
  for (Preset p : {Preset::Fig1, Preset::Fig2, Preset::Fig3, Preset::Fig4, Preset::Fig5,
                   Preset::Fig6, Preset::Fig78, Preset::Custom}) {
    if (name == preset_name(p)) {
      return p;
    }
  }
  usage("unknown preset: \"" + name +
        "\" (expected fig1, fig2, fig3, fig4, fig5, fig6, fig78, or custom)");
}

const char* problem_kind_name(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Sensing: return "sensing";
    case ProblemKind::Wpca: return "wpca";
    case ProblemKind::OneBit: return "onebit";
    case ProblemKind::Completion: return "completion";
  }
  return "sensing";
}

ProblemKind parse_problem_kind(const std::string& name) {
  for (ProblemKind k : {ProblemKind::Sensing, ProblemKind::Wpca, ProblemKind::OneBit,
                        ProblemKind::Completion}) {
    if (name == problem_kind_name(k)) {
      return k;
    }
  }
  usage("unknown problem kind: \"" + name +
        "\" (expected sensing, wpca, onebit, or completion)");
}

const char* algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Apgd: return "apgd";
    case Algorithm::Gd: return "gd";
    case Algorithm::ScaledGd: return "scaledgd";
    case Algorithm::ScaledGdLambda: return "scaledgd_lambda";
    case Algorithm::PrecGd: return "precgd";
    case Algorithm::NoisyPrecGd: return "noisyprecgd";
  }
  return "apgd";
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    usage(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) {
    usage("config root must be a JSON object");
  }
  static const std::set<std::string> kKeys = {
      "preset", "problem", "n1",     "n2",          "r_star",  "r",
      "kappa",  "m",       "nu",     "p",           "weight_ratio", "solvers",
      "seeds",  "out_dir", "image_path", "snr_db"};
  require_known_keys(root, kKeys, "config");

  ExperimentConfig cfg;
  if (root.contains("preset")) {
    cfg = preset_defaults(parse_preset(get_string(root, "preset")));
  }
  if (root.contains("problem")) {
    cfg.kind = parse_problem_kind(get_string(root, "problem"));
  }
  if (root.contains("n1")) cfg.n1 = get_int(root, "n1");
  if (root.contains("n2")) cfg.n2 = get_int(root, "n2");
  if (root.contains("r_star")) cfg.r_star = get_int(root, "r_star");
  if (root.contains("r")) cfg.r = get_int(root, "r");
  if (root.contains("kappa")) cfg.kappa = get_number(root, "kappa");
  if (root.contains("m")) cfg.m = get_int(root, "m");
  if (root.contains("nu")) cfg.nu = get_number(root, "nu");
  if (root.contains("p")) cfg.p = get_number(root, "p");
  if (root.contains("weight_ratio")) cfg.weight_ratio = get_number(root, "weight_ratio");
  if (root.contains("out_dir")) cfg.out_dir = get_string(root, "out_dir");
  if (root.contains("image_path")) cfg.image_path = get_string(root, "image_path");
  if (root.contains("snr_db")) cfg.snr_db = get_number(root, "snr_db");
  if (root.contains("solvers")) {
    const json& list = root.at("solvers");
    if (!list.is_array()) {
      usage("config key \"solvers\" must be an array");
    }
    cfg.solvers.clear();
    for (const json& entry : list) {
      cfg.solvers.push_back(parse_solver(entry));
    }
  }
  if (root.contains("seeds")) {
    const json& list = root.at("seeds");
    if (!list.is_array()) {
      usage("config key \"seeds\" must be an array");
    }
    cfg.seeds.clear();
    for (const json& entry : list) {
      if (!entry.is_number_integer()) {
        usage("every seed must be an integer");
      }
      cfg.seeds.push_back(entry.get<std::uint64_t>());
    }
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    usage("cannot read config file: " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.n1) cfg.n1 = *o.n1;
  if (o.n2) cfg.n2 = *o.n2;
  if (o.r_star) cfg.r_star = *o.r_star;
  if (o.r) cfg.r = *o.r;
  if (o.m) cfg.m = *o.m;
  if (o.kappa) cfg.kappa = *o.kappa;
  if (o.nu) cfg.nu = *o.nu;
  if (o.p) cfg.p = *o.p;
  if (o.weight_ratio) cfg.weight_ratio = *o.weight_ratio;
  if (o.snr_db) cfg.snr_db = *o.snr_db;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.image_path) cfg.image_path = *o.image_path;
  if (o.problem) cfg.kind = parse_problem_kind(*o.problem);
  if (o.seeds) cfg.seeds = parse_seed_list(*o.seeds);
  validate_config(cfg);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.n1 < 2 || cfg.n2 < 2) {
    usage("n1 and n2 must be at least 2");
  }
  if (cfg.r_star < 1) {
    usage("r_star must be at least 1");
  }
  if (cfg.r < cfg.r_star || cfg.r > std::min(cfg.n1, cfg.n2)) {
    usage("ranks must satisfy r_star <= r <= min(n1, n2)");
  }
  if (cfg.kappa < 1.0) {
    usage("kappa must be at least 1");
  }
  if (cfg.nu < 0.0) {
    usage("nu must be nonnegative");
  }
  const int n_max = std::max(cfg.n1, cfg.n2);
  if (cfg.kind == ProblemKind::Sensing) {
    // Desk-scale caps: the dense measurement set is the memory/time hot spot.
    if (n_max > 64) {
      usage("sensing dimensions are capped at 64");
    }
    if (cfg.m < 1) {
      usage("m must be at least 1");
    }
    if (cfg.m > 20 * n_max * cfg.r) {
      usage("m is capped at 20 * n * r for sensing runs");
    }
  } else {
    if (n_max > 1024) {
      usage("dimensions are capped at 1024 for this problem kind");
    }
  }
  if (cfg.kind == ProblemKind::Completion && !(cfg.p > 0.0 && cfg.p <= 1.0)) {
    usage("sampling rate p must lie in (0, 1]");
  }
  if (cfg.kind == ProblemKind::Wpca && cfg.weight_ratio < 1.0) {
    usage("weight_ratio must be at least 1");
  }
}

void validate_for_run(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.solvers.empty()) {
    usage("no solvers configured");
  }
  std::set<std::string> names;
  for (const NamedSolver& solver : cfg.solvers) {
    if (solver.name.empty()) {
      usage("solver names must be nonempty");
    }
    if (!names.insert(solver.name).second) {
      usage("duplicate solver name: \"" + solver.name + "\"");
    }
  }
  if (cfg.seeds.empty()) {
    usage("no seeds configured");
  }
  if (cfg.out_dir.empty()) {
    usage("no output directory configured (out_dir or --out)");
  }
}

}  // namespace lowrank::harness
