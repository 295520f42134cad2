#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "fcausal/benchmark.hpp"
#include "fcausal/error.hpp"
#include "fcausal/estimators.hpp"
#include "fcausal/log.hpp"
#include "fcausal/panel_io.hpp"
#include "fcausal/parallel.hpp"
#include "fcausal/sim.hpp"
#include "result_io.hpp"

namespace fcausal::cli {

namespace fs = std::filesystem;

namespace {

// Flags that mirror config-file keys. After parsing, explicitly given flags
// are written over the file values.
class FlagSet {
 public:
  explicit FlagSet(CLI::App* app) : app_(app) {}

  template <class T>
  void add(const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option("--" + key, *value, help);
    entries_.push_back({key, opt, [value] { return Json(*value); }});
  }

  void add_flag(const std::string& key, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app_->add_flag("--" + key, *value, help);
    entries_.push_back({key, opt, [value] { return Json(*value); }});
  }

  void overlay(Json& config) const {
    for (const auto& e : entries_)
      if (e.opt->count() > 0) config[e.key] = e.value();
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<Json()> value;
  };
  CLI::App* app_;
  std::vector<Entry> entries_;
};

void add_shared(FlagSet& flags) {
  flags.add<std::uint64_t>("seed", "random seed (default 0)");
  flags.add<int>("threads", "worker threads; 0 = available parallelism, 1 = serial");
  flags.add<std::string>("out", "output directory");
}

void add_estimator_flags(FlagSet& flags) {
  flags.add<std::string>("method", "single-dml|multi-dml|stacked-dml|dml-nuc|fc|fc+dml|ife|ife+dml");
  flags.add<int>("rank", "number of latent factors M");
  flags.add<std::string>("neighbors", "none | knn:K | file:PATH");
  flags.add<std::string>("learner", "linear | ridge:LAMBDA | spline:DF");
  flags.add<int>("folds", "cross-fitting folds");
  flags.add<int>("bootstrap", "bootstrap resamples (0 disables)");
  flags.add<int>("n-init", "random Procrustes initializations");
  flags.add<std::string>("orientation", "time (units are modeled) | space (times are modeled)");
  flags.add<std::string>("noise", "diagonal | isotropic uniquenesses");
  flags.add<std::vector<double>>("shifts", "exposure shifts for ATE summaries");
  flags.add_flag("heterogeneous", "fit per-unit dose-response curves");
}

Json defaults_for(const std::string& command) {
  Json j;
  j["seed"] = 0;
  j["threads"] = 0;
  j["out"] = ".";
  if (command == "fit") {
    j["in"] = "";
    j["method"] = "fc";
    j["rank"] = 3;
    j["neighbors"] = "none";
    j["learner"] = "spline:5";
    j["folds"] = 5;
    j["bootstrap"] = 0;
    j["n-init"] = 20;
    j["orientation"] = "time";
    j["noise"] = "diagonal";
    j["shifts"] = std::vector<double>{1.0};
    j["heterogeneous"] = false;
  } else if (command == "simulate") {
    j["scenario"] = "linear-fixed";
  } else if (command == "benchmark") {
    j["scenario"] = "linear-fixed";
    j["estimators"] = "fc3,ife6,stacked-dml";
    j["reps"] = 100;
    j["learner"] = "spline:5";
    j["folds"] = 5;
    j["n-init"] = 20;
    j["raw"] = false;
  } else if (command == "rank") {
    j["in"] = "";
    j["method"] = "eigenratio";
    j["max-rank"] = 10;
    j["learner"] = "spline:5";
    j["orientation"] = "time";
  }
  return j;
}

Json effective_config(const std::string& command, const std::string& config_path, const FlagSet& flags) {
  Json cfg = defaults_for(command);
  if (!config_path.empty()) {
    const Json file = read_json_file(config_path);
    if (!file.is_object()) throw Error(ErrorKind::InvalidArgument, "config file must hold a JSON object");
    for (const auto& [k, v] : file.items()) cfg[k] = v;
  }
  flags.overlay(cfg);
  return cfg;
}

Orientation orientation_of(const Json& cfg) {
  return orientation_from_string(cfg.value("orientation", std::string("time")));
}

NeighborhoodSpec neighbors_of(const std::string& spec, const PanelData& panel) {
  if (spec.empty() || spec == "none") return {};
  if (spec.rfind("knn:", 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(spec.substr(4));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad neighbor spec '" + spec + "'");
    }
    return knn_neighborhoods(panel.row_features(), k);
  }
  if (spec.rfind("file:", 0) == 0) {
    if (panel.orientation() != Orientation::ReplicateOverTime) {
      throw Error(ErrorKind::InvalidArgument, "neighbor files list units; use orientation time");
    }
    return load_neighbors(spec.substr(5), panel.unit_ids());
  }
  throw Error(ErrorKind::InvalidArgument, "bad neighbor spec '" + spec + "' (none, knn:K or file:PATH)");
}

EstimatorConfig estimator_config_of(const Json& cfg) {
  EstimatorConfig ec;
  if (cfg.contains("method")) ec.method = method_from_string(cfg["method"].get<std::string>());
  if (cfg.contains("rank")) ec.rank = cfg["rank"].get<int>();
  if (cfg.contains("learner")) ec.learner = learner_from_string(cfg["learner"].get<std::string>());
  if (cfg.contains("folds")) ec.folds = cfg["folds"].get<int>();
  if (cfg.contains("bootstrap")) ec.bootstrap_reps = cfg["bootstrap"].get<int>();
  if (cfg.contains("n-init")) ec.n_init = cfg["n-init"].get<int>();
  if (cfg.contains("noise")) {
    const auto n = cfg["noise"].get<std::string>();
    if (n == "diagonal") ec.noise = NoiseMode::Diagonal;
    else if (n == "isotropic") ec.noise = NoiseMode::Isotropic;
    else throw Error(ErrorKind::InvalidArgument, "noise must be diagonal or isotropic");
  }
  if (cfg.contains("shifts")) ec.shifts = cfg["shifts"].get<std::vector<double>>();
  if (cfg.contains("heterogeneous")) ec.heterogeneous = cfg["heterogeneous"].get<bool>();
  ec.seed = cfg.value("seed", std::uint64_t{0});
  ec.threads = cfg.value("threads", 0);
  if (ec.threads <= 0) ec.threads = default_thread_count();
  return ec;
}

PanelData load_input(const Json& cfg) {
  const std::string in = cfg.value("in", std::string());
  if (in.empty()) throw Error(ErrorKind::InvalidArgument, "--in (panel directory) is required");
  if (!fs::is_directory(in)) throw Error(ErrorKind::Io, "input directory " + in + " does not exist");
  return orient(load_panel_dir(in), orientation_of(cfg));
}

// The echoed config omits run-environment keys that do not change results.
Json echo_config(const Json& cfg) {
  Json out = cfg;
  out.erase("threads");
  return out;
}

void announce(const std::string& command, const Json& cfg) {
  log(LogLevel::Info, command + " seed=" + std::to_string(cfg.value("seed", std::uint64_t{0})) +
                          " config=" + cfg.dump());
}

fs::path out_dir(const Json& cfg) {
  fs::path dir = cfg.value("out", std::string("."));
  fs::create_directories(dir);
  return dir;
}

int run_fit(const Json& cfg) {
  announce("fit", cfg);
  const PanelData panel = load_input(cfg);
  EstimatorConfig ec = estimator_config_of(cfg);
  ec.neighborhoods = neighbors_of(cfg.value("neighbors", std::string("none")), panel);
  const EffectEstimate est = estimate(panel, ec);

  const fs::path dir = out_dir(cfg);
  Json body;
  body["command"] = "fit";
  body["config"] = echo_config(cfg);
  body["panel"] = Json{{"rows", panel.rows()},
                       {"replicates", panel.replicates()},
                       {"covariates", panel.num_covariates()},
                       {"orientation", to_string(panel.orientation())}};
  body["estimate"] = to_json(est);
  write_document(dir / "estimate.json", body);
  write_curve_csv(dir / "curve.csv", est);

  std::cout << to_string(est.method);
  for (std::size_t k = 0; k < est.coef_names.size(); ++k) {
    std::cout << "  " << est.coef_names[k] << " = " << est.beta(static_cast<Eigen::Index>(k));
    auto it = est.intervals.find(est.coef_names[k]);
    if (it != est.intervals.end()) std::cout << " [" << it->second.lo << ", " << it->second.hi << "]";
  }
  std::cout << "  acd = " << est.acd() << "\n";
  return 0;
}

int run_simulate(const Json& cfg) {
  announce("simulate", cfg);
  const SimScenario sc = scenario_from_json(cfg["scenario"], SimScenario{});
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
  const SimDraw draw = generate(sc, seed);
  const fs::path dir = out_dir(cfg);
  write_panel_dir(dir, draw.panel);
  if (!draw.neighborhoods.trivial()) write_neighbors(dir / "neighbors.csv", draw.neighborhoods, draw.panel.unit_ids());
  Json body;
  body["command"] = "simulate";
  body["config"] = echo_config(cfg);
  body["seed"] = seed;
  body["scenario"] = to_json(sc);
  body["truth"] = to_json(draw.truth);
  write_document(dir / "truth.json", body);
  std::cout << "wrote " << sc.name() << " panel (" << draw.panel.num_units() << " units x " << draw.panel.num_times()
            << " times) to " << dir.string() << "\n";
  return 0;
}

std::vector<std::string> split_list(const Json& j) {
  if (j.is_array()) return j.get<std::vector<std::string>>();
  std::vector<std::string> out;
  std::stringstream ss(j.get<std::string>());
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int run_benchmark_cmd(const Json& cfg) {
  announce("benchmark", cfg);
  std::vector<SimScenario> scenarios;
  if (cfg["scenario"].is_object()) {
    scenarios.push_back(scenario_from_json(cfg["scenario"], SimScenario{}));
  } else {
    for (const auto& name : split_list(cfg["scenario"])) scenarios.push_back(scenario_from_name(name));
  }
  const EstimatorConfig base = estimator_config_of(cfg);
  std::vector<EstimatorSpec> specs;
  for (const auto& label : split_list(cfg["estimators"])) specs.push_back(estimator_from_label(label, base));
  const int reps = cfg.value("reps", 100);
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
  const BenchmarkResult result = run_benchmark(scenarios, specs, reps, seed, base.threads);

  const fs::path dir = out_dir(cfg);
  {
    std::ofstream out(dir / "benchmark.csv");
    if (!out) throw Error(ErrorKind::Io, "cannot write benchmark.csv");
    write_benchmark_csv(out, result);
  }
  {
    std::ofstream out(dir / "benchmark.txt");
    write_benchmark_table(out, result);
  }
  if (cfg.value("raw", false)) {
    std::ofstream out(dir / "raw.csv");
    write_benchmark_raw(out, result);
  }
  Json body;
  body["command"] = "benchmark";
  body["config"] = echo_config(cfg);
  Json sj = Json::array();
  for (const auto& sc : scenarios) sj.push_back(to_json(sc));
  body["scenarios"] = sj;
  write_document(dir / "benchmark.json", body);
  // Wall-clock timings vary between identical runs, so they live apart from
  // the reproducible documents.
  Json timing = Json::array();
  for (const auto& r : result.rows) {
    timing.push_back({{"scenario", r.scenario}, {"estimator", r.estimator}, {"coefficient", r.coefficient},
                      {"runtime_s", r.runtime_s}});
  }
  write_document(dir / "timing.json", Json{{"rows", timing}});
  write_benchmark_table(std::cout, result);
  return 0;
}

int run_rank(const Json& cfg) {
  announce("rank", cfg);
  const PanelData panel = load_input(cfg);
  const RankMethod method = rank_method_from_string(cfg.value("method", std::string("eigenratio")));
  const int max_rank = cfg.value("max-rank", 10);
  const LearnerSpec learner = learner_from_string(cfg.value("learner", std::string("spline:5")));
  const Matrix resid = partial_out_covariates(panel, panel.exposures(), learner);
  const RankSelection sel =
      select_rank(resid.transpose(), method, max_rank, cfg.value("seed", std::uint64_t{0}));
  Json body;
  body["command"] = "rank";
  body["config"] = echo_config(cfg);
  body["selection"] = to_json(sel);
  write_document(out_dir(cfg) / "rank.json", body);
  std::cout << "selected rank " << sel.rank << " (" << to_string(method) << ")\n";
  return 0;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"Causal effect estimation from panel data under factor confounding", "fcausal"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  struct Command {
    CLI::App* app;
    std::unique_ptr<FlagSet> flags;
    std::string config_path;
    std::function<int(const Json&)> run;
  };
  std::vector<Command> commands;
  auto make = [&](const std::string& name, const std::string& desc, std::function<int(const Json&)> run) -> Command& {
    Command c;
    c.app = app.add_subcommand(name, desc);
    c.flags = std::make_unique<FlagSet>(c.app);
    c.run = std::move(run);
    commands.push_back(std::move(c));
    Command& ref = commands.back();
    add_shared(*ref.flags);
    return ref;
  };
  commands.reserve(4);

  Command& fit = make("fit", "fit an estimator on a panel directory", run_fit);
  fit.flags->add<std::string>("in", "panel directory (exposure.csv, outcome.csv, covariates.csv, coords.csv)");
  add_estimator_flags(*fit.flags);

  Command& sim = make("simulate", "generate a simulated panel with known truth", run_simulate);
  sim.flags->add<std::string>("scenario", "linear-fixed | linear-spatiotemporal | ife-grid | interference | "
                                          "nonlinear-hetero | misspec-<dist>");

  Command& bench = make("benchmark", "Monte-Carlo comparison of estimators", run_benchmark_cmd);
  bench.flags->add<std::string>("scenario", "comma-separated scenario names");
  bench.flags->add<std::string>("estimators", "comma-separated labels, e.g. fc3,ife6,stacked-dml,oracle");
  bench.flags->add<int>("reps", "replications per scenario");
  bench.flags->add<std::string>("learner", "linear | ridge:LAMBDA | spline:DF");
  bench.flags->add<int>("folds", "cross-fitting folds");
  bench.flags->add<int>("n-init", "random Procrustes initializations");
  bench.flags->add_flag("raw", "also write per-rep estimates to raw.csv");

  Command& rank = make("rank", "select the number of latent factors", run_rank);
  rank.flags->add<std::string>("in", "panel directory");
  rank.flags->add<std::string>("method", "eigenratio | ic | parallel");
  rank.flags->add<int>("max-rank", "largest candidate rank");
  rank.flags->add<std::string>("learner", "learner used to partial out covariates");
  rank.flags->add<std::string>("orientation", "time | space");

  for (auto& c : commands) c.app->add_option("--config", c.config_path, "JSON config file; flags override its keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      const Json cfg = effective_config(c.app->get_name(), c.config_path, *c.flags);
      return c.run(cfg);
    } catch (const Error& e) {
      log(LogLevel::Error, e.what());
      return is_numerical(e.kind()) ? 2 : 1;
    } catch (const nlohmann::json::exception& e) {
      log(LogLevel::Error, std::string("config: ") + e.what());
      return 1;
    } catch (const std::exception& e) {
      log(LogLevel::Error, e.what());
      return 1;
    }
  }
  return 1;
}

}  // namespace fcausal::cli
