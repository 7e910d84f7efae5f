#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "nlaid/config.hpp"
#include "nlaid/csv.hpp"
#include "nlaid/errors.hpp"
#include "nlaid/harness.hpp"
#include "nlaid/report.hpp"
#include "nlaid/snapshot.hpp"

namespace nlaid::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::string model;
  std::vector<std::string> sets;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  bool verbose = false;
};

void setup_logging(const Options& o) {
  auto logger = std::make_shared<spdlog::logger>("netlasso_aid", std::make_shared<spdlog::sinks::stderr_color_sink_st>());
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(o.quiet ? spdlog::level::warn : o.verbose ? spdlog::level::debug : spdlog::level::info);
}

int workers_from_env() {
  const char* raw = std::getenv("NETLASSO_AID_WORKERS");
  if (raw == nullptr || *raw == '\0') return -1;
  try {
    std::size_t used = 0;
    const int n = std::stoi(raw, &used);
    if (used == std::string(raw).size() && n >= 0) return n;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string("NETLASSO_AID_WORKERS must be a non-negative integer, got '") + raw + "'");
}

ExperimentConfig resolve_config(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? default_experiment_config() : load_config(o.config);
  std::vector<Override> overrides;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  cfg = apply_overrides(cfg, overrides);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) {
    cfg.workers = *o.workers;
  } else if (const int env = workers_from_env(); env >= 0) {
    cfg.workers = env;
  }
  cfg.validate();
  spdlog::debug("seed {}, {} run(s), {} worker(s)", cfg.seed, cfg.runs, cfg.effective_workers());
  return cfg;
}

fs::path output_dir(const Options& o) {
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

// Single-shot stages work on the data of run 0, which is what the experiment
// subcommands see first.
PreparedData first_run(const ExperimentConfig& cfg) { return prepare_data(cfg, derive_seed(cfg.seed, 0)); }

SolverConfig solver_config(const ExperimentConfig& cfg) {
  SolverConfig s = cfg.solver;
  s.seed = cfg.seed;
  s.workers = cfg.effective_workers();
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

int cmd_generate(const Options& o) {
  const auto cfg = resolve_config(o);
  if (cfg.data.source != DataSourceKind::synthetic) {
    throw ConfigError("generate needs data.source = synthetic");
  }
  const auto synth = generate_synthetic(cfg.generator_for(derive_seed(cfg.seed, 0)));
  const auto dir = output_dir(o);
  write_csv((dir / "series.csv").string(), (dir / "incidents.csv").string(), synth.series, synth.incidents);
  write_profiles_csv((dir / "profiles.csv").string(), synth.profiles);
  write_adjacency_csv((dir / "adjacency.csv").string(), synth.adjacency);
  std::string planted = "node_id,cluster\n";
  for (std::size_t i = 0; i < synth.series.size(); ++i) {
    planted += std::to_string(synth.series[i].node_id) + "," + std::to_string(synth.cluster_of_node[i]) + "\n";
  }
  write_text(dir / "planted.csv", planted);
  std::cout << synth.series.size() << " nodes, " << synth.incidents.size() << " incidents -> " << dir.string()
            << "\n";
  return ok;
}

int cmd_graph(const Options& o) {
  const auto cfg = resolve_config(o);
  const auto data = first_run(cfg);
  const auto graph = build_graph(data, cfg.graph_variant, cfg.graph);
  const auto dir = output_dir(o);
  write_edges_csv((dir / "edges.csv").string(), graph);
  std::cout << to_string(cfg.graph_variant) << " graph: " << graph.nodes.size() << " nodes, " << graph.edges.size()
            << " edges (" << graph.count(EdgeOrigin::road) << " road, " << graph.count(EdgeOrigin::geo) << " geo)\n";
  return ok;
}

int cmd_train(const Options& o) {
  const auto cfg = resolve_config(o);
  const auto data = first_run(cfg);
  const auto graph = build_graph(data, cfg.graph_variant, cfg.graph);
  const auto problem = make_problem(data, graph, cfg.nu);
  const auto solution = admm_solve(problem, solver_config(cfg));
  const auto dir = output_dir(o);
  save_snapshot((dir / "model.snapshot").string(), Snapshot::from_solution(problem, solution));

  // No wall clock here so reruns give identical files.
  std::string trace = "iteration,primal_residual,dual_residual,objective\n";
  for (const auto& r : solution.trace.records) {
    trace += std::to_string(r.iteration) + "," + format_real(r.primal_residual) + "," + format_real(r.dual_residual) +
             "," + format_real(r.objective) + "\n";
  }
  write_text(dir / "trace.csv", trace);

  const auto& last = solution.trace.records.back();
  if (solution.trace.termination != Termination::converged) {
    spdlog::warn("ADMM stopped at max_iter ({}) with residuals {:.3g} / {:.3g}", cfg.solver.max_iter,
                 last.primal_residual, last.dual_residual);
  }
  const auto clusters = cluster_assignments(solution.models, cfg.search.cluster_tol);
  std::cout << fmt::format("lambda {}, nu {}: {} after {} iterations, objective {:.6g}, {} cluster(s)\n",
                           cfg.solver.lambda, cfg.nu, to_string(solution.trace.termination),
                           solution.trace.iterations(), last.objective, clusters.count);
  return ok;
}

int cmd_detect(const Options& o) {
  const auto cfg = resolve_config(o);
  const auto snap = load_snapshot(o.model);
  ModelSet models;
  for (const auto& n : snap.nodes) models.emplace(n.id, n.params);
  const auto data = first_run(cfg);
  const auto scored = calibrate_and_evaluate(data, models, cfg);

  const auto dir = output_dir(o);
  std::string csv = "node_id,end_index,score,flag,label\n";
  auto label = data.splits.test.windows.begin();
  for (const auto& series : scored.test_predictions) {
    for (const auto& p : series.windows) {
      csv += std::to_string(series.node_id) + "," + std::to_string(p.end_index) + "," + format_real(p.score) + "," +
             (p.flag ? "1" : "0") + "," + to_string((label++)->label) + "\n";
    }
  }
  write_text(dir / "predictions.csv", csv);

  RunReport report;
  report.experiment = "detect";
  report.runs = 1;
  report.workers = cfg.effective_workers();
  report.timestep_minutes = cfg.data.timestep_minutes;
  report.metrics.push_back({0, "snapshot", scored.test.report});
  for (const auto& [node, acc] : scored.test.node_accuracy) report.node_accuracy.push_back({0, "snapshot", node, acc});
  emit_report(report, dir.string());
  std::cout << fmt::format("threshold {:.6g}\n", scored.threshold) << summary_text(report);
  return ok;
}

int cmd_experiment(const Options& o, RunReport (*experiment)(const ExperimentConfig&, const Progress&)) {
  const auto cfg = resolve_config(o);
  const auto dir = output_dir(o);
  const auto report = experiment(cfg, [](const std::string& msg) { spdlog::info("{}", msg); });
  emit_report(report, dir.string());
  std::cout << summary_text(report);
  return ok;
}

std::string keys_footer() {
  std::string text = "Config keys (JSON file or --set KEY=VALUE; array elements as KEY.INDEX):\n";
  for (const auto& k : config_keys()) text += "  " + k + "\n";
  return text;
}

void add_common(CLI::App& sub, Options& o) {
  sub.add_option("--config", o.config, "JSON config file; defaults are used for missing keys");
  sub.add_option("--out", o.out, "Output directory")->capture_default_str();
  sub.add_option("--set", o.sets, "Override one config key, KEY=VALUE (repeatable)");
  sub.add_option("--workers", o.workers, "Worker threads, 0 = all cores (fallback: NETLASSO_AID_WORKERS)")
      ->check(CLI::NonNegativeNumber);
  sub.add_option("--seed", o.seed, "Master seed");
  auto* quiet = sub.add_flag("-q,--quiet", o.quiet, "Warnings and errors only");
  sub.add_flag("-v,--verbose", o.verbose, "Debug logging")->excludes(quiet);
  sub.footer(keys_footer());
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Traffic incident detection with network-lasso one-class SVMs", "netlasso_aid"};
  app.require_subcommand(1);
  Options o;

  struct Entry {
    const char* name;
    const char* help;
    std::function<int()> action;
  };
  const std::vector<Entry> entries{
      {"generate", "Write a synthetic dataset (series, incidents, profiles, adjacency)", [&] { return cmd_generate(o); }},
      {"graph", "Build the coupling graph and write edges.csv", [&] { return cmd_graph(o); }},
      {"train", "Fit network lasso at solver.lambda and model.nu; writes model.snapshot", [&] { return cmd_train(o); }},
      {"detect", "Score the test split with a saved model", [&] { return cmd_detect(o); }},
      {"evaluate", "Compare local, centralised and network-lasso models",
       [&] { return cmd_experiment(o, &compare_models); }},
      {"path", "Regularisation path over search.lambda_grid", [&] { return cmd_experiment(o, &lambda_path_analysis); }},
      {"sweep", "Scalability sweep over sweep.scales", [&] { return cmd_experiment(o, &scalability_sweep); }},
      {"ablate", "Road, geo and fused graph ablation", [&] { return cmd_experiment(o, &ablation); }},
  };
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    add_common(*sub, o);
    if (std::string(e.name) == "detect") {
      sub->add_option("--model", o.model, "Snapshot written by train")->required();
    }
  }

  if (!args.empty() && !args.front().starts_with('-') &&
      std::none_of(entries.begin(), entries.end(), [&](const Entry& e) { return args.front() == e.name; })) {
    std::cerr << "unknown subcommand '" << args.front() << "'\n\n" << app.help();
    return config_error;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    if (app.get_subcommands().empty()) std::cerr << app.help();
    return config_error;
  }

  setup_logging(o);
  const auto* chosen = app.get_subcommands().front();
  try {
    for (const auto& e : entries) {
      if (chosen->get_name() == e.name) return e.action();
    }
    return config_error;
  } catch (const SolverFailure& e) {
    spdlog::error("{}", e.what());
    return solver_error;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return io_error;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return io_error;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return config_error;
  } catch (const InvalidInput& e) {
    spdlog::error("{}", e.what());
    return config_error;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return config_error;
  }
}

}  // namespace nlaid::cli
