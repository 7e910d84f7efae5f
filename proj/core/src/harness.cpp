#include "nlaid/harness.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

namespace nlaid {

namespace {

double since_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void say(const Progress& progress, const std::string& msg) {
  if (progress) progress(msg);
}

SolverConfig solver_for(const ExperimentConfig& cfg) {
  SolverConfig s = cfg.solver;
  s.seed = cfg.seed;
  s.workers = cfg.effective_workers();
  return s;
}

ModelSet fit_local_models(const PreparedData& data, double nu, double tol) {
  ModelSet out;
  for (NodeId id : data.nodes) {
    out.emplace(id, fit_standalone(data.splits.train.matrix_for(id), nu, tol).params);
  }
  return out;
}

ModelSet fit_central_models(const PreparedData& data, double nu, double tol) {
  const ModelParams shared = fit_standalone(data.splits.train.matrix(), nu, tol).params;
  ModelSet out;
  for (NodeId id : data.nodes) out.emplace(id, shared);
  return out;
}

ModelSet models_of(const ProblemGraph& problem, const NetworkSolution& sol) {
  ModelSet out;
  for (std::size_t t = 0; t < problem.nodes().size(); ++t) out.emplace(problem.nodes()[t].id, sol.models[t]);
  return out;
}

int scaled_quota(int quota, std::size_t keep, std::size_t total) {
  return static_cast<int>(std::lround(static_cast<double>(quota) * static_cast<double>(keep) / static_cast<double>(total)));
}

void add_split_row(RunReport& report, int run_id, const PreparedData& data) {
  report.splits.push_back({run_id, static_cast<int>(data.nodes.size()), split_hash(data.splits.train),
                           split_hash(data.splits.validation), split_hash(data.splits.test)});
}

void add_family_rows(RunReport& report, int run_id, const std::string& name, const FamilyResult& r) {
  report.metrics.push_back({run_id, name, r.scores.test.report});
  for (const auto& [node, acc] : r.scores.test.node_accuracy) report.node_accuracy.push_back({run_id, name, node, acc});
}

RunReport new_report(const std::string& name, const ExperimentConfig& cfg) {
  RunReport r;
  r.experiment = name;
  r.runs = cfg.runs;
  r.workers = cfg.effective_workers();
  r.timestep_minutes = cfg.data.timestep_minutes;
  return r;
}

}  // namespace

const char* to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::local: return "local";
    case ModelFamily::centralised: return "centralised";
    case ModelFamily::netlasso: return "netlasso";
  }
  return "local";
}

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  cfg.validate();
  PreparedData out;
  out.seed = run_seed;
  std::vector<TrafficSeries> series;
  if (cfg.data.source == DataSourceKind::synthetic) {
    auto synth = generate_synthetic(cfg.generator_for(run_seed));
    series = std::move(synth.series);
    out.incidents = std::move(synth.incidents);
    out.profiles = std::move(synth.profiles);
    out.adjacency = std::move(synth.adjacency);
    out.planted = std::move(synth.cluster_of_node);
  } else {
    auto loaded = load_csv(cfg.data.series_csv, cfg.data.incidents_csv, cfg.data.timestep_minutes);
    series = std::move(loaded.series);
    out.incidents = std::move(loaded.incidents);
    if (!cfg.data.profiles_csv.empty()) out.profiles = read_profiles_csv(cfg.data.profiles_csv);
    if (!cfg.data.adjacency_csv.empty()) out.adjacency = read_adjacency_csv(cfg.data.adjacency_csv);
  }
  const std::int64_t needed = static_cast<std::int64_t>(cfg.data.train_days) * cfg.data.records_per_day;
  for (const auto& s : series) {
    if (static_cast<std::int64_t>(s.length()) <= needed) {
      throw ConfigError("node " + std::to_string(s.node_id) + " has " + std::to_string(s.length()) +
                        " records; the training span alone needs " + std::to_string(needed));
    }
    out.nodes.push_back(s.node_id);
    out.windows.push_back(node_windows(s, cfg.splits.window, out.incidents));
  }
  out.splits = make_splits(out.windows, out.incidents, cfg.splits_for(run_seed));
  return out;
}

PreparedData restrict_nodes(const PreparedData& data, std::span<const NodeId> keep, const ExperimentConfig& cfg) {
  const std::set<NodeId> kept(keep.begin(), keep.end());
  for (NodeId id : keep) {
    if (std::find(data.nodes.begin(), data.nodes.end(), id) == data.nodes.end()) {
      throw ConfigError("restrict_nodes: unknown node " + std::to_string(id));
    }
  }
  PreparedData out;
  out.seed = data.seed;
  for (std::size_t i = 0; i < data.nodes.size(); ++i) {
    if (!kept.contains(data.nodes[i])) continue;
    out.nodes.push_back(data.nodes[i]);
    out.windows.push_back(data.windows[i]);
    if (!data.planted.empty()) out.planted.push_back(data.planted[i]);
  }
  for (const auto& r : data.incidents) {
    if (kept.contains(r.node_id)) out.incidents.push_back(r);
  }
  for (const auto& p : data.profiles) {
    if (kept.contains(p.node_id)) out.profiles.push_back(p);
  }
  // Dropped regions still carry traffic: two kept regions are road neighbours
  // when a path of dropped regions joins them.
  std::map<NodeId, std::vector<NodeId>> links;
  for (const auto& [a, b] : data.adjacency) {
    links[a].push_back(b);
    links[b].push_back(a);
  }
  std::set<std::pair<NodeId, NodeId>> contracted;
  for (NodeId from : out.nodes) {
    std::set<NodeId> seen{from};
    std::vector<NodeId> stack{from};
    while (!stack.empty()) {
      const NodeId at = stack.back();
      stack.pop_back();
      for (NodeId next : links[at]) {
        if (!seen.insert(next).second) continue;
        if (kept.contains(next)) {
          contracted.emplace(std::min(from, next), std::max(from, next));
        } else {
          stack.push_back(next);
        }
      }
    }
  }
  out.adjacency.assign(contracted.begin(), contracted.end());
  SplitConfig split = cfg.splits_for(data.seed);
  split.test_incident_windows = scaled_quota(split.test_incident_windows, out.nodes.size(), data.nodes.size());
  split.test_normal_windows = scaled_quota(split.test_normal_windows, out.nodes.size(), data.nodes.size());
  split.validation_incident_windows =
      scaled_quota(split.validation_incident_windows, out.nodes.size(), data.nodes.size());
  split.validation_normal_windows = scaled_quota(split.validation_normal_windows, out.nodes.size(), data.nodes.size());
  out.splits = make_splits(out.windows, out.incidents, split);
  return out;
}

std::vector<NodeId> scale_order(const PreparedData& data, ScaleOrder order) {
  if (order == ScaleOrder::natural || data.planted.empty()) return data.nodes;
  // Round-robin across planted clusters so every prefix keeps all of them.
  std::map<int, std::vector<NodeId>> groups;
  for (std::size_t i = 0; i < data.nodes.size(); ++i) groups[data.planted[i]].push_back(data.nodes[i]);
  std::vector<NodeId> out;
  for (std::size_t round = 0; out.size() < data.nodes.size(); ++round) {
    for (const auto& [cluster, members] : groups) {
      if (round < members.size()) out.push_back(members[round]);
    }
  }
  return out;
}

FusedGraph build_graph(const PreparedData& data, GraphVariant variant, const GraphConfig& cfg) {
  if (variant != GraphVariant::road && data.profiles.size() != data.nodes.size()) {
    throw ConfigError(std::string("graph variant '") + to_string(variant) + "' needs a profile for every node");
  }
  return ablation_variant(variant, data.nodes, data.adjacency, data.profiles, cfg);
}

ProblemGraph make_problem(const PreparedData& data, const FusedGraph& graph, double nu) {
  std::vector<NodeProblem> problems;
  problems.reserve(data.nodes.size());
  for (NodeId id : data.nodes) {
    SampleMatrix m = data.splits.train.matrix_for(id);
    const auto n = static_cast<std::size_t>(m.rows());
    problems.push_back({id, std::move(m), LossConfig{nu, n}});
  }
  return ProblemGraph(std::move(problems), graph.weighted_edges());
}

std::vector<PredictionSeries> score_dataset(const Dataset& data, const ModelSet& models) {
  std::vector<PredictionSeries> out;
  for (const auto& w : data.windows) {
    if (out.empty() || out.back().node_id != w.node_id) out.push_back({w.node_id, {}});
    const auto it = models.find(w.node_id);
    if (it == models.end()) throw InvalidInput("score_dataset: no model for node " + std::to_string(w.node_id));
    out.back().windows.push_back({w.end_index, anomaly_score(it->second, w.window), false});
  }
  return out;
}

Calibrated calibrate_and_evaluate(const PreparedData& data, const ModelSet& models, const ExperimentConfig& cfg) {
  auto validation = score_dataset(data.splits.validation, models);
  auto test = score_dataset(data.splits.test, models);
  Calibrated out;
  switch (cfg.threshold_mode) {
    case ThresholdMode::best_f1:
      out.threshold = best_f1_threshold(validation, data.splits.validation_incidents, cfg.far_cap).threshold;
      break;
    case ThresholdMode::far_threshold: {
      // score_dataset keeps dataset order, so labels line up window by window.
      std::vector<std::pair<double, Label>> scored;
      auto label = data.splits.validation.windows.begin();
      for (const auto& s : validation) {
        for (const auto& p : s.windows) scored.emplace_back(p.score, (label++)->label);
      }
      out.threshold = far_threshold(scored, cfg.far_cap).threshold;
      break;
    }
    case ThresholdMode::sign:
      out.threshold = 0.0;
      break;
  }
  const bool strict = cfg.threshold_mode == ThresholdMode::sign;
  auto apply = [&](std::vector<PredictionSeries>& series) {
    for (auto& s : series) {
      for (auto& p : s.windows) p.flag = strict ? p.score > out.threshold : p.score >= out.threshold;
    }
  };
  apply(validation);
  apply(test);
  out.validation = evaluate(validation, data.splits.validation_incidents, cfg.far_cap);
  out.test = evaluate(test, data.splits.test_incidents, cfg.far_cap);
  out.test_predictions = std::move(test);
  return out;
}

std::size_t select_candidate(std::span<const Candidate> candidates, double far_cap) {
  if (candidates.empty()) throw InvalidInput("select_candidate: no candidates");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].validation.far > far_cap) continue;
    if (!best || candidates[i].validation.f1 > candidates[*best].validation.f1) best = i;
  }
  if (best) return *best;
  std::size_t lowest = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].validation.far < candidates[lowest].validation.far) lowest = i;
  }
  spdlog::warn("no candidate meets the validation FAR cap of {}; using nu={} lambda={} with FAR {}", far_cap,
               candidates[lowest].nu, candidates[lowest].lambda, candidates[lowest].validation.far);
  return lowest;
}

namespace {

FamilyResult run_baseline(const ExperimentConfig& cfg, const PreparedData& data, ModelFamily family) {
  std::vector<Candidate> candidates;
  std::vector<ModelSet> fitted;
  std::vector<Calibrated> scores;
  for (double nu : cfg.search.nu_grid) {
    fitted.push_back(family == ModelFamily::local ? fit_local_models(data, nu, cfg.solver.inner_tol)
                                                  : fit_central_models(data, nu, cfg.solver.inner_tol));
    scores.push_back(calibrate_and_evaluate(data, fitted.back(), cfg));
    candidates.push_back({nu, 0.0, scores.back().validation.report});
  }
  const auto pick = select_candidate(candidates, cfg.far_cap);
  FamilyResult out;
  out.family = family;
  out.nu = candidates[pick].nu;
  out.models = std::move(fitted[pick]);
  out.scores = std::move(scores[pick]);
  return out;
}

}  // namespace

FamilyResult run_local_baseline(const ExperimentConfig& cfg, const PreparedData& data) {
  return run_baseline(cfg, data, ModelFamily::local);
}

FamilyResult run_centralized_baseline(const ExperimentConfig& cfg, const PreparedData& data) {
  return run_baseline(cfg, data, ModelFamily::centralised);
}

double grid_search_nu(const ExperimentConfig& cfg, const PreparedData& data, ModelFamily family) {
  if (family == ModelFamily::netlasso) {
    throw InvalidInput("grid_search_nu: network lasso selects nu jointly with lambda; use run_netlasso");
  }
  return run_baseline(cfg, data, family).nu;
}

FamilyResult run_netlasso(const ExperimentConfig& cfg, const PreparedData& data, const FusedGraph& graph) {
  const SolverConfig solver = solver_for(cfg);
  FamilyResult out;
  out.family = ModelFamily::netlasso;
  std::vector<Candidate> candidates;
  std::optional<std::size_t> best;
  for (double nu : cfg.search.nu_grid) {
    const ProblemGraph problem = make_problem(data, graph, nu);
    auto path = regularization_path(problem, cfg.search.lambda_grid, solver);
    for (auto& entry : path) {
      const ModelSet models = models_of(problem, entry.solution);
      Calibrated scored = calibrate_and_evaluate(data, models, cfg);
      const auto clusters = cluster_assignments(entry.solution.models, cfg.search.cluster_tol).count;
      out.path.push_back({nu, entry.lambda, clusters, entry.solution.trace.iterations(),
                          entry.solution.trace.termination == Termination::converged, scored.validation.report,
                          scored.test.report});
      candidates.push_back({nu, entry.lambda, scored.validation.report});
      // Keep only the running best solve; a path holds one solution per lambda.
      const auto pick = select_candidate(candidates, cfg.far_cap);
      if (!best || pick != *best) {
        best = pick;
        out.nu = nu;
        out.lambda = entry.lambda;
        out.models = models;
        out.scores = std::move(scored);
        out.solution = std::move(entry.solution);
      }
    }
  }
  return out;
}

RunReport compare_models(const ExperimentConfig& cfg, const Progress& progress) {
  RunReport report = new_report("compare", cfg);
  for (int run = 0; run < cfg.runs; ++run) {
    const auto seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(run));
    const PreparedData data = prepare_data(cfg, seed);
    add_split_row(report, run, data);
    const auto graph = build_graph(data, cfg.graph_variant, cfg.graph);

    auto started = std::chrono::steady_clock::now();
    const auto local = run_local_baseline(cfg, data);
    report.timing.push_back({run, "local", static_cast<int>(data.nodes.size()), local.nu, 0.0, 1, true, since_ms(started)});
    started = std::chrono::steady_clock::now();
    const auto central = run_centralized_baseline(cfg, data);
    report.timing.push_back(
        {run, "centralised", static_cast<int>(data.nodes.size()), central.nu, 0.0, 1, true, since_ms(started)});
    started = std::chrono::steady_clock::now();
    const auto nl = run_netlasso(cfg, data, graph);
    const auto& trace = nl.solution->trace;
    report.timing.push_back({run, "netlasso", static_cast<int>(data.nodes.size()), nl.nu, nl.lambda,
                             trace.iterations(), trace.termination == Termination::converged, since_ms(started)});

    add_family_rows(report, run, "local", local);
    add_family_rows(report, run, "centralised", central);
    add_family_rows(report, run, "netlasso", nl);
    for (const auto& p : nl.path) {
      if (p.nu != nl.nu) continue;
      report.lambda_path.push_back({run, p.nu, p.lambda, p.clusters, p.iterations, p.converged, p.lambda == nl.lambda,
                                    p.validation.f1, p.test});
    }
    say(progress, "run " + std::to_string(run) + ": F1 local " + std::to_string(local.scores.test.report.f1) +
                      ", centralised " + std::to_string(central.scores.test.report.f1) + ", netlasso " +
                      std::to_string(nl.scores.test.report.f1));
  }
  return report;
}

RunReport lambda_path_analysis(const ExperimentConfig& cfg, const Progress& progress) {
  RunReport report = new_report("path", cfg);
  ExperimentConfig fixed = cfg;
  fixed.search.nu_grid = {cfg.nu};
  // Cluster counts need residuals well under the distance between local models.
  fixed.solver.eps_primal = cfg.search.path_eps;
  fixed.solver.eps_dual = cfg.search.path_eps;
  for (int run = 0; run < cfg.runs; ++run) {
    const auto seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(run));
    const PreparedData data = prepare_data(cfg, seed);
    add_split_row(report, run, data);
    const auto graph = build_graph(data, cfg.graph_variant, cfg.graph);
    const auto started = std::chrono::steady_clock::now();
    const auto nl = run_netlasso(fixed, data, graph);
    const auto& trace = nl.solution->trace;
    report.timing.push_back({run, "netlasso", static_cast<int>(data.nodes.size()), nl.nu, nl.lambda,
                             trace.iterations(), trace.termination == Termination::converged, since_ms(started)});
    add_family_rows(report, run, "netlasso", nl);
    for (const auto& p : nl.path) {
      report.lambda_path.push_back({run, p.nu, p.lambda, p.clusters, p.iterations, p.converged, p.lambda == nl.lambda,
                                    p.validation.f1, p.test});
    }
    say(progress, "run " + std::to_string(run) + ": selected lambda " + format_real(nl.lambda));
  }
  return report;
}

RunReport scalability_sweep(const ExperimentConfig& cfg, const Progress& progress) {
  RunReport report = new_report("sweep", cfg);
  for (int run = 0; run < cfg.runs; ++run) {
    const auto seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(run));
    const PreparedData full = prepare_data(cfg, seed);
    const auto order = scale_order(full, cfg.scale_order);
    for (int scale : cfg.scales) {
      if (static_cast<std::size_t>(scale) > order.size()) {
        throw ConfigError("sweep scale " + std::to_string(scale) + " exceeds the " + std::to_string(order.size()) +
                          " available nodes");
      }
      const std::vector<NodeId> keep(order.begin(), order.begin() + scale);
      const PreparedData data = restrict_nodes(full, keep, cfg);
      add_split_row(report, run, data);
      const auto graph = build_graph(data, cfg.graph_variant, cfg.graph);
      const auto nl = run_netlasso(cfg, data, graph);
      const std::string name = "netlasso@" + std::to_string(scale);
      add_family_rows(report, run, name, nl);

      // Time to converge: a cold solve of the selected model.
      const ProblemGraph problem = make_problem(data, graph, nl.nu);
      SolverConfig solver = solver_for(cfg);
      solver.lambda = nl.lambda;
      const auto started = std::chrono::steady_clock::now();
      const auto timed = admm_solve(problem, solver);
      report.timing.push_back({run, name, scale, nl.nu, nl.lambda, timed.trace.iterations(),
                               timed.trace.termination == Termination::converged, since_ms(started)});
      say(progress, "run " + std::to_string(run) + " scale " + std::to_string(scale) + ": F1 " +
                        std::to_string(nl.scores.test.report.f1));
    }
  }
  return report;
}

RunReport ablation(const ExperimentConfig& cfg, const Progress& progress) {
  RunReport report = new_report("ablate", cfg);
  for (int run = 0; run < cfg.runs; ++run) {
    const auto seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(run));
    const PreparedData data = prepare_data(cfg, seed);
    add_split_row(report, run, data);
    for (auto variant : {GraphVariant::road, GraphVariant::geo, GraphVariant::fused}) {
      const auto graph = build_graph(data, variant, cfg.graph);
      const auto started = std::chrono::steady_clock::now();
      const auto nl = run_netlasso(cfg, data, graph);
      const std::string name = std::string("netlasso:") + to_string(variant);
      const auto& trace = nl.solution->trace;
      report.timing.push_back({run, name, static_cast<int>(data.nodes.size()), nl.nu, nl.lambda, trace.iterations(),
                               trace.termination == Termination::converged, since_ms(started)});
      add_family_rows(report, run, name, nl);
      say(progress, "run " + std::to_string(run) + " " + name + ": F1 " + std::to_string(nl.scores.test.report.f1));
    }
  }
  return report;
}

std::vector<MeanMetrics> mean_by_model(std::span<const MetricsRow> rows) {
  std::vector<MeanMetrics> out;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MeanMetrics& m) { return m.model == row.model; });
    if (it == out.end()) {
      out.push_back({row.model, 0, MetricsReport{0, 0, 0, 0, 0, 0, true}});
      it = out.end() - 1;
    }
    auto& m = it->mean;
    m.acc += row.metrics.acc;
    m.f1 += row.metrics.f1;
    m.dr += row.metrics.dr;
    m.far += row.metrics.far;
    m.auc += row.metrics.auc;
    m.ad_mttd += row.metrics.ad_mttd;
    m.passed_far_filter = m.passed_far_filter && row.metrics.passed_far_filter;
    ++it->count;
  }
  for (auto& m : out) {
    const double n = m.count;
    m.mean.acc /= n;
    m.mean.f1 /= n;
    m.mean.dr /= n;
    m.mean.far /= n;
    m.mean.auc /= n;
    m.mean.ad_mttd /= n;
  }
  return out;
}

}  // namespace nlaid
