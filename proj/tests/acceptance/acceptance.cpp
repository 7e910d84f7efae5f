// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 when
// every failing criterion is listed with --known-fail.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "nlaid/config.hpp"
#include "nlaid/engine.hpp"
#include "nlaid/harness.hpp"
#include "nlaid/metrics.hpp"
#include "nlaid/ocsvm.hpp"
#include "nlaid/report.hpp"
#include "oracles.hpp"

using namespace nlaid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Settings {
  std::string cli;
  fs::path workdir;
  int workers = 1;
};

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

SampleMatrix rows(const std::vector<oracle::Point2>& pts) {
  SampleMatrix m(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) << pts[i].x, pts[i].y;
  return m;
}

std::vector<oracle::Point2> random_points(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<oracle::Point2> pts;
  for (int i = 0; i < n; ++i) pts.push_back({u(rng), u(rng)});
  return pts;
}

// Relabels a partition by order of first appearance.
std::vector<int> canonical(const std::vector<int>& labels) {
  std::map<int, int> seen;
  std::vector<int> out;
  for (int l : labels) out.push_back(seen.emplace(l, static_cast<int>(seen.size())).first->second);
  return out;
}

const MeanMetrics& mean_of(const std::vector<MeanMetrics>& means, const std::string& model) {
  for (const auto& m : means) {
    if (m.model == model) return m;
  }
  throw std::runtime_error("no rows for model " + model);
}

ExperimentConfig base_config(const Settings& s) {
  auto cfg = default_experiment_config();
  cfg.workers = s.workers;
  return cfg;
}

// ---------------------------------------------------------------------------

Outcome ocsvm_grid_oracle(const Settings&) {
  const auto started = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(1, 10);
  double worst = 0.0, below = 0.0, fine_worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double nu = i % 2 ? 0.5 : 0.95;
    const auto pts = random_points(rng, size(rng));
    const auto fit = fit_standalone(rows(pts), nu, 1e-9);
    const auto grid = oracle::ocsvm_grid_search(pts, nu);
    worst = std::max(worst, std::abs(fit.objective - grid.value));
    below = std::max(below, grid.value - fit.objective);
    // Diagnostic only: a 0.001 grid around the coarse optimum separates grid
    // resolution from solver error.
    double fine = grid.value;
    for (int a = -50; a <= 50; ++a) {
      for (int c = -50; c <= 50; ++c) {
        fine = std::min(fine, oracle::min_over_b(grid.w1 + a * 1e-3, grid.w2 + c * 1e-3, pts, nu));
      }
    }
    fine_worst = std::max(fine_worst, std::abs(fit.objective - fine));
  }
  const double secs = seconds_since(started);
  return {worst <= 1e-3 && secs < 60.0,
          "max |fit - grid| " + num(worst) + " (fit below grid by up to " + num(below) + "; max |fit - 0.001 grid| " +
              num(fine_worst) + "), " + num(secs, 3) + " s"};
}

Outcome nu_property(const Settings&) {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> size(1, 60);
  std::uniform_real_distribution<double> nus(0.05, 1.0);
  double worst_slack = -1.0;
  for (int i = 0; i < 100; ++i) {
    const int n = size(rng);
    const double nu = nus(rng);
    const auto pts = random_points(rng, n);
    const auto fit = fit_standalone(rows(pts), nu, 1e-9);
    int negative = 0;
    for (const auto& p : pts) negative += fit.params.w[0] * p.x + fit.params.w[1] * p.y - fit.params.b < 0.0;
    worst_slack = std::max(worst_slack, static_cast<double>(negative) / n - (nu + 1.0 / n));
  }
  return {worst_slack <= 0.0, "max (fraction negative - nu - 1/N) " + num(worst_slack)};
}

Outcome z_update_exact(const Settings&) {
  std::mt19937_64 rng(303);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> pos(0.01, 5.0);
  std::uniform_int_distribution<int> dims(1, 6);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int d = dims(rng);
    std::vector<double> p(static_cast<std::size_t>(d)), q(static_cast<std::size_t>(d));
    for (auto& x : p) x = g(rng);
    for (auto& x : q) x = g(rng);
    const double c = pos(rng), rho = pos(rng);
    const auto [o1, o2] = oracle::edge_minimiser(p, q, c, rho);
    const auto [z1, z2] = z_update_edge(Vector::Map(p.data(), d), Vector::Map(q.data(), d), c, rho);
    for (int k = 0; k < d; ++k) {
      worst = std::max(worst, std::abs(z1[k] - o1[static_cast<std::size_t>(k)]));
      worst = std::max(worst, std::abs(z2[k] - o2[static_cast<std::size_t>(k)]));
    }
  }
  return {worst <= 1e-6, "max deviation " + num(worst)};
}

Outcome lambda_zero_decoupling(const Settings& s) {
  const auto cfg = base_config(s);
  const auto data = prepare_data(cfg, derive_seed(cfg.seed, 0));
  const auto problem = make_problem(data, build_graph(data, GraphVariant::fused, cfg.graph), cfg.nu);
  SolverConfig solver = cfg.solver;
  solver.lambda = 0.0;
  solver.workers = s.workers;
  const auto sol = admm_solve(problem, solver);
  double worst = 0.0;
  for (std::size_t t = 0; t < problem.nodes().size(); ++t) {
    const auto& n = problem.nodes()[t];
    const auto ref = fit_standalone(n.data, n.loss.nu, solver.inner_tol);
    worst = std::max(worst, (sol.models[t].w - ref.params.w).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, std::abs(sol.models[t].b - ref.params.b));
  }
  return {problem.nodes().size() == 24 && worst <= 1e-3,
          std::to_string(problem.nodes().size()) + " nodes, max inf-norm gap " + num(worst)};
}

Outcome consensus(const Settings& s) {
  std::mt19937_64 rng(505);
  std::normal_distribution<double> g(0.0, 0.3);
  const double centres[3][2] = {{1.0, 0.2}, {0.3, 1.1}, {0.8, 0.9}};
  std::vector<NodeProblem> nodes;
  std::vector<std::vector<oracle::Point2>> pts(3);
  for (int t = 0; t < 3; ++t) {
    SampleMatrix m(4, 2);
    for (int i = 0; i < 4; ++i) {
      m.row(i) << centres[t][0] + g(rng), centres[t][1] + g(rng);
      pts[static_cast<std::size_t>(t)].push_back({m(i, 0), m(i, 1)});
    }
    nodes.push_back({t + 1, std::move(m), LossConfig{0.95, 4}});
  }
  const ProblemGraph graph(std::move(nodes), {{1, 2, 1.0}, {2, 3, 1.0}});
  SolverConfig cfg;
  cfg.lambda = 1e4;
  cfg.workers = s.workers;
  const auto sol = admm_solve(graph, cfg);
  double spread = 0.0;
  for (const auto& a : sol.models)
    for (const auto& b : sol.models) spread = std::max(spread, (a.w - b.w).lpNorm<Eigen::Infinity>());
  const auto shared = oracle::consensus_search(pts, 0.95);
  double off = 0.0;
  for (const auto& m : sol.models) off = std::max({off, std::abs(m.w[0] - shared.w1), std::abs(m.w[1] - shared.w2)});
  const int clusters = cluster_assignments(sol.models, 1e-2).count;
  return {spread <= 1e-2 && off <= 1e-2 && clusters == 1,
          "spread " + num(spread) + ", oracle gap " + num(off) + ", clusters " + std::to_string(clusters) + ", " +
              std::to_string(sol.trace.iterations()) + " iterations"};
}

Outcome convergence(const Settings& s) {
  const auto started = std::chrono::steady_clock::now();
  const auto cfg = base_config(s);
  const auto data = prepare_data(cfg, derive_seed(cfg.seed, 0));
  const auto problem = make_problem(data, build_graph(data, GraphVariant::fused, cfg.graph), cfg.nu);
  bool ok = problem.dim() == 4 && problem.nodes().size() == 24;
  std::string detail;
  for (double lambda : {10.0, 250.0, 1000.0}) {
    SolverConfig solver = cfg.solver;
    solver.lambda = lambda;
    solver.eps_primal = solver.eps_dual = 1e-3;
    solver.max_iter = 2000;
    solver.workers = s.workers;
    const auto sol = admm_solve(problem, solver);
    const auto& last = sol.trace.records.back();
    const bool conv = sol.trace.termination == Termination::converged && last.primal_residual < 1e-3 &&
                      last.dual_residual < 1e-3;
    ok = ok && conv;
    detail += "lambda " + num(lambda) + ": " + std::to_string(sol.trace.iterations()) + " it; ";
  }
  const double secs = seconds_since(started);
  ok = ok && secs <= 600.0;
  return {ok, detail + num(secs, 3) + " s"};
}

Outcome planted_recovery(const Settings& s) {
  const auto cfg = base_config(s);
  const auto data = prepare_data(cfg, derive_seed(cfg.seed, 0));
  const auto problem = make_problem(data, build_graph(data, GraphVariant::fused, cfg.graph), cfg.nu);
  SolverConfig solver = cfg.solver;
  solver.eps_primal = solver.eps_dual = cfg.search.path_eps;
  solver.workers = s.workers;
  const auto path = regularization_path(problem, cfg.search.lambda_grid, solver);
  const auto planted = canonical(data.planted);
  std::vector<double> matching;
  std::string counts;
  int first = 0, last = 0;
  for (const auto& entry : path) {
    const auto c = cluster_assignments(entry.solution.models, cfg.search.cluster_tol);
    if (canonical(c.labels) == planted) matching.push_back(entry.lambda);
    counts += (counts.empty() ? "" : " ") + std::to_string(c.count);
    if (&entry == &path.front()) first = c.count;
    last = c.count;
  }
  const bool ends = path.front().lambda == 0.0 && path.back().lambda == 1e4;
  std::string where;
  for (double l : matching) where += (where.empty() ? "" : ",") + num(l);
  return {ends && first == 24 && last == 1 && !matching.empty(),
          "clusters along path [" + counts + "], planted match at lambda {" + where + "}"};
}

Outcome baseline_ordering(const Settings& s) {
  const auto rep = compare_models(base_config(s));
  const auto means = mean_by_model(rep.metrics);
  const auto& local = mean_of(means, "local").mean;
  const auto& central = mean_of(means, "centralised").mean;
  const auto& nl = mean_of(means, "netlasso").mean;
  return {nl.f1 >= central.f1 && nl.f1 >= local.f1 && central.dr < nl.dr,
          "F1 local " + num(local.f1) + " centralised " + num(central.f1) + " netlasso " + num(nl.f1) +
              "; DR centralised " + num(central.dr) + " netlasso " + num(nl.dr)};
}

Outcome ablation_ordering(const Settings& s) {
  const auto rep = ablation(base_config(s));
  const auto means = mean_by_model(rep.metrics);
  const double road = mean_of(means, "netlasso:road").mean.f1;
  const double geo = mean_of(means, "netlasso:geo").mean.f1;
  const double fused = mean_of(means, "netlasso:fused").mean.f1;
  return {fused >= road && fused >= geo, "F1 road " + num(road) + " geo " + num(geo) + " fused " + num(fused)};
}

Outcome scalability(const Settings& s) {
  const auto cfg = base_config(s);
  const auto rep = scalability_sweep(cfg);
  const auto means = mean_by_model(rep.metrics);
  std::vector<double> f1;
  std::string f1_text;
  for (int scale : cfg.scales) {
    f1.push_back(mean_of(means, "netlasso@" + std::to_string(scale)).mean.f1);
    f1_text += (f1_text.empty() ? "" : " ") + num(f1.back());
  }
  const double small = median_wall_ms(rep, "netlasso@12");
  const double large = median_wall_ms(rep, "netlasso@24");
  const bool timing = large <= 3.0 * small;
  const bool trend = std::is_sorted(f1.begin(), f1.end());
  return {timing && trend, "median ms 12: " + num(small) + ", 24: " + num(large) + " (ratio " + num(large / small, 3) +
                               (timing ? ", ok" : ", above 3") + "); F1 by scale " + f1_text +
                               (trend ? " non-decreasing" : " decreasing")};
}

Outcome metrics_exact(const Settings&) {
  bool ok = true;
  // match_events: incident [5,8), flags at 6 and 9.
  PredictionSeries preds{1, {}};
  for (std::int64_t t = 0; t <= 12; ++t) preds.windows.push_back({t, 0.0, t == 6 || t == 9});
  const std::vector<IncidentRecord> one{{1, 5, 3}};
  const auto m = match_events(preds, one);
  ok = ok && m.counts == ConfusionCounts{1, 1, 9, 0} && m.detection_times[0] == std::optional<std::int64_t>(6);
  PredictionSeries quiet{1, {}};
  for (std::int64_t t = 0; t <= 12; ++t) quiet.windows.push_back({t, 0.0, false});
  ok = ok && match_events(quiet, {}).counts == ConfusionCounts{0, 0, 13, 0};
  ok = ok && match_events(quiet, one).counts.fn == 1;
  // basic_metrics
  const auto b = basic_metrics({6, 0, 10, 4});
  ok = ok && b.dr == 0.6 && b.far == 0.0;
  const auto z = basic_metrics({0, 0, 3, 0});
  ok = ok && z.f1 == 0.0 && z.degenerate;
  // adjusted_mttd
  const std::vector<IncidentRecord> two{{1, 10, 4}, {1, 30, 6}};
  ok = ok && adjusted_mttd(std::vector<std::optional<std::int64_t>>{10, 30}, two) == 0.0;
  ok = ok && adjusted_mttd(std::vector<std::optional<std::int64_t>>{12, std::nullopt}, two) == 4.0;
  const std::vector<IncidentRecord> missed{{1, 10, 3}, {1, 30, 5}};
  ok = ok && adjusted_mttd(std::vector<std::optional<std::int64_t>>{std::nullopt, std::nullopt}, missed) == 4.0;
  const bool worked = ok;

  // AUC against pairwise enumeration.
  std::mt19937_64 rng(1111);
  std::uniform_int_distribution<int> size(1, 20), levels(0, 8);
  std::bernoulli_distribution pos(0.35);
  double worst = 0.0;
  for (int i = 0; i < 5000; ++i) {
    std::vector<std::pair<double, Label>> v;
    std::vector<std::pair<double, bool>> o;
    const int n = size(rng);
    for (int k = 0; k < n; ++k) {
      const double sc = i % 2 ? levels(rng) * 0.125 : std::ldexp(static_cast<double>(rng() >> 11), -53);
      const bool p = pos(rng);
      v.emplace_back(sc, p ? Label::incident : Label::normal);
      o.emplace_back(sc, p);
    }
    const auto want = oracle::pairwise_auc(o);
    const auto got = auc(v);
    if (!want) {
      ok = ok && got.degenerate && got.value == 0.5;
    } else {
      worst = std::max(worst, std::abs(got.value - *want));
    }
  }
  ok = ok && worst <= 1e-12;
  return {ok, std::string("worked examples ") + (worked ? "exact" : "MISMATCH") + ", AUC max deviation " + num(worst)};
}

Outcome determinism(const Settings& s) {
  if (s.cli.empty()) return {false, "no --cli binary given"};
  const fs::path a = s.workdir / "sweep_a", b = s.workdir / "sweep_b";
  fs::remove_all(a);
  fs::remove_all(b);
  // Two runs keep the repeat affordable; the pipeline is otherwise the default sweep.
  const auto invoke = [&](const fs::path& out) {
    const std::string cmd = "\"" + s.cli + "\" sweep --quiet --set runs=2 --seed 7 --workers " +
                            std::to_string(s.workers) + " --out \"" + out.string() + "\"";
    return std::system(cmd.c_str());
  };
  if (invoke(a) != 0 || invoke(b) != 0) return {false, "sweep command failed"};
  const auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    ++files;
    const auto other = b / entry.path().filename();
    if (!fs::exists(other) || read(entry.path()) != read(other)) {
      return {false, entry.path().filename().string() + " differs"};
    }
  }
  return {files > 0, std::to_string(files) + " CSV files byte-identical"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(const Settings&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  Settings settings;
  std::string workdir = (fs::temp_directory_path() / "nlaid_acceptance").string();
  std::vector<int> known_fail;
  std::vector<int> only;
  app.add_option("--cli", settings.cli, "Path to the netlasso_aid binary (needed for the determinism check)");
  app.add_option("--workdir", workdir, "Scratch directory");
  app.add_option("--workers", settings.workers, "Worker threads for solves")->check(CLI::PositiveNumber);
  app.add_option("--known-fail", known_fail, "Criteria whose failure does not fail the exit status");
  app.add_option("--only", only, "Run just these criteria");
  CLI11_PARSE(app, argc, argv);
  settings.workdir = workdir;
  fs::create_directories(settings.workdir);
  spdlog::set_level(spdlog::level::warn);

  const std::vector<Criterion> criteria{
      {1, "OC-SVM objective matches 2-D grid oracle", ocsvm_grid_oracle},
      {2, "nu-property on random instances", nu_property},
      {3, "closed-form z-update matches numeric minimiser", z_update_exact},
      {4, "lambda=0 network lasso equals standalone fits", lambda_zero_decoupling},
      {5, "strong coupling reaches shared-w oracle", consensus},
      {6, "ADMM residuals below 1e-3 within 2000 iterations", convergence},
      {7, "planted clusters recovered along lambda path", planted_recovery},
      {8, "baseline ordering over 10 runs", baseline_ordering},
      {9, "graph ablation ordering over 10 runs", ablation_ordering},
      {10, "scalability timing and F1 trend", scalability},
      {11, "metric worked examples and AUC oracle", metrics_exact},
      {12, "sweep outputs byte-identical across executions", determinism},
  };

  std::set<int> unexpected;
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto started = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run(settings);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const bool known = std::find(known_fail.begin(), known_fail.end(), c.id) != known_fail.end();
    if (!out.pass) {
      ++failures;
      if (!known) unexpected.insert(c.id);
    }
    std::cout << (out.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << out.detail
              << (out.pass || !known ? "" : " (known failure)") << " [" << num(seconds_since(started), 3) << " s]"
              << std::endl;
  }
  std::cout << failures << " failing, " << unexpected.size() << " unexpected" << std::endl;
  return unexpected.empty() ? 0 : 1;
}
