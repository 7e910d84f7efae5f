#pragma once

// Experiment configuration and its JSON form. Every field has a default; the
// JSON produced by config_to_json(default_experiment_config()) is the full
// schema; parsing overlays a document on it and rejects keys it does not contain.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlaid/data_pipeline.hpp"
#include "nlaid/engine.hpp"
#include "nlaid/traffic_graph.hpp"

namespace nlaid {

enum class DataSourceKind { synthetic, csv };
/// best_f1: validation-F1-optimal threshold within the FAR cap; far_threshold:
/// the lowest threshold within the cap; sign: the model's own decision rule.
enum class ThresholdMode { best_f1, far_threshold, sign };
enum class ScaleOrder { natural, stratified };

struct DataConfig {
  DataSourceKind source = DataSourceKind::synthetic;
  int days = 13;
  int train_days = 10;
  int records_per_day = 264;
  int timestep_minutes = 5;
  std::string series_csv;
  std::string incidents_csv;
  std::string profiles_csv;
  std::string adjacency_csv;
  /// days / train_days / records_per_day / timestep_minutes / seed are taken
  /// from the surrounding config.
  GeneratorConfig generator;
};

struct SearchConfig {
  std::vector<double> nu_grid{0.91, 0.95, 0.99};
  std::vector<double> lambda_grid{0.0, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 10.0, 10000.0};
  /// Models closer than this share a cluster. Only meaningful when the solve
  /// is tighter still, hence path_eps.
  double cluster_tol = 1e-5;
  /// ADMM residual tolerance used by the lambda-path analysis.
  double path_eps = 1e-5;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int runs = 10;
  /// 0 means one worker per hardware thread.
  int workers = 0;
  DataConfig data;
  SplitConfig splits;
  GraphVariant graph_variant = GraphVariant::fused;
  GraphConfig graph;
  SolverConfig solver;
  double nu = 0.95;
  SearchConfig search;
  double far_cap = 0.10;
  ThresholdMode threshold_mode = ThresholdMode::best_f1;
  std::vector<int> scales{12, 18, 24};
  ScaleOrder scale_order = ScaleOrder::stratified;

  void validate() const;
  /// Generator settings with the shared layout fields and the given seed filled in.
  GeneratorConfig generator_for(std::uint64_t run_seed) const;
  SplitConfig splits_for(std::uint64_t run_seed) const;
  int effective_workers() const;
};

/// The planted three-cluster scenario used by default: 24 regions in three
/// contiguous context clusters, on two freeways that split the middle cluster.
ExperimentConfig default_experiment_config();

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Dotted names of every settable key, in schema order.
std::vector<std::string> config_keys();

/// (dotted key, value) where the value is a JSON literal or a bare string.
/// Array elements are addressed by index, e.g. data.generator.clusters.0.downstream_gap.
using Override = std::pair<std::string, std::string>;
ExperimentConfig apply_overrides(const ExperimentConfig& cfg, std::span<const Override> overrides);

/// Per-run seed derived from the master seed (splitmix64 of seed + run).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run);

}  // namespace nlaid
