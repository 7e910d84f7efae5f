#pragma once

// Experiment orchestration: data preparation, the local / centralised /
// network-lasso comparison, hyperparameter selection on the validation split,
// the lambda path, the graph ablation and the scalability sweep.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlaid/config.hpp"
#include "nlaid/data_pipeline.hpp"
#include "nlaid/engine.hpp"
#include "nlaid/metrics.hpp"
#include "nlaid/traffic_graph.hpp"

namespace nlaid {

struct PreparedData {
  std::uint64_t seed = 0;
  std::vector<NodeId> nodes;
  std::vector<NodeWindows> windows;
  std::vector<IncidentRecord> incidents;
  std::vector<RegionProfile> profiles;
  std::vector<std::pair<NodeId, NodeId>> adjacency;
  /// Planted cluster per node (aligned with `nodes`); empty for CSV data.
  std::vector<int> planted;
  Splits splits;
};

/// Generates or loads the data for one run and splits it.
PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t run_seed);

/// Restricts prepared data to `keep` and re-splits with test quotas scaled by
/// |keep| / |nodes|.
PreparedData restrict_nodes(const PreparedData& data, std::span<const NodeId> keep, const ExperimentConfig& cfg);

/// Node order used to build nested subsets for the sweep.
std::vector<NodeId> scale_order(const PreparedData& data, ScaleOrder order);

FusedGraph build_graph(const PreparedData& data, GraphVariant variant, const GraphConfig& cfg);

using ModelSet = std::map<NodeId, ModelParams>;

/// Anomaly score of every window in `data` under its node's model.
std::vector<PredictionSeries> score_dataset(const Dataset& data, const ModelSet& models);

struct Calibrated {
  double threshold = 0.0;
  Evaluation validation;
  Evaluation test;
  /// Flagged test-split scores, in dataset order.
  std::vector<PredictionSeries> test_predictions;
};

/// Sets the flag threshold on validation normals (or uses the sign rule) and
/// evaluates both held-out splits.
Calibrated calibrate_and_evaluate(const PreparedData& data, const ModelSet& models, const ExperimentConfig& cfg);

struct Candidate {
  double nu = 0.0;
  double lambda = 0.0;
  MetricsReport validation;
};

/// Index of the candidate with the best validation F1 among those meeting the
/// FAR cap; earlier candidates win ties. Falls back to the lowest validation
/// FAR (with a warning) when none is feasible.
std::size_t select_candidate(std::span<const Candidate> candidates, double far_cap);

enum class ModelFamily { local, centralised, netlasso };
const char* to_string(ModelFamily f);

struct PathPoint {
  double nu = 0.0;
  double lambda = 0.0;
  int clusters = 0;
  int iterations = 0;
  bool converged = false;
  MetricsReport validation;
  MetricsReport test;
};

struct FamilyResult {
  ModelFamily family = ModelFamily::local;
  double nu = 0.0;
  double lambda = 0.0;
  ModelSet models;
  Calibrated scores;
  /// Network lasso only: the selected solve and every evaluated path point.
  std::optional<NetworkSolution> solution;
  std::vector<PathPoint> path;
};

FamilyResult run_local_baseline(const ExperimentConfig& cfg, const PreparedData& data);
FamilyResult run_centralized_baseline(const ExperimentConfig& cfg, const PreparedData& data);
/// Jointly selects nu and lambda over the configured grids.
FamilyResult run_netlasso(const ExperimentConfig& cfg, const PreparedData& data, const FusedGraph& graph);

/// Validation-selected nu for one baseline family (local or centralised).
double grid_search_nu(const ExperimentConfig& cfg, const PreparedData& data, ModelFamily family);

/// Network lasso problem for the train split of `data`.
ProblemGraph make_problem(const PreparedData& data, const FusedGraph& graph, double nu);

// ---- reports --------------------------------------------------------------

struct MetricsRow {
  int run_id = 0;
  std::string model;
  MetricsReport metrics;
};

struct NodeAccuracyRow {
  int run_id = 0;
  std::string model;
  NodeId node_id = 0;
  double acc = 0.0;
};

struct LambdaRow {
  int run_id = 0;
  double nu = 0.0;
  double lambda = 0.0;
  int clusters = 0;
  int iterations = 0;
  bool converged = false;
  bool selected = false;
  double validation_f1 = 0.0;
  MetricsReport test;
};

struct TimingRow {
  int run_id = 0;
  std::string model;
  int nodes = 0;
  double nu = 0.0;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Wall clock; kept out of the CSV outputs so they stay reproducible.
  double wall_ms = 0.0;
};

struct SplitRow {
  int run_id = 0;
  int nodes = 0;
  std::uint64_t train = 0;
  std::uint64_t validation = 0;
  std::uint64_t test = 0;
};

struct RunReport {
  std::string experiment;
  int runs = 0;
  int workers = 1;
  int timestep_minutes = 5;
  std::vector<MetricsRow> metrics;
  std::vector<NodeAccuracyRow> node_accuracy;
  std::vector<LambdaRow> lambda_path;
  std::vector<TimingRow> timing;
  std::vector<SplitRow> splits;
};

using Progress = std::function<void(const std::string&)>;

/// Local vs centralised vs network lasso, every run on identical splits.
RunReport compare_models(const ExperimentConfig& cfg, const Progress& progress = {});
/// Network lasso at the configured nu across the lambda grid.
RunReport lambda_path_analysis(const ExperimentConfig& cfg, const Progress& progress = {});
/// Network lasso on nested node subsets of each configured scale.
RunReport scalability_sweep(const ExperimentConfig& cfg, const Progress& progress = {});
/// Network lasso on the road, geo and fused graphs.
RunReport ablation(const ExperimentConfig& cfg, const Progress& progress = {});

struct MeanMetrics {
  std::string model;
  int count = 0;
  MetricsReport mean;  ///< passed_far_filter: true when every run passed
};

/// Per-model means in order of first appearance.
std::vector<MeanMetrics> mean_by_model(std::span<const MetricsRow> rows);

}  // namespace nlaid
