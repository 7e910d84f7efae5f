#pragma once

// Loop-detector data: synthetic generation with injected incidents, CSV
// ingestion, occupancy differences, sliding windows and train/validation/test
// splits.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlaid/csv.hpp"
#include "nlaid/engine.hpp"
#include "nlaid/traffic_graph.hpp"

namespace nlaid {

struct TrafficSeries {
  NodeId node_id = 0;
  int timestep_minutes = 5;
  TimePoint origin{};
  std::vector<double> occ_up;
  std::vector<double> occ_down;

  std::size_t length() const { return occ_up.size(); }
  void validate() const;
};

/// Incident on one node covering timesteps [start, start + duration).
struct IncidentRecord {
  NodeId node_id = 0;
  std::int64_t start = 0;
  std::int64_t duration = 1;

  std::int64_t end() const { return start + duration; }
  bool contains(std::int64_t t) const { return t >= start && t < end(); }
  bool overlaps(std::int64_t first, std::int64_t last) const { return first < end() && last >= start; }
};

struct WindowRecord {
  std::int64_t end_index = 0;
  FeatureWindow window;
  Label label = Label::normal;
};

struct NodeWindows {
  NodeId node_id = 0;
  std::vector<WindowRecord> windows;
};

struct LabeledWindow {
  NodeId node_id = 0;
  std::int64_t end_index = 0;
  FeatureWindow window;
  Label label = Label::normal;
};

enum class Provenance { train, validation, test };
const char* to_string(Provenance p);

struct Dataset {
  std::vector<LabeledWindow> windows;
  Provenance provenance = Provenance::train;

  std::size_t count(Label label) const;
  /// Rows belonging to one node, in stored order.
  SampleMatrix matrix_for(NodeId node) const;
  SampleMatrix matrix() const;
};

/// Traffic pattern shared by every node in one planted cluster, plus the site
/// attributes its regions report.
struct ClusterArchetype {
  double base_occupancy = 0.06;
  double peak_occupancy = 0.22;
  /// Downstream occupancy runs (1 + gap) times upstream: a persistent negative
  /// occupancy difference typical of merges and lane drops.
  double downstream_gap = 0.0;
  double am_peak = 0.33;  ///< fraction of the recording day
  double pm_peak = 0.71;
  double peak_width = 0.07;
  RegionProfile profile;
};

struct GeneratorConfig {
  int nodes = 24;
  int days = 13;
  int train_days = 10;
  /// Bins per recording day: 2640 records over 10 days gives 264.
  int records_per_day = 264;
  int timestep_minutes = 5;
  std::string start = "2016-01-01T00:00:00";
  std::vector<ClusterArchetype> clusters{ClusterArchetype{}};
  /// Empty assigns contiguous equal blocks of nodes to clusters.
  std::vector<int> cluster_of_node;
  /// Standard deviation of a per-node offset added to its cluster's
  /// downstream_gap, so regions in one cluster are alike but not identical.
  double gap_jitter = 0.0;
  double noise_sd = 0.01;
  double noise_ar = 0.8;
  /// Probability that a node sees an incident on a given test day.
  double incident_rate = 0.6;
  double delta = 0.1;
  int duration_min = 3;
  int duration_max = 8;
  int ramp_steps = 2;
  bool confounders = true;
  /// Probability per node-timestep of a compression-wave pulse.
  double confounder_rate = 0.005;
  double confounder_magnitude = 0.08;
  /// Probability that a region's reported attributes deviate from its cluster's.
  double profile_noise = 0.0;
  /// The road network is this many separate freeway chains of contiguous nodes.
  int road_segments = 1;
  std::uint64_t seed = 1;

  void validate() const;
  int cluster_of(int node_index) const;
};

struct SyntheticData {
  std::vector<TrafficSeries> series;
  std::vector<IncidentRecord> incidents;
  std::vector<RegionProfile> profiles;
  std::vector<std::pair<NodeId, NodeId>> adjacency;  ///< freeway chains in node order
  std::vector<int> cluster_of_node;
};

/// Deterministic in cfg (including seed). Node ids are 1..nodes.
SyntheticData generate_synthetic(const GeneratorConfig& cfg);

/// occ_up - occ_down per timestep.
std::vector<double> occupancy_difference(const TrafficSeries& s);

/// Stride-1 windows of `width` values. A window is an incident window iff its
/// last timestep lies inside one of `incidents` (which must belong to this node).
std::vector<WindowRecord> windowize(std::span<const double> diff, int width,
                                    std::span<const IncidentRecord> incidents);

NodeWindows node_windows(const TrafficSeries& s, int width, std::span<const IncidentRecord> incidents);

struct SplitConfig {
  int window = 4;
  int records_per_day = 264;
  int train_days = 10;
  double validation_fraction = 0.2;
  int test_incident_windows = 60;
  int test_normal_windows = 1140;
  int validation_incident_windows = 60;
  /// Normal validation windows kept from the carved pool (spread evenly over
  /// nodes) so the validation mix mirrors the test mix; 0 keeps them all.
  int validation_normal_windows = 1140;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Splits {
  Dataset train;
  Dataset validation;
  Dataset test;
  /// Incidents with at least one window in the matching split.
  std::vector<IncidentRecord> test_incidents;
  std::vector<IncidentRecord> validation_incidents;
  std::vector<std::pair<NodeId, std::size_t>> train_counts;
};

/// Train: incident-free windows from the first train_days (the last
/// validation_fraction of each node's span is carved off as validation
/// normals, subsampled to validation_normal_windows). Test: held-out windows mixed to the configured incident/normal
/// quota; normal test windows never overlap an incident. Validation
/// incidents come from incidents not used by the test split.
Splits make_splits(std::span<const NodeWindows> windows, std::span<const IncidentRecord> incidents,
                   const SplitConfig& cfg);

/// Stable FNV-1a digest of (node, end_index) keys; identifies a split.
std::uint64_t split_hash(const Dataset& data);

struct LoadedData {
  std::vector<TrafficSeries> series;
  std::vector<IncidentRecord> incidents;
};

/// series: node_id,timestamp,occ_up,occ_down; incidents: node_id,start_timestamp,duration_steps.
LoadedData load_csv(const std::string& series_path, const std::string& incidents_path, int timestep_minutes = 5);
void write_csv(const std::string& series_path, const std::string& incidents_path,
               std::span<const TrafficSeries> series, std::span<const IncidentRecord> incidents);

/// node_id,end_index,f1..fd,label
void write_dataset_csv(const std::string& path, const Dataset& data);

}  // namespace nlaid
