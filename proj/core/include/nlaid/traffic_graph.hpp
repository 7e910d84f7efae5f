#pragma once

// Coupling graph for the traffic network: road adjacency fused with edges
// between regions whose site characteristics match.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlaid/engine.hpp"

namespace nlaid {

/// Vocabularies for the categorical site attributes.
inline constexpr std::string_view kLocationClasses[] = {"cbd", "urban", "suburban", "rural"};
inline constexpr std::string_view kAdjacentConfigs[] = {"merge", "diverge", "plain", "interchange"};

struct RegionProfile {
  NodeId node_id = 0;
  double latitude = 0.0;
  double longitude = 0.0;
  std::string location_class = "urban";
  bool has_sub_streets = false;
  std::string adjacent_config = "plain";
  int lane_count = 2;

  void validate() const;
};

enum class EdgeOrigin { road, geo };
const char* to_string(EdgeOrigin origin);
EdgeOrigin parse_edge_origin(std::string_view text);

struct GraphEdge {
  NodeId j = 0;
  NodeId k = 0;
  double weight = 1.0;
  EdgeOrigin origin = EdgeOrigin::road;
};

struct FusedGraph {
  std::vector<NodeId> nodes;
  std::vector<GraphEdge> edges;  ///< j < k, sorted by (j, k), at most one per pair

  std::size_t count(EdgeOrigin origin) const;
  std::vector<WeightedEdge> weighted_edges() const;
  /// Subgraph induced on `keep` (order preserved from `keep`).
  FusedGraph induced(std::span<const NodeId> keep) const;
};

struct SimilarityWeights {
  double location_class = 0.4;
  double has_sub_streets = 0.2;
  double adjacent_config = 0.3;
  double lane_count = 0.1;
};

struct GraphConfig {
  SimilarityWeights weights;
  double tau = 0.6;
  double road_weight = 1.0;
  double geo_weight = 1.0;
  /// Pairs closer than this also receive a geo edge; 0 disables.
  double max_distance_km = 0.0;
};

enum class GraphVariant { road, geo, fused };
const char* to_string(GraphVariant v);
GraphVariant parse_graph_variant(std::string_view text);

FusedGraph build_road_graph(std::span<const NodeId> nodes,
                            std::span<const std::pair<NodeId, NodeId>> adjacency,
                            double road_weight = 1.0);

/// Weighted attribute match in [0, 1]; lane counts match within one lane.
double geo_similarity(const RegionProfile& p, const RegionProfile& q,
                      const SimilarityWeights& weights = {});

/// Great-circle distance in kilometres.
double haversine_km(const RegionProfile& p, const RegionProfile& q);

/// Road edges plus a geo edge for every pair scoring at least tau. A pair that
/// is both keeps the road label.
FusedGraph fuse_graph(const FusedGraph& road, std::span<const RegionProfile> profiles,
                      const GraphConfig& cfg);

FusedGraph ablation_variant(GraphVariant kind, std::span<const NodeId> nodes,
                            std::span<const std::pair<NodeId, NodeId>> adjacency,
                            std::span<const RegionProfile> profiles, const GraphConfig& cfg);

std::vector<RegionProfile> read_profiles_csv(const std::string& path);
void write_profiles_csv(const std::string& path, std::span<const RegionProfile> profiles);
std::vector<std::pair<NodeId, NodeId>> read_adjacency_csv(const std::string& path);
void write_adjacency_csv(const std::string& path, std::span<const std::pair<NodeId, NodeId>> adjacency);
void write_edges_csv(const std::string& path, const FusedGraph& graph);
FusedGraph read_edges_csv(const std::string& path, std::span<const NodeId> nodes);

}  // namespace nlaid
