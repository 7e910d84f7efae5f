#include "nlaid/traffic_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "nlaid/csv.hpp"

namespace nlaid {

namespace {

// Attribute weights sum in floating point; 0.4 + 0.2 + 0.1 must still meet 0.7.
constexpr double kThresholdSlack = 1e-12;

template <std::size_t N>
bool in_vocabulary(const std::string& value, const std::string_view (&vocab)[N]) {
  return std::find(std::begin(vocab), std::end(vocab), value) != std::end(vocab);
}

std::pair<NodeId, NodeId> ordered(NodeId a, NodeId b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

FusedGraph assemble(std::span<const NodeId> nodes, std::map<std::pair<NodeId, NodeId>, GraphEdge> edges) {
  FusedGraph g;
  g.nodes.assign(nodes.begin(), nodes.end());
  g.edges.reserve(edges.size());
  for (auto& [key, edge] : edges) g.edges.push_back(edge);
  return g;
}

std::unordered_map<NodeId, const RegionProfile*> index_profiles(std::span<const NodeId> nodes,
                                                                std::span<const RegionProfile> profiles) {
  std::unordered_map<NodeId, const RegionProfile*> by_id;
  for (const auto& p : profiles) by_id.emplace(p.node_id, &p);
  for (NodeId id : nodes) {
    if (!by_id.count(id)) throw InvalidInput("no region profile for node " + std::to_string(id));
  }
  return by_id;
}

std::map<std::pair<NodeId, NodeId>, GraphEdge> geo_edges(std::span<const NodeId> nodes,
                                                         std::span<const RegionProfile> profiles,
                                                         const GraphConfig& cfg) {
  const auto by_id = index_profiles(nodes, profiles);
  std::map<std::pair<NodeId, NodeId>, GraphEdge> out;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      const auto& p = *by_id.at(nodes[a]);
      const auto& q = *by_id.at(nodes[b]);
      bool matched = geo_similarity(p, q, cfg.weights) >= cfg.tau - kThresholdSlack;
      if (!matched && cfg.max_distance_km > 0.0) matched = haversine_km(p, q) <= cfg.max_distance_km;
      if (matched) {
        const auto key = ordered(nodes[a], nodes[b]);
        out.emplace(key, GraphEdge{key.first, key.second, cfg.geo_weight, EdgeOrigin::geo});
      }
    }
  }
  return out;
}

}  // namespace

void RegionProfile::validate() const {
  const auto id = std::to_string(node_id);
  if (!(latitude >= -90.0 && latitude <= 90.0) || !(longitude >= -180.0 && longitude <= 180.0)) {
    throw InvalidInput("profile " + id + ": coordinates out of range");
  }
  if (!in_vocabulary(location_class, kLocationClasses)) {
    throw InvalidInput("profile " + id + ": unknown location_class '" + location_class + "'");
  }
  if (!in_vocabulary(adjacent_config, kAdjacentConfigs)) {
    throw InvalidInput("profile " + id + ": unknown adjacent_config '" + adjacent_config + "'");
  }
  if (lane_count < 1) throw InvalidInput("profile " + id + ": lane_count must be positive");
}

const char* to_string(EdgeOrigin origin) { return origin == EdgeOrigin::road ? "road" : "geo"; }

EdgeOrigin parse_edge_origin(std::string_view text) {
  if (text == "road") return EdgeOrigin::road;
  if (text == "geo") return EdgeOrigin::geo;
  throw InvalidInput("unknown edge origin '" + std::string(text) + "'");
}

const char* to_string(GraphVariant v) {
  switch (v) {
    case GraphVariant::road: return "road";
    case GraphVariant::geo: return "geo";
    case GraphVariant::fused: return "fused";
  }
  return "fused";
}

GraphVariant parse_graph_variant(std::string_view text) {
  if (text == "road") return GraphVariant::road;
  if (text == "geo") return GraphVariant::geo;
  if (text == "fused") return GraphVariant::fused;
  throw InvalidInput("unknown graph variant '" + std::string(text) + "' (road, geo, fused)");
}

std::size_t FusedGraph::count(EdgeOrigin origin) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [&](const GraphEdge& e) { return e.origin == origin; }));
}

std::vector<WeightedEdge> FusedGraph::weighted_edges() const {
  std::vector<WeightedEdge> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back({e.j, e.k, e.weight});
  return out;
}

FusedGraph FusedGraph::induced(std::span<const NodeId> keep) const {
  const std::unordered_set<NodeId> kept(keep.begin(), keep.end());
  FusedGraph g;
  g.nodes.assign(keep.begin(), keep.end());
  for (const auto& e : edges) {
    if (kept.count(e.j) && kept.count(e.k)) g.edges.push_back(e);
  }
  return g;
}

FusedGraph build_road_graph(std::span<const NodeId> nodes, std::span<const std::pair<NodeId, NodeId>> adjacency,
                            double road_weight) {
  const std::unordered_set<NodeId> known(nodes.begin(), nodes.end());
  if (known.size() != nodes.size()) throw InvalidInput("build_road_graph: duplicate node ids");
  std::map<std::pair<NodeId, NodeId>, GraphEdge> edges;
  for (const auto& [from, to] : adjacency) {
    if (!known.count(from) || !known.count(to)) {
      throw InvalidInput("build_road_graph: unknown node in adjacency (" + std::to_string(from) + ", " +
                         std::to_string(to) + ")");
    }
    if (from == to) throw InvalidInput("build_road_graph: self-loop on node " + std::to_string(from));
    const auto key = ordered(from, to);
    edges.emplace(key, GraphEdge{key.first, key.second, road_weight, EdgeOrigin::road});
  }
  return assemble(nodes, std::move(edges));
}

double geo_similarity(const RegionProfile& p, const RegionProfile& q, const SimilarityWeights& w) {
  double score = 0.0;
  if (p.location_class == q.location_class) score += w.location_class;
  if (p.has_sub_streets == q.has_sub_streets) score += w.has_sub_streets;
  if (p.adjacent_config == q.adjacent_config) score += w.adjacent_config;
  if (std::abs(p.lane_count - q.lane_count) <= 1) score += w.lane_count;
  return score;
}

double haversine_km(const RegionProfile& p, const RegionProfile& q) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  const double dlat = (q.latitude - p.latitude) * kDeg;
  const double dlon = (q.longitude - p.longitude) * kDeg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(p.latitude * kDeg) * std::cos(q.latitude * kDeg) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

FusedGraph fuse_graph(const FusedGraph& road, std::span<const RegionProfile> profiles, const GraphConfig& cfg) {
  if (cfg.tau < 0.0) throw InvalidInput("fuse_graph: tau must be non-negative");
  std::map<std::pair<NodeId, NodeId>, GraphEdge> edges;
  for (const auto& e : road.edges) edges.emplace(ordered(e.j, e.k), e);
  for (auto& [key, edge] : geo_edges(road.nodes, profiles, cfg)) edges.emplace(key, edge);
  return assemble(road.nodes, std::move(edges));
}

FusedGraph ablation_variant(GraphVariant kind, std::span<const NodeId> nodes,
                            std::span<const std::pair<NodeId, NodeId>> adjacency,
                            std::span<const RegionProfile> profiles, const GraphConfig& cfg) {
  switch (kind) {
    case GraphVariant::road: return build_road_graph(nodes, adjacency, cfg.road_weight);
    case GraphVariant::geo: return assemble(nodes, geo_edges(nodes, profiles, cfg));
    case GraphVariant::fused: return fuse_graph(build_road_graph(nodes, adjacency, cfg.road_weight), profiles, cfg);
  }
  throw InvalidInput("ablation_variant: unknown kind");
}

std::vector<RegionProfile> read_profiles_csv(const std::string& path) {
  CsvReader reader(path, {"node_id", "lat", "lon", "location_class", "has_sub_streets", "adjacent_config", "lane_count"});
  std::vector<RegionProfile> out;
  std::unordered_set<NodeId> seen;
  std::vector<std::string> f;
  while (reader.next(f)) {
    RegionProfile p;
    try {
      p.node_id = parse_int(f[0]);
      p.latitude = parse_real(f[1]);
      p.longitude = parse_real(f[2]);
      p.location_class = f[3];
      p.has_sub_streets = parse_bool(f[4]);
      p.adjacent_config = f[5];
      p.lane_count = static_cast<int>(parse_int(f[6]));
      p.validate();
    } catch (const InvalidInput& e) {
      reader.fail(e.what());
    }
    if (!seen.insert(p.node_id).second) reader.fail("duplicate node_id " + std::to_string(p.node_id));
    out.push_back(std::move(p));
  }
  return out;
}

void write_profiles_csv(const std::string& path, std::span<const RegionProfile> profiles) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "node_id,lat,lon,location_class,has_sub_streets,adjacent_config,lane_count\n";
  for (const auto& p : profiles) {
    out << p.node_id << ',' << format_real(p.latitude) << ',' << format_real(p.longitude) << ',' << p.location_class
        << ',' << (p.has_sub_streets ? "true" : "false") << ',' << p.adjacent_config << ',' << p.lane_count << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

std::vector<std::pair<NodeId, NodeId>> read_adjacency_csv(const std::string& path) {
  CsvReader reader(path, {"from", "to"});
  std::vector<std::pair<NodeId, NodeId>> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    try {
      out.emplace_back(parse_int(f[0]), parse_int(f[1]));
    } catch (const InvalidInput& e) {
      reader.fail(e.what());
    }
  }
  return out;
}

void write_adjacency_csv(const std::string& path, std::span<const std::pair<NodeId, NodeId>> adjacency) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "from,to\n";
  for (const auto& [a, b] : adjacency) out << a << ',' << b << '\n';
  if (!out) throw IoError("failed writing " + path);
}

void write_edges_csv(const std::string& path, const FusedGraph& graph) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "from,to,weight,origin\n";
  for (const auto& e : graph.edges) {
    out << e.j << ',' << e.k << ',' << format_real(e.weight) << ',' << to_string(e.origin) << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

FusedGraph read_edges_csv(const std::string& path, std::span<const NodeId> nodes) {
  CsvReader reader(path, {"from", "to", "weight", "origin"});
  const std::unordered_set<NodeId> known(nodes.begin(), nodes.end());
  std::map<std::pair<NodeId, NodeId>, GraphEdge> edges;
  std::vector<std::string> f;
  while (reader.next(f)) {
    GraphEdge e;
    try {
      e.j = parse_int(f[0]);
      e.k = parse_int(f[1]);
      e.weight = parse_real(f[2]);
      e.origin = parse_edge_origin(f[3]);
    } catch (const InvalidInput& err) {
      reader.fail(err.what());
    }
    if (e.j == e.k) reader.fail("self-loop");
    if (!known.count(e.j) || !known.count(e.k)) reader.fail("unknown node");
    if (!(e.weight > 0.0)) reader.fail("weight must be positive");
    const auto key = ordered(e.j, e.k);
    e.j = key.first;
    e.k = key.second;
    if (!edges.emplace(key, e).second) reader.fail("duplicate edge");
  }
  return assemble(nodes, std::move(edges));
}

}  // namespace nlaid
