#include <gtest/gtest.h>

#include <filesystem>

#include "nlaid/traffic_graph.hpp"

using namespace nlaid;

namespace {

RegionProfile profile(NodeId id, std::string loc, bool sub, std::string adj, int lanes) {
  RegionProfile p;
  p.node_id = id;
  p.latitude = 38.5 + 0.01 * static_cast<double>(id);
  p.longitude = -121.7;
  p.location_class = std::move(loc);
  p.has_sub_streets = sub;
  p.adjacent_config = std::move(adj);
  p.lane_count = lanes;
  return p;
}

// sim(1,3) = 0.7 (class + config), sim(2,3) = 0.3 (config only), sim(1,2) = 0.
std::vector<RegionProfile> three_profiles() {
  return {profile(1, "urban", true, "merge", 2), profile(2, "rural", false, "diverge", 5),
          profile(3, "urban", false, "merge", 5)};
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "nlaid_graph_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(RoadGraph, Examples) {
  const std::vector<NodeId> nodes{1, 2, 3};
  const std::vector<std::pair<NodeId, NodeId>> chain{{1, 2}, {2, 3}};
  EXPECT_EQ(build_road_graph(nodes, chain).edges.size(), 2u);
  const std::vector<std::pair<NodeId, NodeId>> dup{{1, 2}, {2, 1}};
  const auto g = build_road_graph(nodes, dup);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].j, 1);
  EXPECT_EQ(g.edges[0].k, 2);
  EXPECT_EQ(g.edges[0].origin, EdgeOrigin::road);
  EXPECT_TRUE(build_road_graph(nodes, {}).edges.empty());
}

TEST(RoadGraph, Errors) {
  const std::vector<NodeId> nodes{1, 2};
  const std::vector<std::pair<NodeId, NodeId>> unknown{{1, 9}};
  EXPECT_THROW(build_road_graph(nodes, unknown), InvalidInput);
  const std::vector<std::pair<NodeId, NodeId>> loop{{1, 1}};
  EXPECT_THROW(build_road_graph(nodes, loop), InvalidInput);
}

TEST(GeoSimilarity, Examples) {
  const auto a = profile(1, "urban", true, "merge", 3);
  EXPECT_DOUBLE_EQ(geo_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(geo_similarity(a, profile(2, "rural", false, "diverge", 6)), 0.0);
  EXPECT_DOUBLE_EQ(geo_similarity(a, profile(2, "urban", false, "diverge", 4)), 0.5);
  EXPECT_DOUBLE_EQ(geo_similarity(a, profile(2, "urban", false, "diverge", 2)), 0.5);
}

TEST(GeoSimilarity, SymmetricAndBounded) {
  const char* locs[] = {"cbd", "urban", "suburban", "rural"};
  const char* adjs[] = {"merge", "diverge", "plain", "interchange"};
  std::vector<RegionProfile> all;
  for (int i = 0; i < 32; ++i) all.push_back(profile(i + 1, locs[i % 4], i % 3 == 0, adjs[(i / 4) % 4], 1 + i % 5));
  for (const auto& p : all) {
    for (const auto& q : all) {
      const double s = geo_similarity(p, q);
      EXPECT_DOUBLE_EQ(s, geo_similarity(q, p));
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 1.0 + 1e-12);
    }
  }
}

TEST(FuseGraph, ThreeNodeExample) {
  const std::vector<NodeId> nodes{1, 2, 3};
  const std::vector<std::pair<NodeId, NodeId>> adj{{1, 2}};
  const auto road = build_road_graph(nodes, adj);
  const auto profiles = three_profiles();
  ASSERT_NEAR(geo_similarity(profiles[0], profiles[2]), 0.7, 1e-12);
  ASSERT_NEAR(geo_similarity(profiles[1], profiles[2]), 0.3, 1e-12);
  GraphConfig cfg;
  cfg.tau = 0.6;
  const auto fused = fuse_graph(road, profiles, cfg);
  ASSERT_EQ(fused.edges.size(), 2u);
  EXPECT_EQ(fused.edges[0].j, 1);
  EXPECT_EQ(fused.edges[0].k, 2);
  EXPECT_EQ(fused.edges[0].origin, EdgeOrigin::road);
  EXPECT_EQ(fused.edges[1].j, 1);
  EXPECT_EQ(fused.edges[1].k, 3);
  EXPECT_EQ(fused.edges[1].origin, EdgeOrigin::geo);

  const auto via = ablation_variant(GraphVariant::fused, nodes, adj, profiles, cfg);
  EXPECT_EQ(via.edges.size(), 2u);
}

TEST(FuseGraph, TauExtremes) {
  const std::vector<NodeId> nodes{1, 2, 3};
  const std::vector<std::pair<NodeId, NodeId>> adj{{2, 3}};
  const auto road = build_road_graph(nodes, adj);
  const auto profiles = three_profiles();
  GraphConfig cfg;
  cfg.tau = 1.01;
  const auto none = fuse_graph(road, profiles, cfg);
  ASSERT_EQ(none.edges.size(), road.edges.size());
  EXPECT_EQ(none.count(EdgeOrigin::geo), 0u);
  cfg.tau = 0.0;
  const auto complete = fuse_graph(road, profiles, cfg);
  EXPECT_EQ(complete.edges.size(), 3u);
  EXPECT_EQ(complete.count(EdgeOrigin::road), 1u);
  cfg.tau = -0.1;
  EXPECT_THROW(fuse_graph(road, profiles, cfg), InvalidInput);
}

TEST(FuseGraph, EdgeSetShrinksAsTauGrows) {
  const char* locs[] = {"cbd", "urban", "suburban"};
  std::vector<RegionProfile> profiles;
  std::vector<NodeId> nodes;
  for (int i = 0; i < 12; ++i) {
    profiles.push_back(profile(i + 1, locs[i % 3], i % 2 == 0, i % 4 ? "plain" : "merge", 2 + i % 3));
    nodes.push_back(i + 1);
  }
  const auto road = build_road_graph(nodes, {});
  std::size_t previous = std::numeric_limits<std::size_t>::max();
  for (double tau = 0.0; tau <= 1.05; tau += 0.05) {
    GraphConfig cfg;
    cfg.tau = tau;
    const auto n = fuse_graph(road, profiles, cfg).edges.size();
    EXPECT_LE(n, previous);
    previous = n;
  }
}

TEST(AblationVariant, OriginsMatchKind) {
  const std::vector<NodeId> nodes{1, 2, 3};
  const std::vector<std::pair<NodeId, NodeId>> adj{{1, 2}, {2, 3}};
  const auto profiles = three_profiles();
  GraphConfig cfg;
  const auto road = ablation_variant(GraphVariant::road, nodes, adj, profiles, cfg);
  EXPECT_EQ(road.count(EdgeOrigin::geo), 0u);
  EXPECT_EQ(road.edges.size(), 2u);
  const auto geo = ablation_variant(GraphVariant::geo, nodes, adj, profiles, cfg);
  EXPECT_EQ(geo.count(EdgeOrigin::road), 0u);
  EXPECT_EQ(geo.edges.size(), 1u);
  EXPECT_EQ(parse_graph_variant("geo"), GraphVariant::geo);
  EXPECT_THROW(parse_graph_variant("roads"), InvalidInput);
}

TEST(FusedGraph, InducedSubgraph) {
  const std::vector<NodeId> nodes{1, 2, 3, 4};
  const std::vector<std::pair<NodeId, NodeId>> adj{{1, 2}, {2, 3}, {3, 4}, {1, 4}};
  const auto g = build_road_graph(nodes, adj);
  const std::vector<NodeId> keep{1, 3, 4};
  const auto sub = g.induced(keep);
  EXPECT_EQ(sub.nodes, keep);
  EXPECT_EQ(sub.edges.size(), 2u);
}

TEST(GraphCsv, RoundTrip) {
  const auto profiles = three_profiles();
  const auto ppath = scratch("profiles.csv").string();
  write_profiles_csv(ppath, profiles);
  const auto back = read_profiles_csv(ppath);
  ASSERT_EQ(back.size(), profiles.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].node_id, profiles[i].node_id);
    EXPECT_EQ(back[i].latitude, profiles[i].latitude);
    EXPECT_EQ(back[i].location_class, profiles[i].location_class);
    EXPECT_EQ(back[i].has_sub_streets, profiles[i].has_sub_streets);
    EXPECT_EQ(back[i].lane_count, profiles[i].lane_count);
  }

  const std::vector<std::pair<NodeId, NodeId>> adj{{1, 2}, {2, 3}};
  const auto apath = scratch("adjacency.csv").string();
  write_adjacency_csv(apath, adj);
  EXPECT_EQ(read_adjacency_csv(apath), adj);

  const std::vector<NodeId> nodes{1, 2, 3};
  const auto fused = fuse_graph(build_road_graph(nodes, adj), profiles, GraphConfig{});
  const auto epath = scratch("edges.csv").string();
  write_edges_csv(epath, fused);
  const auto again = read_edges_csv(epath, nodes);
  ASSERT_EQ(again.edges.size(), fused.edges.size());
  for (std::size_t i = 0; i < fused.edges.size(); ++i) {
    EXPECT_EQ(again.edges[i].j, fused.edges[i].j);
    EXPECT_EQ(again.edges[i].origin, fused.edges[i].origin);
    EXPECT_EQ(again.edges[i].weight, fused.edges[i].weight);
  }
  EXPECT_THROW(read_profiles_csv(scratch("missing.csv").string()), IoError);
}
