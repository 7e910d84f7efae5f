#pragma once

// Solution snapshot: whitespace-separated columnar text, one record per line.
//
//   nlaid-snapshot 1
//   dim <d>
//   node <id> <w_1> ... <w_d> <b>
//   edge <j> <k> <z_jk[d]> <z_kj[d]> <u_jk[d]> <u_kj[d]>
//
// Reals are written with 17 significant digits so a read/write cycle is exact.
// Lines starting with '#' are comments.

#include <iosfwd>
#include <string>
#include <vector>

#include "nlaid/engine.hpp"

namespace nlaid {

struct Snapshot {
  struct Node {
    NodeId id = 0;
    ModelParams params;
  };
  struct Edge {
    NodeId j = 0;
    NodeId k = 0;
    EdgeState state;
  };

  std::size_t dim = 0;
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  static Snapshot from_solution(const ProblemGraph& graph, const NetworkSolution& solution);
  const ModelParams& model(NodeId id) const;
};

void write_snapshot(std::ostream& out, const Snapshot& snap);
Snapshot read_snapshot(std::istream& in);

void save_snapshot(const std::string& path, const Snapshot& snap);
Snapshot load_snapshot(const std::string& path);

}  // namespace nlaid
