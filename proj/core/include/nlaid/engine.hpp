#pragma once

// Network Lasso over a graph of one-class SVMs, solved with scaled-form ADMM:
//
//   minimise  sum_t l_t(w_t, b_t) + lambda * sum_{(j,k)} a_jk ||w_j - w_k||_2
//
// Node w-updates, edge z-updates and dual u-updates each run as an
// index-parallel phase separated by barriers. Only w is coupled; every b_t
// stays private to its node.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlaid/ocsvm.hpp"
#include "nlaid/parallel.hpp"

namespace nlaid {

using NodeId = std::int64_t;

struct NodeProblem {
  NodeId id = 0;
  SampleMatrix data;
  LossConfig loss;
};

struct WeightedEdge {
  NodeId j = 0;
  NodeId k = 0;
  double weight = 1.0;
};

/// Where an edge endpoint sits: `first` is the lower node id (j), `second` is k.
enum class EdgeSide : std::uint8_t { first, second };

struct Incidence {
  std::size_t edge;
  EdgeSide side;
};

class ProblemGraph {
 public:
  /// Validates structure: unique ids, consistent dimension, no self-loops,
  /// no duplicates, known endpoints, positive weights. Edges are stored with
  /// j < k.
  ProblemGraph(std::vector<NodeProblem> nodes, std::vector<WeightedEdge> edges);

  const std::vector<NodeProblem>& nodes() const { return nodes_; }
  const std::vector<WeightedEdge>& edges() const { return edges_; }
  /// Index pairs (j, k) of each edge into nodes().
  const std::vector<std::pair<std::size_t, std::size_t>>& edge_index() const { return edge_index_; }
  const std::vector<Incidence>& incidences(std::size_t node) const { return incidences_[node]; }
  std::size_t dim() const { return dim_; }
  std::size_t index_of(NodeId id) const;

 private:
  std::vector<NodeProblem> nodes_;
  std::vector<WeightedEdge> edges_;
  std::vector<std::pair<std::size_t, std::size_t>> edge_index_;
  std::vector<std::vector<Incidence>> incidences_;
  std::size_t dim_ = 0;
};

struct EdgeState {
  Vector z_jk, z_kj;
  Vector u_jk, u_kj;

  static EdgeState zeros(std::size_t dim);
};

struct SolverConfig {
  double lambda = 0.0;
  double rho = 1.0;
  double eps_primal = 1e-3;
  double eps_dual = 1e-3;
  int max_iter = 2000;
  double inner_tol = 1e-6;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  double elapsed_ms = 0.0;
};

enum class Termination { converged, max_iter };

const char* to_string(Termination t);

struct SolveTrace {
  std::vector<IterationRecord> records;
  Termination termination = Termination::max_iter;

  int iterations() const { return static_cast<int>(records.size()); }
  /// Bitwise comparison of everything except wall-clock timings.
  bool same_path(const SolveTrace& other) const;
};

struct NetworkSolution {
  std::vector<ModelParams> models;  ///< indexed like ProblemGraph::nodes()
  std::vector<EdgeState> edges;     ///< indexed like ProblemGraph::edges()
  std::vector<DualState> duals;     ///< per-node SMO warm-start state
  SolveTrace trace;
};

class NodeSolverFailure : public SolverFailure {
 public:
  NodeSolverFailure(NodeId node, const SolverFailure& cause);
  NodeId node() const { return node_; }

 private:
  NodeId node_;
};

/// sum_t l_t(w_t, b_t) + lambda * sum a_jk ||w_j - w_k||.
double network_objective(std::span<const ModelParams> models, const ProblemGraph& graph,
                         double lambda);

/// Exact minimiser of c ||z_jk - z_kj|| + rho/2 (||p - z_jk||^2 + ||q - z_kj||^2).
std::pair<Vector, Vector> z_update_edge(const Vector& p, const Vector& q, double c, double rho);

/// u + w - z.
Vector u_update_edge(const Vector& u, const Vector& w, const Vector& z);

struct ResidualNorms {
  double primal = 0.0;
  double dual = 0.0;
};

/// ||stacked (w_t - z_ti)||_2 and rho * ||stacked (z - z_prev)||_2.
ResidualNorms residuals(const ProblemGraph& graph, std::span<const ModelParams> models,
                        std::span<const EdgeState> edges, std::span<const EdgeState> previous,
                        double rho);

/// Runs ADMM from zero (or from `warm`, when given) until both residuals are
/// below tolerance or max_iter is reached. lambda == 0 and edgeless graphs are
/// solved directly as independent standalone fits.
NetworkSolution admm_solve(const ProblemGraph& graph, const SolverConfig& cfg,
                           const NetworkSolution* warm = nullptr);

struct PathEntry {
  double lambda = 0.0;
  NetworkSolution solution;
};

/// Solves an ascending lambda grid, warm-starting each entry from the last.
std::vector<PathEntry> regularization_path(const ProblemGraph& graph,
                                           std::span<const double> lambda_grid,
                                           const SolverConfig& cfg);

struct Clustering {
  std::vector<int> labels;  ///< per node, numbered by first appearance
  int count = 0;
};

/// Single-linkage grouping of nodes whose weight vectors lie within tol.
Clustering cluster_assignments(std::span<const ModelParams> models, double tol);

}  // namespace nlaid
