#include "nlaid/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace nlaid {

namespace {

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ProblemGraph::ProblemGraph(std::vector<NodeProblem> nodes, std::vector<WeightedEdge> edges)
    : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InvalidInput("ProblemGraph: no nodes");
  dim_ = static_cast<std::size_t>(nodes_.front().data.cols());
  std::unordered_map<NodeId, std::size_t> index;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (!index.emplace(node.id, i).second) {
      throw InvalidInput("ProblemGraph: duplicate node id " + std::to_string(node.id));
    }
    if (node.data.rows() == 0) {
      throw InvalidInput("ProblemGraph: node " + std::to_string(node.id) + " has no data");
    }
    if (static_cast<std::size_t>(node.data.cols()) != dim_) {
      throw InvalidInput("ProblemGraph: node " + std::to_string(node.id) + " has a different feature dimension");
    }
    node.loss.validate();
    if (node.loss.n != static_cast<std::size_t>(node.data.rows())) {
      throw InvalidInput("ProblemGraph: node " + std::to_string(node.id) + " LossConfig.n mismatch");
    }
  }

  std::set<std::pair<NodeId, NodeId>> seen;
  incidences_.resize(nodes_.size());
  for (auto e : edges) {
    if (e.j == e.k) throw InvalidInput("ProblemGraph: self-loop on node " + std::to_string(e.j));
    if (e.j > e.k) std::swap(e.j, e.k);
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw InvalidInput("ProblemGraph: edge weights must be positive and finite");
    }
    const auto ij = index.find(e.j);
    const auto ik = index.find(e.k);
    if (ij == index.end() || ik == index.end()) {
      throw InvalidInput("ProblemGraph: edge (" + std::to_string(e.j) + ", " + std::to_string(e.k) +
                         ") references an unknown node");
    }
    if (!seen.emplace(e.j, e.k).second) {
      throw InvalidInput("ProblemGraph: duplicate edge (" + std::to_string(e.j) + ", " + std::to_string(e.k) + ")");
    }
    const std::size_t edge_id = edges_.size();
    edges_.push_back(e);
    edge_index_.emplace_back(ij->second, ik->second);
    incidences_[ij->second].push_back({edge_id, EdgeSide::first});
    incidences_[ik->second].push_back({edge_id, EdgeSide::second});
  }
}

std::size_t ProblemGraph::index_of(NodeId id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  throw InvalidInput("ProblemGraph: unknown node id " + std::to_string(id));
}

EdgeState EdgeState::zeros(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {Vector::Zero(d), Vector::Zero(d), Vector::Zero(d), Vector::Zero(d)};
}

void SolverConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("solver: lambda must be >= 0");
  if (!(rho > 0.0)) throw InvalidInput("solver: rho must be positive");
  if (!(eps_primal > 0.0) || !(eps_dual > 0.0)) throw InvalidInput("solver: tolerances must be positive");
  if (max_iter < 1) throw InvalidInput("solver: max_iter must be positive");
  if (!(inner_tol > 0.0)) throw InvalidInput("solver: inner_tol must be positive");
}

const char* to_string(Termination t) { return t == Termination::converged ? "converged" : "max_iter"; }

bool SolveTrace::same_path(const SolveTrace& other) const {
  if (termination != other.termination || records.size() != other.records.size()) return false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& a = records[i];
    const auto& b = other.records[i];
    if (a.iteration != b.iteration || !bitwise_equal(a.primal_residual, b.primal_residual) ||
        !bitwise_equal(a.dual_residual, b.dual_residual) || !bitwise_equal(a.objective, b.objective)) {
      return false;
    }
  }
  return true;
}

NodeSolverFailure::NodeSolverFailure(NodeId node, const SolverFailure& cause)
    : SolverFailure("node " + std::to_string(node) + ": " + cause.what(), cause.best(), cause.gap_bound()),
      node_(node) {}

double network_objective(std::span<const ModelParams> models, const ProblemGraph& graph, double lambda) {
  const auto& nodes = graph.nodes();
  if (models.size() != nodes.size()) throw InvalidInput("network_objective: missing node model");
  double total = 0.0;
  for (std::size_t t = 0; t < nodes.size(); ++t) {
    total += primal_objective(models[t], nodes[t].data, nodes[t].loss);
  }
  double penalty = 0.0;
  const auto& edges = graph.edges();
  const auto& idx = graph.edge_index();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    penalty += edges[e].weight * (models[idx[e].first].w - models[idx[e].second].w).norm();
  }
  return total + lambda * penalty;
}

std::pair<Vector, Vector> z_update_edge(const Vector& p, const Vector& q, double c, double rho) {
  if (!p.allFinite() || !q.allFinite() || !std::isfinite(c) || !std::isfinite(rho)) {
    throw InvalidInput("z_update_edge: non-finite input");
  }
  if (p.size() != q.size()) throw InvalidInput("z_update_edge: dimension mismatch");
  if (c < 0.0 || !(rho > 0.0)) throw InvalidInput("z_update_edge: need c >= 0 and rho > 0");
  if (c == 0.0) return {p, q};
  const double dist = (p - q).norm();
  if (rho * dist <= 2.0 * c) {
    Vector mid = 0.5 * (p + q);
    return {mid, mid};
  }
  const double theta = 1.0 - c / (rho * dist);
  return {theta * p + (1.0 - theta) * q, (1.0 - theta) * p + theta * q};
}

Vector u_update_edge(const Vector& u, const Vector& w, const Vector& z) {
  if (u.size() != w.size() || w.size() != z.size()) throw InvalidInput("u_update_edge: dimension mismatch");
  return u + w - z;
}

ResidualNorms residuals(const ProblemGraph& graph, std::span<const ModelParams> models,
                        std::span<const EdgeState> edges, std::span<const EdgeState> previous, double rho) {
  const auto& idx = graph.edge_index();
  if (edges.size() != idx.size() || previous.size() != idx.size()) {
    throw InvalidInput("residuals: edge state count mismatch");
  }
  double primal = 0.0;
  double dual = 0.0;
  for (std::size_t e = 0; e < idx.size(); ++e) {
    primal += (models[idx[e].first].w - edges[e].z_jk).squaredNorm();
    primal += (models[idx[e].second].w - edges[e].z_kj).squaredNorm();
    dual += (edges[e].z_jk - previous[e].z_jk).squaredNorm();
    dual += (edges[e].z_kj - previous[e].z_kj).squaredNorm();
  }
  return {std::sqrt(primal), rho * std::sqrt(dual)};
}

NetworkSolution admm_solve(const ProblemGraph& graph, const SolverConfig& cfg, const NetworkSolution* warm) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto& nodes = graph.nodes();
  const auto& edges = graph.edges();
  const auto& idx = graph.edge_index();
  const std::size_t n = nodes.size();
  const std::size_t m = edges.size();
  const std::size_t d = graph.dim();
  const Executor exec(cfg.workers);

  NetworkSolution sol;
  if (warm != nullptr && warm->models.size() == n && warm->edges.size() == m) {
    sol.models = warm->models;
    sol.edges = warm->edges;
    sol.duals = warm->duals;
  } else {
    sol.models.assign(n, ModelParams::zeros(d));
    sol.edges.assign(m, EdgeState::zeros(d));
  }
  sol.duals.resize(n);

  const LocalSolverOptions inner{cfg.inner_tol, 0};
  auto solve_node = [&](std::size_t t, std::span<const ProxTerm> prox) {
    try {
      sol.models[t] = solve_local(nodes[t].data, nodes[t].loss, prox, inner, &sol.duals[t]).params;
    } catch (const SolverFailure& failure) {
      throw NodeSolverFailure(nodes[t].id, failure);
    }
  };

  if (cfg.lambda == 0.0 || m == 0) {
    exec.for_each(n, [&](std::size_t t) { solve_node(t, {}); });
    for (std::size_t e = 0; e < m; ++e) {
      auto& s = sol.edges[e];
      s.z_jk = sol.models[idx[e].first].w;
      s.z_kj = sol.models[idx[e].second].w;
      s.u_jk.setZero(static_cast<Eigen::Index>(d));
      s.u_kj.setZero(static_cast<Eigen::Index>(d));
    }
    sol.trace.records.push_back({1, 0.0, 0.0, network_objective(sol.models, graph, cfg.lambda), elapsed_ms(start)});
    sol.trace.termination = Termination::converged;
    return sol;
  }

  std::vector<EdgeState> previous(m);
  std::vector<double> node_loss(n);
  sol.trace.termination = Termination::max_iter;

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    exec.for_each(n, [&](std::size_t t) {
      const auto& inc = graph.incidences(t);
      std::vector<ProxTerm> prox;
      prox.reserve(inc.size());
      for (const auto& [e, side] : inc) {
        const auto& s = sol.edges[e];
        if (side == EdgeSide::first) {
          prox.push_back({s.z_jk - s.u_jk, cfg.rho});
        } else {
          prox.push_back({s.z_kj - s.u_kj, cfg.rho});
        }
      }
      solve_node(t, prox);
    });

    previous = sol.edges;
    exec.for_each(m, [&](std::size_t e) {
      auto& s = sol.edges[e];
      const Vector p = sol.models[idx[e].first].w + s.u_jk;
      const Vector q = sol.models[idx[e].second].w + s.u_kj;
      std::tie(s.z_jk, s.z_kj) = z_update_edge(p, q, cfg.lambda * edges[e].weight, cfg.rho);
    });

    exec.for_each(m, [&](std::size_t e) {
      auto& s = sol.edges[e];
      s.u_jk = u_update_edge(s.u_jk, sol.models[idx[e].first].w, s.z_jk);
      s.u_kj = u_update_edge(s.u_kj, sol.models[idx[e].second].w, s.z_kj);
    });

    const auto r = residuals(graph, sol.models, sol.edges, previous, cfg.rho);
    exec.for_each(n, [&](std::size_t t) {
      node_loss[t] = primal_objective(sol.models[t], nodes[t].data, nodes[t].loss);
    });
    double objective = std::accumulate(node_loss.begin(), node_loss.end(), 0.0);
    double penalty = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      penalty += edges[e].weight * (sol.models[idx[e].first].w - sol.models[idx[e].second].w).norm();
    }
    objective += cfg.lambda * penalty;
    sol.trace.records.push_back({iter, r.primal, r.dual, objective, elapsed_ms(start)});

    if (r.primal < cfg.eps_primal && r.dual < cfg.eps_dual) {
      sol.trace.termination = Termination::converged;
      break;
    }
  }
  return sol;
}

std::vector<PathEntry> regularization_path(const ProblemGraph& graph, std::span<const double> lambda_grid,
                                           const SolverConfig& cfg) {
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0)) throw InvalidInput("regularization_path: lambdas must be non-negative");
    if (i > 0 && lambda_grid[i] < lambda_grid[i - 1]) {
      throw InvalidInput("regularization_path: lambda grid must be ascending");
    }
  }
  std::vector<PathEntry> path;
  path.reserve(lambda_grid.size());
  for (double lambda : lambda_grid) {
    SolverConfig step = cfg;
    step.lambda = lambda;
    const NetworkSolution* warm = path.empty() ? nullptr : &path.back().solution;
    path.push_back({lambda, admm_solve(graph, step, warm)});
  }
  return path;
}

Clustering cluster_assignments(std::span<const ModelParams> models, double tol) {
  if (tol < 0.0) throw InvalidInput("cluster_assignments: tol must be non-negative");
  const std::size_t n = models.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if ((models[a].w - models[b].w).norm() <= tol) {
        const auto ra = find(a);
        const auto rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  }
  Clustering out;
  out.labels.assign(n, -1);
  std::unordered_map<std::size_t, int> label_of_root;
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = find(i);
    auto [it, inserted] = label_of_root.emplace(root, out.count);
    if (inserted) ++out.count;
    out.labels[i] = it->second;
  }
  return out;
}

}  // namespace nlaid
