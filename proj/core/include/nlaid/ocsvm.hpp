#pragma once

// Linear one-class SVM: primal objective, decision function and a dual SMO
// solver for the proximal subproblem solved at every node of the network.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlaid/errors.hpp"

namespace nlaid {

using Vector = Eigen::VectorXd;
/// Row-major sample block: one feature window per row.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Occupancy-difference window, d consecutive timesteps (d = 4 by default).
struct FeatureWindow {
  Vector values;

  std::size_t dim() const { return static_cast<std::size_t>(values.size()); }
};

/// Weight vector plus the node-private offset.
struct ModelParams {
  Vector w;
  double b = 0.0;

  static ModelParams zeros(std::size_t dim) { return {Vector::Zero(static_cast<Eigen::Index>(dim)), 0.0}; }
};

struct LossConfig {
  double nu = 0.95;
  std::size_t n = 1;

  void validate() const;
};

/// Quadratic pull (rho / 2) * ||w - target||^2 contributed by one neighbour.
struct ProxTerm {
  Vector target;
  double rho = 1.0;
};

enum class Label { normal, incident };

const char* to_string(Label label);

/// Stacks windows into a sample matrix; all windows must share one dimension.
SampleMatrix to_matrix(std::span<const FeatureWindow> data);

/// 0.5 ||w||^2 + 1/(nu N) sum_i max(0, b - <w, x_i>) - b.
double primal_objective(const ModelParams& params, std::span<const FeatureWindow> data,
                        const LossConfig& cfg);
double primal_objective(const ModelParams& params, const SampleMatrix& data, const LossConfig& cfg);

/// <w, x> - b. Negative means the window lies outside the learned region.
double decision_score(const ModelParams& params, const FeatureWindow& x);
/// Higher is more incident-like: -(<w, x> - b).
double anomaly_score(const ModelParams& params, const FeatureWindow& x);
/// Score exactly zero is normal so an all-zero model raises no alarms.
Label classify(const ModelParams& params, const FeatureWindow& x);

/// Optimal offset for a fixed weight vector: the ceil(nu N)-th smallest score.
double optimal_offset(std::span<const double> scores, double nu);

/// Dual variables of the local QP, kept between calls to warm-start the solver.
struct DualState {
  Vector beta;
};

struct LocalSolution {
  ModelParams params;
  double objective = 0.0;  ///< primal objective plus proximal terms
  double gap = 0.0;        ///< certified duality gap at return
  int iterations = 0;
  bool degenerate = false;  ///< all training windows identical
};

class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, ModelParams best, double gap_bound)
      : std::runtime_error(what), best_(std::move(best)), gap_bound_(gap_bound) {}

  const ModelParams& best() const { return best_; }
  double gap_bound() const { return gap_bound_; }

 private:
  ModelParams best_;
  double gap_bound_;
};

struct LocalSolverOptions {
  double tol = 1e-6;
  /// 0 selects 100000 + 100 * N.
  int max_iterations = 0;
};

/// Minimises primal_objective(w, b) + sum_p (rho_p / 2) ||w - target_p||^2.
///
/// The bias is unconstrained and never sees the proximal terms. The solver
/// works on the dual (a QP over the capped simplex sum beta = 1,
/// 0 <= beta_i <= 1/(nu N)) with second-order SMO pair updates, recovers b as
/// the exact minimiser for the returned w, and stops when the duality gap is
/// below `opts.tol`. Passing `warm` reuses (and updates) the dual iterate.
LocalSolution solve_local(const SampleMatrix& data, const LossConfig& cfg,
                          std::span<const ProxTerm> prox, const LocalSolverOptions& opts = {},
                          DualState* warm = nullptr);

LocalSolution solve_local(std::span<const FeatureWindow> data, const LossConfig& cfg,
                          std::span<const ProxTerm> prox, double tol);

ModelParams fit_standalone(std::span<const FeatureWindow> data, const LossConfig& cfg, double tol);
LocalSolution fit_standalone(const SampleMatrix& data, double nu, double tol = 1e-6);

}  // namespace nlaid
