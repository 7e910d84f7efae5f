#include "nlaid/ocsvm.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nlaid {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InvalidInput(std::string(what) + " contains non-finite values");
}

double hinge_sum(std::span<const double> scores, double b) {
  double acc = 0.0;
  for (double s : scores) acc += std::max(0.0, b - s);
  return acc;
}

bool rows_identical(const SampleMatrix& data) {
  for (Eigen::Index i = 1; i < data.rows(); ++i) {
    if (data.row(i) != data.row(0)) return false;
  }
  return true;
}

// Cold start for the dual. Each vertex of the capped simplex puts the full cap
// on the lowest-scoring points under the current w; walking vertex to vertex
// while the dual improves lands near the optimum in a handful of O(N) passes,
// leaving SMO to repair only the points around the offset.
Vector vertex_start(const SampleMatrix& data, const Vector& c, double alpha, double cap) {
  const Eigen::Index n = data.rows();
  Vector beta = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector v = c + data.transpose() * beta;
  double best_dual = -v.squaredNorm();
  const auto full = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(std::floor(1.0 / cap + 1e-9)));
  const double rest = std::max(0.0, 1.0 - static_cast<double>(full) * cap);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (int round = 0; round < 50; ++round) {
    const Vector scores = data * (v / alpha);
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    const auto by_score = [&](Eigen::Index a, Eigen::Index b) {
      return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
    };
    if (full < n) std::nth_element(order.begin(), order.begin() + full, order.end(), by_score);
    Vector vertex = Vector::Zero(n);
    for (Eigen::Index i = 0; i < full; ++i) vertex[order[static_cast<std::size_t>(i)]] = cap;
    if (full < n && rest > 0.0) vertex[order[static_cast<std::size_t>(full)]] = rest;
    const Vector next = c + data.transpose() * vertex;
    const double dual = -next.squaredNorm();
    if (!(dual > best_dual)) break;
    best_dual = dual;
    beta = std::move(vertex);
    v = next;
  }
  return beta;
}

}  // namespace

void LossConfig::validate() const {
  if (!(nu > 0.0 && nu <= 1.0)) throw InvalidInput("nu must lie in (0, 1]");
  if (n < 1) throw InvalidInput("training-sample count must be positive");
}

const char* to_string(Label label) { return label == Label::incident ? "incident" : "normal"; }

SampleMatrix to_matrix(std::span<const FeatureWindow> data) {
  if (data.empty()) return SampleMatrix(0, 0);
  const auto d = static_cast<Eigen::Index>(data.front().dim());
  SampleMatrix m(static_cast<Eigen::Index>(data.size()), d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (static_cast<Eigen::Index>(data[i].dim()) != d) {
      throw InvalidInput("feature windows have inconsistent dimensions");
    }
    m.row(static_cast<Eigen::Index>(i)) = data[i].values.transpose();
  }
  return m;
}

double primal_objective(const ModelParams& params, const SampleMatrix& data, const LossConfig& cfg) {
  if (data.rows() == 0) throw InvalidInput("primal_objective: empty data");
  if (data.cols() != params.w.size()) throw InvalidInput("primal_objective: dimension mismatch");
  cfg.validate();
  if (cfg.n != static_cast<std::size_t>(data.rows())) {
    throw InvalidInput("primal_objective: LossConfig.n does not match the sample count");
  }
  const Vector scores = data * params.w;
  const double hinge = hinge_sum({scores.data(), static_cast<std::size_t>(scores.size())}, params.b);
  return 0.5 * params.w.squaredNorm() + hinge / (cfg.nu * static_cast<double>(cfg.n)) - params.b;
}

double primal_objective(const ModelParams& params, std::span<const FeatureWindow> data,
                        const LossConfig& cfg) {
  if (data.empty()) throw InvalidInput("primal_objective: empty data");
  for (const auto& x : data) {
    if (static_cast<Eigen::Index>(x.dim()) != params.w.size()) {
      throw InvalidInput("primal_objective: dimension mismatch");
    }
  }
  return primal_objective(params, to_matrix(data), cfg);
}

double decision_score(const ModelParams& params, const FeatureWindow& x) {
  if (x.values.size() != params.w.size()) throw InvalidInput("decision_score: dimension mismatch");
  return params.w.dot(x.values) - params.b;
}

double anomaly_score(const ModelParams& params, const FeatureWindow& x) {
  return -decision_score(params, x);
}

Label classify(const ModelParams& params, const FeatureWindow& x) {
  return decision_score(params, x) < 0.0 ? Label::incident : Label::normal;
}

double optimal_offset(std::span<const double> scores, double nu) {
  if (scores.empty()) throw InvalidInput("optimal_offset: no scores");
  const auto n = scores.size();
  // Guard against nu * N landing a rounding error above an integer.
  auto m = static_cast<std::size_t>(std::ceil(nu * static_cast<double>(n) - 1e-9));
  m = std::clamp<std::size_t>(m, 1, n);
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m - 1), sorted.end());
  return sorted[m - 1];
}

LocalSolution solve_local(const SampleMatrix& data, const LossConfig& cfg,
                          std::span<const ProxTerm> prox, const LocalSolverOptions& opts,
                          DualState* warm) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n == 0) throw InvalidInput("solve_local: empty data");
  cfg.validate();
  if (cfg.n != static_cast<std::size_t>(n)) {
    throw InvalidInput("solve_local: LossConfig.n does not match the sample count");
  }
  if (!(opts.tol > 0.0)) throw InvalidInput("solve_local: tol must be positive");
  if (!data.allFinite()) throw InvalidInput("solve_local: data contains non-finite values");

  // Proximal terms collapse to alpha/2 ||w||^2 - <c, w> + K.
  double rho_sum = 0.0;
  Vector c = Vector::Zero(d);
  double k_const = 0.0;
  for (const auto& p : prox) {
    if (p.target.size() != d) throw InvalidInput("solve_local: prox target dimension mismatch");
    require_finite(p.target, "prox target");
    if (!(p.rho > 0.0)) throw InvalidInput("solve_local: prox rho must be positive");
    rho_sum += p.rho;
    c += p.rho * p.target;
    k_const += 0.5 * p.rho * p.target.squaredNorm();
  }
  const double alpha = 1.0 + rho_sum;
  const double nu_n = cfg.nu * static_cast<double>(n);
  const double cap = 1.0 / nu_n;
  const double bound_eps = cap * 1e-12;

  Vector beta;
  const bool warm_usable = warm != nullptr && warm->beta.size() == n &&
                           (warm->beta.array() <= cap + bound_eps).all() && (warm->beta.array() >= 0.0).all();
  if (warm_usable) {
    beta = warm->beta;
  } else {
    beta = vertex_start(data, c, alpha, cap);
  }

  const bool degenerate = rows_identical(data);
  if (degenerate) {
    spdlog::warn("solve_local: all {} training windows are identical; result is degenerate", n);
  }

  auto prox_value = [&](const Vector& w) {
    double acc = 0.0;
    for (const auto& p : prox) acc += 0.5 * p.rho * (w - p.target).squaredNorm();
    return acc;
  };

  Vector v = c + data.transpose() * beta;
  Vector w = v / alpha;
  Vector scores = data * w;
  std::span<const double> score_view{scores.data(), static_cast<std::size_t>(n)};

  const int max_iter = opts.max_iterations > 0 ? opts.max_iterations
                                               : 100000 + 100 * static_cast<int>(n);
  double best_gap = std::numeric_limits<double>::infinity();
  ModelParams best{w, 0.0};

  // One SMO step on the most violating pair; false when none is left.
  auto smo_step = [&](int iter) {
    // Working-set selection: i increases (below cap, smallest gradient), j
    // decreases (positive, largest second-order gain).
    Eigen::Index up = -1;
    double s_up = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (beta[i] < cap - bound_eps && scores[i] < s_up) {
        s_up = scores[i];
        up = i;
      }
    }
    Eigen::Index down = -1;
    double best_gain = 0.0;
    if (up >= 0) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (beta[j] <= bound_eps) continue;
        const double diff = scores[j] - s_up;
        if (diff <= 0.0) continue;
        double curvature = (data.row(up) - data.row(j)).squaredNorm() / alpha;
        if (curvature <= 1e-300) curvature = 1e-12;
        const double gain = diff * diff / curvature;
        if (gain > best_gain) {
          best_gain = gain;
          down = j;
        }
      }
    }
    if (down < 0) return false;

    const Vector direction = (data.row(up) - data.row(down)).transpose();
    double curvature = direction.squaredNorm() / alpha;
    if (curvature <= 1e-300) curvature = 1e-12;
    double step = (scores[down] - scores[up]) / curvature;
    step = std::min({step, cap - beta[up], beta[down]});
    beta[up] += step;
    beta[down] -= step;
    if (beta[down] < bound_eps) beta[down] = 0.0;

    if ((iter + 1) % 256 == 0) {
      v = c + data.transpose() * beta;
    } else {
      v += step * direction;
    }
    w = v / alpha;
    scores.noalias() = data * w;
    return true;
  };

  // The gap needs a selection pass over all scores; checking it on every SMO
  // step would roughly double the cost of large cold solves.
  const int check_every = std::clamp(static_cast<int>(n / 64), 1, 32);
  bool stalled = false;
  for (int iter = 0;; ++iter) {
    if (!stalled && iter % check_every != 0 && iter < max_iter) {
      stalled = !smo_step(iter);
      continue;
    }
    const double b = optimal_offset(score_view, cfg.nu);
    const double primal = 0.5 * w.squaredNorm() + hinge_sum(score_view, b) / nu_n - b + prox_value(w);
    const double dual = k_const - v.squaredNorm() / (2.0 * alpha);
    const double gap = std::max(0.0, primal - dual);
    if (gap < best_gap) {
      best_gap = gap;
      best = {w, b};
    }
    // A stalled step means KKT holds to machine precision; the remaining gap is rounding.
    if (gap <= opts.tol || stalled) {
      if (warm != nullptr) warm->beta = beta;
      return {{w, b}, primal, gap, iter, degenerate};
    }
    if (iter >= max_iter) {
      std::ostringstream msg;
      msg << "solve_local: no convergence after " << iter << " iterations (gap " << best_gap << ")";
      throw SolverFailure(msg.str(), best, best_gap);
    }
    stalled = !smo_step(iter);
  }
}

LocalSolution solve_local(std::span<const FeatureWindow> data, const LossConfig& cfg,
                          std::span<const ProxTerm> prox, double tol) {
  if (data.empty()) throw InvalidInput("solve_local: empty data");
  return solve_local(to_matrix(data), cfg, prox, LocalSolverOptions{tol, 0}, nullptr);
}

ModelParams fit_standalone(std::span<const FeatureWindow> data, const LossConfig& cfg, double tol) {
  return solve_local(data, cfg, {}, tol).params;
}

LocalSolution fit_standalone(const SampleMatrix& data, double nu, double tol) {
  return solve_local(data, LossConfig{nu, static_cast<std::size_t>(data.rows())}, {},
                     LocalSolverOptions{tol, 0}, nullptr);
}

}  // namespace nlaid
