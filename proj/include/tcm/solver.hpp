#pragma once

// Projected iteratively regularized Gauss-Newton method (IRGNM) with a
// geometric regularization schedule and discrepancy-principle stopping, and a
// damped Gauss-Newton minimizer for the Tikhonov functional.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tcm/error.hpp"
#include "tcm/forward.hpp"

namespace tcm {

struct IrgnmSettings {
  double a = 800.0;        // alpha_0
  double b = 0.2;          // decay rate: alpha_k = a exp(-b k)
  double tau = 1.1;        // discrepancy factor, > 1
  double epsilon = kDefaultDomainFloor;
  std::size_t max_iter = 300;
  double delta_estimate = 0.0;  // noise level; 0 disables the discrepancy stop
  bool store_iterates = false;
  /// Keep iterating up to max_iter after the discrepancy principle fired. The
  /// returned iterate is still the discrepancy one; the extra iterations only
  /// extend the traces (used to measure the best attainable error).
  bool continue_after_discrepancy = false;

  void validate() const {
    if (!(a > 0.0)) throw std::invalid_argument("IRGNM: a must be positive");
    if (!(b > 0.0)) throw std::invalid_argument("IRGNM: b must be positive");
    if (!(tau > 1.0)) throw std::invalid_argument("IRGNM: tau must be > 1");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("IRGNM: epsilon must be nonnegative");
    if (!(delta_estimate >= 0.0)) throw std::invalid_argument("IRGNM: delta must be nonnegative");
  }

  [[nodiscard]] double alpha(std::size_t k) const { return a * std::exp(-b * static_cast<double>(k)); }
};

enum class StopReason { discrepancy, max_iter, failure };

[[nodiscard]] inline std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::discrepancy: return "discrepancy";
    case StopReason::max_iter: return "max_iter";
    case StopReason::failure: return "failure";
  }
  return "unknown";
}

/// Trace and outcome of one IRGNM run.
struct RunRecord {
  std::vector<Eigen::VectorXd> iterates;  // only when store_iterates
  std::vector<double> residual_norms;     // ||F(x_k) - y||, k = 0 .. last
  std::vector<double> errors;             // ||x_k - x_true|| (when truth known)
  std::vector<double> rel_errors;         // errors / ||x_true||
  StopReason stop_reason = StopReason::max_iter;
  std::size_t stop_iter = 0;  // index N of the returned iterate
  Eigen::VectorXd solution;   // x_N
  std::optional<double> rho_opt;
  std::optional<double> rho_d;
  bool diverged = false;
  std::string failure_message;

  [[nodiscard]] std::size_t last_iter() const { return residual_norms.empty() ? 0 : residual_norms.size() - 1; }
};

/// Solves the symmetric positive definite system by Cholesky, falling back to
/// a pivoted LDL^T factorization.
[[nodiscard]] inline Eigen::VectorXd solve_spd(const Eigen::MatrixXd& system, const Eigen::VectorXd& rhs,
                                               double alpha) {
  if (!system.allFinite() || !rhs.allFinite()) {
    std::ostringstream msg;
    msg << "linear solve failed (alpha = " << alpha << ", non-finite system)";
    throw NumericalError(msg.str());
  }
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd sol = llt.solve(rhs);
    if (sol.allFinite()) return sol;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  if (ldlt.info() == Eigen::Success) {
    Eigen::VectorXd sol = ldlt.solve(rhs);
    if (sol.allFinite()) return sol;
  }
  std::ostringstream msg;
  msg << "linear solve failed (alpha = " << alpha << ", reciprocal condition estimate " << ldlt.rcond() << ")";
  throw NumericalError(msg.str());
}

/// One projected IRGNM step:
///   x_{k+1} = P( x_k + (J^T J + alpha I)^{-1} (J^T (y - F(x_k)) + alpha (x_0 - x_k)) ).
template <ForwardOperator Op>
[[nodiscard]] Eigen::VectorXd irgnm_step(const Op& op, const Eigen::VectorXd& x_k, const Eigen::VectorXd& x_0,
                                         const Eigen::VectorXd& y, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("irgnm_step: alpha must be positive");
  const Eigen::MatrixXd jac = op.jacobian(x_k);
  const Eigen::VectorXd residual = y - op.evaluate(x_k);
  Eigen::MatrixXd system = jac.transpose() * jac;
  system.diagonal().array() += alpha;
  const Eigen::VectorXd rhs = jac.transpose() * residual + alpha * (x_0 - x_k);
  const Eigen::VectorXd delta = solve_spd(system, rhs, alpha);
  return op.project(x_k + delta);
}

/// Improvement metrics in percent relative to the initial error.
struct RhoMetrics {
  double rho_opt = 0.0;
  std::optional<double> rho_d;
};

/// rho_opt from the best iterate k >= 1, rho_d at `stop_iter` if given.
/// `errors[0]` must be the initial error ||x_0 - x_true||.
[[nodiscard]] inline RhoMetrics rho_from_errors(const std::vector<double>& errors,
                                                std::optional<std::size_t> stop_iter) {
  if (errors.empty() || !(errors[0] > 0.0)) {
    throw std::invalid_argument("rho metrics undefined: initial guess equals the true parameters");
  }
  const double e0 = errors[0];
  RhoMetrics out;
  if (errors.size() > 1) {
    const double best = *std::min_element(errors.begin() + 1, errors.end());
    out.rho_opt = 100.0 * (1.0 - best / e0);
  }
  if (stop_iter) {
    if (*stop_iter >= errors.size()) throw std::out_of_range("rho metrics: stop iteration beyond trace");
    out.rho_d = 100.0 * (1.0 - errors[*stop_iter] / e0);
  }
  return out;
}

/// rho metrics of a run with stored iterates.
[[nodiscard]] inline RhoMetrics rho_metrics(const RunRecord& record, const Eigen::VectorXd& x_0,
                                            const Eigen::VectorXd& x_true) {
  if ((x_0 - x_true).norm() == 0.0) {
    throw std::invalid_argument("rho metrics undefined: initial guess equals the true parameters");
  }
  if (record.iterates.empty()) throw std::invalid_argument("rho metrics: run has no stored iterates");
  std::vector<double> errors;
  errors.reserve(record.iterates.size());
  for (const auto& x : record.iterates) errors.push_back((x - x_true).norm());
  errors[0] = (x_0 - x_true).norm();
  std::optional<std::size_t> stop;
  if (record.stop_reason == StopReason::discrepancy) stop = record.stop_iter;
  return rho_from_errors(errors, stop);
}

/// Projected IRGNM from x_0 on data y. When `x_true` is given the error traces,
/// rho metrics and the divergence flag are filled in.
template <ForwardOperator Op>
[[nodiscard]] RunRecord run_irgnm(const Op& op, const Eigen::VectorXd& x_0, const Eigen::VectorXd& y,
                                  const IrgnmSettings& settings,
                                  const std::optional<Eigen::VectorXd>& x_true = std::nullopt) {
  settings.validate();
  RunRecord record;
  const bool stopping_active = settings.delta_estimate > 0.0;
  const double threshold = settings.tau * settings.delta_estimate;
  const double true_norm = x_true ? x_true->norm() : 0.0;

  auto push = [&](const Eigen::VectorXd& x, double residual) {
    record.residual_norms.push_back(residual);
    if (settings.store_iterates) record.iterates.push_back(x);
    if (x_true) {
      const double err = (x - *x_true).norm();
      record.errors.push_back(err);
      record.rel_errors.push_back(true_norm > 0.0 ? err / true_norm : err);
    }
  };

  Eigen::VectorXd x = x_0;
  double residual = (op.evaluate(x) - y).norm();
  push(x, residual);

  std::optional<std::size_t> discrepancy_iter;
  bool failed = !std::isfinite(residual);
  if (failed) record.failure_message = "non-finite residual at the initial guess";

  for (std::size_t k = 0; !failed; ++k) {
    if (stopping_active && !discrepancy_iter && residual <= threshold) {
      discrepancy_iter = k;
      record.solution = x;
      if (!settings.continue_after_discrepancy) break;
    }
    if (k >= settings.max_iter) break;
    try {
      x = irgnm_step(op, x, x_0, y, settings.alpha(k));
    } catch (const NumericalError& e) {
      failed = true;
      record.failure_message = "iteration " + std::to_string(k) + ": " + e.what();
      break;
    }
    if (!x.allFinite()) {
      failed = true;
      record.failure_message = "iteration " + std::to_string(k + 1) + ": non-finite iterate";
      break;
    }
    residual = (op.evaluate(x) - y).norm();
    if (!std::isfinite(residual)) {
      failed = true;
      record.failure_message = "iteration " + std::to_string(k + 1) + ": non-finite residual";
      break;
    }
    push(x, residual);
  }

  if (discrepancy_iter) {
    record.stop_reason = StopReason::discrepancy;
    record.stop_iter = *discrepancy_iter;
  } else {
    record.stop_reason = failed ? StopReason::failure : StopReason::max_iter;
    record.stop_iter = record.last_iter();
    record.solution = x;
  }
  if (x_true && record.errors.front() > 0.0) {
    const auto rho = rho_from_errors(record.errors, discrepancy_iter);
    if (record.errors.size() > 1) record.rho_opt = rho.rho_opt;
    record.rho_d = rho.rho_d;
    const double best = record.errors.size() > 1
                            ? *std::min_element(record.errors.begin() + 1, record.errors.end())
                            : std::numeric_limits<double>::infinity();
    record.diverged = failed || best >= record.errors.front();
  } else if (failed) {
    record.diverged = true;
  }
  return record;
}

struct TikhonovSettings {
  std::size_t max_iter = 500;
  double step_tol = 1e-10;
  std::size_t max_backtracks = 60;
};

struct TikhonovResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Local minimizer of ||F(x) - y||^2 + alpha ||x - x_ref||^2 over the domain of
/// the operator: Gauss-Newton on the stacked residual [F(x) - y; sqrt(alpha)(x - x_ref)]
/// with projection and step halving until the objective decreases.
template <ForwardOperator Op>
[[nodiscard]] TikhonovResult solve_tikhonov(const Op& op, const Eigen::VectorXd& x_ref, const Eigen::VectorXd& y,
                                            double alpha, const TikhonovSettings& settings = {}) {
  if (!(alpha > 0.0)) throw std::invalid_argument("solve_tikhonov: alpha must be positive");
  auto objective = [&](const Eigen::VectorXd& x) {
    return (op.evaluate(x) - y).squaredNorm() + alpha * (x - x_ref).squaredNorm();
  };

  TikhonovResult result;
  Eigen::VectorXd x = op.project(x_ref);
  double value = objective(x);
  for (std::size_t it = 0; it < settings.max_iter; ++it) {
    result.iterations = it + 1;
    const Eigen::MatrixXd jac = op.jacobian(x);
    const Eigen::VectorXd residual = op.evaluate(x) - y;
    Eigen::MatrixXd system = jac.transpose() * jac;
    system.diagonal().array() += alpha;
    const Eigen::VectorXd gradient = jac.transpose() * residual + alpha * (x - x_ref);
    const Eigen::VectorXd direction = solve_spd(system, -gradient, alpha);

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double candidate_value = value;
    for (std::size_t bt = 0; bt <= settings.max_backtracks; ++bt, step *= 0.5) {
      candidate = op.project(x + step * direction);
      candidate_value = objective(candidate);
      if (std::isfinite(candidate_value) && candidate_value <= value) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.converged = true;  // no descent available along the projected direction
      break;
    }
    const double moved = (candidate - x).norm();
    x = candidate;
    value = candidate_value;
    if (moved < settings.step_tol) {
      result.converged = true;
      break;
    }
  }
  result.x = x;
  result.objective = value;
  return result;
}

}  // namespace tcm
