#pragma once

// Finite-difference verification of analytic Jacobians.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "tcm/forward.hpp"

namespace tcm {

/// Central differences with step h_i = rel_step (1 + |x_i|).
template <ForwardOperator Op>
[[nodiscard]] Eigen::MatrixXd finite_difference_jacobian(const Op& op, const Eigen::VectorXd& x,
                                                         double rel_step = 1e-6) {
  const Eigen::VectorXd f0 = op.evaluate(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    // Use the actually representable step.
    jac.col(i) = (op.evaluate(xp) - op.evaluate(xm)) / (xp[i] - xm[i]);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return jac;
}

/// Central differences for the forward model. The blood rows are evaluated
/// in extended precision: their small mu-derivatives at late sample times are
/// otherwise swamped by the rounding error of the larger C_art terms.
[[nodiscard]] inline Eigen::MatrixXd finite_difference_jacobian(const ForwardModel& model, const Eigen::VectorXd& x,
                                                                double rel_step = 1e-6) {
  const auto tissue = static_cast<Eigen::Index>(model.tissue_size());
  const Layout& layout = model.layout();
  const auto& s_grid = model.s_grid();
  const auto& blood = model.blood_values();
  auto blood_rows = [&](const Eigen::VectorXd& v) {
    const Parameters params = unpack(layout, v);
    std::vector<long double> out(s_grid.size());
    for (std::size_t l = 0; l < s_grid.size(); ++l) {
      long double c_art = 0.0L;
      for (std::size_t j = 0; j < layout.p; ++j) {
        c_art += static_cast<long double>(params.lambda[j]) *
                 std::exp(static_cast<long double>(params.mu[j]) * static_cast<long double>(s_grid[l]));
      }
      const long double ref = model.mode() == DataMode::full
                                  ? static_cast<long double>(blood[l]) * model.plasma().eval(params.m, s_grid[l])
                                  : static_cast<long double>(blood[l]);
      out[l] = ref - c_art;
    }
    return out;
  };

  Eigen::MatrixXd jac(static_cast<Eigen::Index>(model.output_size()), x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    const long double width = static_cast<long double>(xp[i]) - static_cast<long double>(xm[i]);
    jac.col(i).head(tissue) =
        (model.evaluate(xp).head(tissue) - model.evaluate(xm).head(tissue)) / static_cast<double>(width);
    const auto bp = blood_rows(xp);
    const auto bm = blood_rows(xm);
    for (std::size_t l = 0; l < bp.size(); ++l) {
      jac(tissue + static_cast<Eigen::Index>(l), i) = static_cast<double>((bp[l] - bm[l]) / width);
    }
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return jac;
}

struct EntryDeviation {
  double value = 0.0;  // |analytic - reference| / |reference|
  Eigen::Index row = -1;
  Eigen::Index col = -1;
  std::size_t checked = 0;
};

/// Largest componentwise relative deviation over reference entries with
/// magnitude above `threshold`.
[[nodiscard]] inline EntryDeviation max_relative_deviation(const Eigen::MatrixXd& analytic,
                                                           const Eigen::MatrixXd& reference,
                                                           double threshold = 1e-8) {
  if (analytic.rows() != reference.rows() || analytic.cols() != reference.cols()) {
    throw std::invalid_argument("max_relative_deviation: shape mismatch");
  }
  EntryDeviation out;
  for (Eigen::Index c = 0; c < reference.cols(); ++c) {
    for (Eigen::Index r = 0; r < reference.rows(); ++r) {
      const double ref = reference(r, c);
      if (!(std::abs(ref) > threshold)) continue;
      ++out.checked;
      const double dev = std::abs(analytic(r, c) - ref) / std::abs(ref);
      if (!(dev <= out.value)) {
        out.value = dev;
        out.row = r;
        out.col = c;
      }
    }
  }
  return out;
}

struct JacobianCheckSettings {
  std::size_t trials = 20;
  double tolerance = 1e-5;
  double threshold = 1e-8;
  double rel_step = 1e-6;
  double spread = 0.2;  // sampled points are center (1 + U(-spread, spread)), projected
  std::uint64_t seed = 1;
  /// Test hook applied to each analytic Jacobian before comparison.
  std::function<void(Eigen::MatrixXd&)> corrupt;
};

struct JacobianCheckReport {
  std::size_t trials = 0;
  std::size_t entries_checked = 0;
  double max_deviation = 0.0;
  std::size_t worst_trial = 0;
  Eigen::Index worst_row = -1;
  Eigen::Index worst_col = -1;
  bool passed = false;
};

/// Compares the model's Jacobian with central differences at random in-domain
/// points around `center`.
[[nodiscard]] inline JacobianCheckReport verify_jacobian(const ForwardModel& model, const Eigen::VectorXd& center,
                                                         const JacobianCheckSettings& settings = {}) {
  if (settings.trials < 1) throw std::invalid_argument("verify_jacobian: trials must be >= 1");
  std::mt19937_64 gen(settings.seed);
  std::uniform_real_distribution<double> jitter(-settings.spread, settings.spread);
  JacobianCheckReport report;
  report.trials = settings.trials;
  for (std::size_t trial = 0; trial < settings.trials; ++trial) {
    Eigen::VectorXd x = center;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] *= 1.0 + jitter(gen);
    x = model.project(x);
    Eigen::MatrixXd analytic = model.jacobian(x);
    if (settings.corrupt) settings.corrupt(analytic);
    const auto dev =
        max_relative_deviation(analytic, finite_difference_jacobian(model, x, settings.rel_step), settings.threshold);
    report.entries_checked += dev.checked;
    if (trial == 0 || dev.value > report.max_deviation) {
      report.max_deviation = dev.value;
      report.worst_trial = trial;
      report.worst_row = dev.row;
      report.worst_col = dev.col;
    }
  }
  report.passed = report.max_deviation <= settings.tolerance;
  return report;
}

}  // namespace tcm
