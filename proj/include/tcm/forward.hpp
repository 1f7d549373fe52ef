#pragma once

// Forward operator of the multi-region identification problem.
//
// Unknowns are flattened as
//   x = (lambda_1..lambda_p, mu_1..mu_p, m_1..m_qhat, K1^1,k2^1,k3^1, ..., K1^n,k2^n,k3^n)
// and mapped to y = (F1, F2) in R^{n T + q}: F1 holds C_tis for every region
// and tissue time (row-major, region by region), F2 the blood consistency
// residuals C_bl(s_l) f_m(s_l) - C_art(s_l).

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tcm/error.hpp"
#include "tcm/kinetic_params.hpp"
#include "tcm/kinetics.hpp"
#include "tcm/plasma.hpp"
#include "tcm/polyexp.hpp"

namespace tcm {

/// Lower bound on the kinetic rates of admissible parameters.
inline constexpr double kDefaultDomainFloor = 1e-3;

/// Block sizes of the flattened parameter vector.
struct Layout {
  std::size_t p = 0;      // exponential terms of C_art
  std::size_t q_hat = 0;  // plasma fraction parameters
  std::size_t n = 0;      // regions

  [[nodiscard]] std::size_t size() const { return 2 * p + q_hat + 3 * n; }
  [[nodiscard]] std::size_t lambda_offset() const { return 0; }
  [[nodiscard]] std::size_t mu_offset() const { return p; }
  [[nodiscard]] std::size_t plasma_offset() const { return 2 * p; }
  [[nodiscard]] std::size_t kinetics_offset(std::size_t region) const { return 2 * p + q_hat + 3 * region; }

  friend bool operator==(const Layout&, const Layout&) = default;
};

/// Structured form of the unknowns.
struct Parameters {
  std::vector<double> lambda;
  std::vector<double> mu;
  std::vector<double> m;
  std::vector<KineticParams> kinetics;

  [[nodiscard]] Layout layout() const { return {lambda.size(), m.size(), kinetics.size()}; }
  [[nodiscard]] std::vector<ExpTerm> c_art_terms() const {
    std::vector<ExpTerm> terms(lambda.size());
    for (std::size_t j = 0; j < lambda.size(); ++j) terms[j] = {lambda[j], mu[j]};
    return terms;
  }

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

/// Flat parameter vector with its layout.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(Layout layout, Eigen::VectorXd flat) : layout_(layout), flat_(std::move(flat)) {
    if (static_cast<std::size_t>(flat_.size()) != layout_.size()) {
      throw std::invalid_argument("ParamVector: length " + std::to_string(flat_.size()) +
                                  " does not match layout size " + std::to_string(layout_.size()));
    }
  }

  [[nodiscard]] const Layout& layout() const { return layout_; }
  [[nodiscard]] const Eigen::VectorXd& flat() const { return flat_; }
  [[nodiscard]] Eigen::VectorXd& flat() { return flat_; }
  [[nodiscard]] std::size_t size() const { return layout_.size(); }

 private:
  Layout layout_;
  Eigen::VectorXd flat_;
};

[[nodiscard]] inline ParamVector pack(const Parameters& params) {
  if (params.lambda.size() != params.mu.size()) {
    throw std::invalid_argument("pack: lambda and mu must have equal length");
  }
  const Layout layout = params.layout();
  Eigen::VectorXd flat(static_cast<Eigen::Index>(layout.size()));
  Eigen::Index r = 0;
  for (double v : params.lambda) flat[r++] = v;
  for (double v : params.mu) flat[r++] = v;
  for (double v : params.m) flat[r++] = v;
  for (const auto& k : params.kinetics) {
    flat[r++] = k.K1;
    flat[r++] = k.k2;
    flat[r++] = k.k3;
  }
  return {layout, std::move(flat)};
}

[[nodiscard]] inline Parameters unpack(const Layout& layout, const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != layout.size()) {
    throw std::invalid_argument("unpack: vector length " + std::to_string(flat.size()) +
                                " does not match layout size " + std::to_string(layout.size()));
  }
  Parameters params;
  params.lambda.assign(flat.data(), flat.data() + layout.p);
  params.mu.assign(flat.data() + layout.mu_offset(), flat.data() + layout.mu_offset() + layout.p);
  params.m.assign(flat.data() + layout.plasma_offset(), flat.data() + layout.plasma_offset() + layout.q_hat);
  params.kinetics.resize(layout.n);
  for (std::size_t i = 0; i < layout.n; ++i) {
    const auto o = static_cast<Eigen::Index>(layout.kinetics_offset(i));
    params.kinetics[i] = {flat[o], flat[o + 1], flat[o + 2]};
  }
  return params;
}

[[nodiscard]] inline Parameters unpack(const ParamVector& x) { return unpack(x.layout(), x.flat()); }

/// How the blood block of the data is interpreted.
enum class DataMode {
  full,        // blood values are total concentration C_bl; f_m is unknown
  known_cart,  // blood values are measured C_art; plasma parameters frozen
};

[[nodiscard]] inline std::string to_string(DataMode mode) { return mode == DataMode::full ? "full" : "known_cart"; }

[[nodiscard]] inline DataMode data_mode_from_string(const std::string& s) {
  if (s == "full") return DataMode::full;
  if (s == "known_cart") return DataMode::known_cart;
  throw std::invalid_argument("unknown mode '" + s + "' (expected full or known_cart)");
}

/// Structured view of a point of Y = R^{n T + q}.
struct MeasurementSet {
  Eigen::MatrixXd tissue;  // n x T
  Eigen::VectorXd blood;   // q

  [[nodiscard]] Eigen::VectorXd flatten() const {
    Eigen::VectorXd y(tissue.size() + blood.size());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < tissue.rows(); ++i)
      for (Eigen::Index l = 0; l < tissue.cols(); ++l) y[r++] = tissue(i, l);
    y.tail(blood.size()) = blood;
    return y;
  }

  static MeasurementSet from_flat(std::size_t n, std::size_t t_count, const Eigen::VectorXd& y) {
    const auto tissue_len = static_cast<Eigen::Index>(n * t_count);
    if (y.size() < tissue_len) throw std::invalid_argument("MeasurementSet: vector too short");
    MeasurementSet set;
    set.tissue.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t_count));
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < set.tissue.rows(); ++i)
      for (Eigen::Index l = 0; l < set.tissue.cols(); ++l) set.tissue(i, l) = y[r++];
    set.blood = y.tail(y.size() - tissue_len);
    return set;
  }
};

/// Anything the regularized Gauss-Newton solvers can iterate on.
template <typename Op>
concept ForwardOperator = requires(const Op& op, const Eigen::VectorXd& x) {
  { op.evaluate(x) } -> std::convertible_to<Eigen::VectorXd>;
  { op.jacobian(x) } -> std::convertible_to<Eigen::MatrixXd>;
  { op.project(x) } -> std::convertible_to<Eigen::VectorXd>;
};

/// The forward map x -> (F1(x), F2(x)) for fixed grids and blood data.
class ForwardModel {
 public:
  ForwardModel(Layout layout, std::vector<double> t_grid, std::vector<double> s_grid,
               std::vector<double> blood_values, DataMode mode, std::shared_ptr<const PlasmaFamily> plasma,
               double epsilon = kDefaultDomainFloor)
      : layout_(layout),
        t_grid_(std::move(t_grid)),
        s_grid_(std::move(s_grid)),
        blood_(std::move(blood_values)),
        mode_(mode),
        plasma_(std::move(plasma)),
        epsilon_(epsilon) {
    if (!plasma_) throw std::invalid_argument("ForwardModel: plasma family required");
    if (plasma_->parameter_count() != layout_.q_hat) {
      throw std::invalid_argument("ForwardModel: layout q_hat does not match plasma family '" + plasma_->id() + "'");
    }
    if (blood_.size() != s_grid_.size()) {
      throw std::invalid_argument("ForwardModel: blood values must match the blood sample grid");
    }
  }

  [[nodiscard]] const Layout& layout() const { return layout_; }
  [[nodiscard]] const std::vector<double>& t_grid() const { return t_grid_; }
  [[nodiscard]] const std::vector<double>& s_grid() const { return s_grid_; }
  [[nodiscard]] const std::vector<double>& blood_values() const { return blood_; }
  [[nodiscard]] DataMode mode() const { return mode_; }
  [[nodiscard]] const PlasmaFamily& plasma() const { return *plasma_; }
  [[nodiscard]] double epsilon() const { return epsilon_; }

  [[nodiscard]] std::size_t tissue_size() const { return layout_.n * t_grid_.size(); }
  [[nodiscard]] std::size_t output_size() const { return tissue_size() + s_grid_.size(); }

  [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const {
    const Parameters params = unpack(layout_, x);
    const auto terms = params.c_art_terms();
    Eigen::VectorXd y(static_cast<Eigen::Index>(output_size()));
    Eigen::Index r = 0;
    for (const auto& k : params.kinetics) {
      for (double t : t_grid_) y[r++] = c_tis_closed_form(terms, k, t);
    }
    for (std::size_t l = 0; l < s_grid_.size(); ++l) y[r++] = blood_term(params, s_grid_[l], blood_[l]);
    return y;
  }

  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    const Parameters params = unpack(layout_, x);
    const auto terms = params.c_art_terms();
    const std::size_t p = layout_.p;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(output_size()),
                                                static_cast<Eigen::Index>(layout_.size()));
    std::vector<double> d_lambda(p), d_mu(p);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < layout_.n; ++i) {
      const auto kcol = static_cast<Eigen::Index>(layout_.kinetics_offset(i));
      for (double t : t_grid_) {
        const auto g = c_tis_with_gradient(terms, params.kinetics[i], t, d_lambda, d_mu);
        for (std::size_t j = 0; j < p; ++j) {
          jac(row, static_cast<Eigen::Index>(j)) = d_lambda[j];
          jac(row, static_cast<Eigen::Index>(p + j)) = d_mu[j];
        }
        jac(row, kcol) = g.d_K1;
        jac(row, kcol + 1) = g.d_k2;
        jac(row, kcol + 2) = g.d_k3;
        ++row;
      }
    }
    std::vector<double> d_m(layout_.q_hat);
    const auto mcol = static_cast<Eigen::Index>(layout_.plasma_offset());
    for (std::size_t l = 0; l < s_grid_.size(); ++l) {
      const double s = s_grid_[l];
      for (std::size_t j = 0; j < p; ++j) {
        const double e = std::exp(params.mu[j] * s);
        jac(row, static_cast<Eigen::Index>(j)) = -e;
        jac(row, static_cast<Eigen::Index>(p + j)) = -params.lambda[j] * s * e;
      }
      if (mode_ == DataMode::full) {
        plasma_->gradient(params.m, s, d_m);
        for (std::size_t k = 0; k < layout_.q_hat; ++k) {
          jac(row, mcol + static_cast<Eigen::Index>(k)) = blood_[l] * d_m[k];
        }
      }
      ++row;
    }
    return jac;
  }

  /// Euclidean projection onto the admissible box: kinetic rates >= epsilon,
  /// plasma parameters onto the family's admissible set.
  [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = x;
    for (std::size_t i = 0; i < layout_.n; ++i) {
      const auto o = static_cast<Eigen::Index>(layout_.kinetics_offset(i));
      for (Eigen::Index c = 0; c < 3; ++c) out[o + c] = std::max(out[o + c], epsilon_);
    }
    plasma_->project(std::span<double>(out.data() + layout_.plasma_offset(), layout_.q_hat));
    return out;
  }

  [[nodiscard]] bool in_domain(const Eigen::VectorXd& x) const {
    for (std::size_t i = 0; i < layout_.n; ++i) {
      const auto o = static_cast<Eigen::Index>(layout_.kinetics_offset(i));
      for (Eigen::Index c = 0; c < 3; ++c)
        if (!(x[o + c] >= epsilon_)) return false;
    }
    return plasma_->admissible(std::span<const double>(x.data() + layout_.plasma_offset(), layout_.q_hat));
  }

 private:
  [[nodiscard]] double blood_term(const Parameters& params, double s, double blood) const {
    double c_art = 0.0;
    for (std::size_t j = 0; j < params.lambda.size(); ++j) c_art += params.lambda[j] * std::exp(params.mu[j] * s);
    const double reference = mode_ == DataMode::full ? blood * plasma_->eval(params.m, s) : blood;
    return reference - c_art;
  }

  Layout layout_;
  std::vector<double> t_grid_;
  std::vector<double> s_grid_;
  std::vector<double> blood_;
  DataMode mode_;
  std::shared_ptr<const PlasmaFamily> plasma_;
  double epsilon_;
};

static_assert(ForwardOperator<ForwardModel>);

[[nodiscard]] inline MeasurementSet apply_forward(const ParamVector& x, const ForwardModel& model) {
  if (x.layout() != model.layout()) throw std::invalid_argument("apply_forward: layout mismatch");
  return MeasurementSet::from_flat(model.layout().n, model.t_grid().size(), model.evaluate(x.flat()));
}

[[nodiscard]] inline Eigen::MatrixXd jacobian(const ParamVector& x, const ForwardModel& model) {
  if (x.layout() != model.layout()) throw std::invalid_argument("jacobian: layout mismatch");
  return model.jacobian(x.flat());
}

[[nodiscard]] inline ParamVector project_to_domain(const ParamVector& x, const ForwardModel& model) {
  return {x.layout(), model.project(x.flat())};
}

/// ||F(x) - y||^2 + alpha ||x - x_ref||^2 with Euclidean norms on X and Y.
[[nodiscard]] inline double tikhonov_objective(const ForwardModel& model, const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& x_ref, const Eigen::VectorXd& y, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("tikhonov_objective: alpha must be nonnegative");
  return (model.evaluate(x) - y).squaredNorm() + alpha * (x - x_ref).squaredNorm();
}

}  // namespace tcm
