#pragma once

// Irreversible two-tissue compartment model for one region:
//
//   dC_fr/dt = K1 C_art - (k2 + k3) C_fr,   dC_bd/dt = k3 C_fr,
//   C_fr(0) = C_bd(0) = 0,                  C_tis = C_fr + C_bd.
//
// For a polyexponential input C_art = sum_j lambda_j exp(mu_j t) the solution
// is a finite combination of the elementary integrals
//
//   A_j(t) = int_0^t exp(mu_j u) du
//   B_j(t) = int_0^t exp(-(k2+k3)(t-u)) exp(mu_j u) du
//
// with C_fr = K1 sum_j lambda_j B_j and
// C_tis = K1/(k2+k3) sum_j lambda_j (k3 A_j + k2 B_j).

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <sstream>
#include <vector>

#include "tcm/error.hpp"
#include "tcm/kinetic_params.hpp"
#include "tcm/polyexp.hpp"

namespace tcm {

/// Inside this distance |mu_j| resp. |mu_j + k2 + k3| the limit formulas
/// (linear-in-t and t*exp(-(k2+k3)t) terms) are used.
inline constexpr double kResonanceTolerance = 1e-9;

/// Free, bound and total tissue concentration at one time.
struct TissueCurves {
  double c_fr = 0.0;
  double c_bd = 0.0;
  double c_tis = 0.0;
};

namespace detail {

/// expm1(x) / x, continuous at 0.
inline double phi1(double x) { return x == 0.0 ? 1.0 : std::expm1(x) / x; }

/// int_0^1 v exp(x v) dv for |x| <= 1 by its Taylor series.
inline double phi2_series(double x) {
  double term = 1.0;  // x^k / k!
  double sum = 0.5;
  for (int k = 1; k < 30; ++k) {
    term *= x / k;
    sum += term / (k + 2);
  }
  return sum;
}

}  // namespace detail

/// A(t) = int_0^t exp(mu u) du and its derivative with respect to mu.
struct ExpIntegral {
  double value = 0.0;
  double d_mu = 0.0;
};

[[nodiscard]] inline ExpIntegral exp_integral(double mu, double t) {
  if (t == 0.0) return {};
  if (std::abs(mu) <= kResonanceTolerance) return {t, 0.5 * t * t};
  const double x = mu * t;
  if (std::abs(x) <= 1.0) return {t * detail::phi1(x), t * t * detail::phi2_series(x)};
  const double e = std::exp(x);
  return {std::expm1(x) / mu, (e * (x - 1.0) + 1.0) / (mu * mu)};
}

/// B(t) = int_0^t exp(-s (t-u)) exp(mu u) du with derivatives in mu and s.
struct DampedExpIntegral {
  double value = 0.0;
  double d_mu = 0.0;
  double d_s = 0.0;
};

[[nodiscard]] inline DampedExpIntegral damped_exp_integral(double s, double mu, double t) {
  if (t == 0.0) return {};
  const double d = s + mu;
  const double decay = std::exp(-s * t);
  DampedExpIntegral out;
  if (std::abs(d) <= kResonanceTolerance) {
    out.value = t * decay;
    out.d_mu = 0.5 * t * t * decay;
  } else {
    const double x = d * t;
    if (std::abs(x) <= 1.0) {
      out.value = t * decay * detail::phi1(x);
      out.d_mu = t * t * decay * detail::phi2_series(x);
    } else {
      const double grow = std::exp(mu * t);
      out.value = (grow - decay) / d;
      out.d_mu = (grow * (x - 1.0) + decay) / (d * d);
    }
  }
  out.d_s = out.d_mu - t * out.value;
  return out;
}

namespace detail {

inline void require_valid_kinetics(const KineticParams& k, double t) {
  if (!(k.efflux_total() > 0.0)) {
    std::ostringstream msg;
    msg << "k2 + k3 must be positive (got " << k.efflux_total() << ")";
    throw DomainError(msg.str());
  }
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
}

}  // namespace detail

/// Closed-form tissue response for an arbitrary list of exponential terms
/// (duplicates and zero coefficients allowed).
[[nodiscard]] inline TissueCurves tissue_curves(std::span<const ExpTerm> c_art, const KineticParams& k,
                                                double t) {
  detail::require_valid_kinetics(k, t);
  const double s = k.efflux_total();
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (const auto& term : c_art) {
    sum_a += term.lambda * exp_integral(term.mu, t).value;
    sum_b += term.lambda * damped_exp_integral(s, term.mu, t).value;
  }
  TissueCurves out;
  out.c_fr = k.K1 * sum_b;
  out.c_bd = k.K1 * k.k3 / s * (sum_a - sum_b);
  out.c_tis = out.c_fr + out.c_bd;
  return out;
}

[[nodiscard]] inline TissueCurves tissue_curves(const PolyExp& c_art, const KineticParams& k, double t) {
  return tissue_curves(std::span<const ExpTerm>(c_art.terms()), k, t);
}

/// Total tissue concentration C_tis(t) for a polyexponential arterial input.
[[nodiscard]] inline double c_tis_closed_form(std::span<const ExpTerm> c_art, const KineticParams& k,
                                              double t) {
  detail::require_valid_kinetics(k, t);
  const double s = k.efflux_total();
  double sum = 0.0;
  for (const auto& term : c_art) {
    sum += term.lambda * (k.k3 * exp_integral(term.mu, t).value +
                          k.k2 * damped_exp_integral(s, term.mu, t).value);
  }
  return k.K1 * sum / s;
}

[[nodiscard]] inline double c_tis_closed_form(const PolyExp& c_art, const KineticParams& k, double t) {
  return c_tis_closed_form(std::span<const ExpTerm>(c_art.terms()), k, t);
}

/// Free-compartment concentration C_fr(t) for a polyexponential input.
[[nodiscard]] inline double c_fr_closed_form(std::span<const ExpTerm> c_art, const KineticParams& k,
                                             double t) {
  detail::require_valid_kinetics(k, t);
  const double s = k.efflux_total();
  double sum = 0.0;
  for (const auto& term : c_art) sum += term.lambda * damped_exp_integral(s, term.mu, t).value;
  return k.K1 * sum;
}

[[nodiscard]] inline double c_fr_closed_form(const PolyExp& c_art, const KineticParams& k, double t) {
  return c_fr_closed_form(std::span<const ExpTerm>(c_art.terms()), k, t);
}

/// C_tis(t) together with its partial derivatives. d_lambda and d_mu must
/// have one slot per input term.
struct TissueGradient {
  double value = 0.0;
  double d_K1 = 0.0;
  double d_k2 = 0.0;
  double d_k3 = 0.0;
};

inline TissueGradient c_tis_with_gradient(std::span<const ExpTerm> c_art, const KineticParams& k, double t,
                                          std::span<double> d_lambda, std::span<double> d_mu) {
  detail::require_valid_kinetics(k, t);
  if (d_lambda.size() != c_art.size() || d_mu.size() != c_art.size()) {
    throw std::invalid_argument("c_tis_with_gradient: gradient buffers must match the number of terms");
  }
  const double s = k.efflux_total();
  double sum_a = 0.0;
  double sum_b = 0.0;
  double sum_b_ds = 0.0;
  for (std::size_t j = 0; j < c_art.size(); ++j) {
    const auto a = exp_integral(c_art[j].mu, t);
    const auto b = damped_exp_integral(s, c_art[j].mu, t);
    const double lam = c_art[j].lambda;
    sum_a += lam * a.value;
    sum_b += lam * b.value;
    sum_b_ds += lam * b.d_s;
    d_lambda[j] = k.K1 * (k.k3 * a.value + k.k2 * b.value) / s;
    d_mu[j] = k.K1 * lam * (k.k3 * a.d_mu + k.k2 * b.d_mu) / s;
  }
  const double g = k.k3 * sum_a + k.k2 * sum_b;
  TissueGradient out;
  out.value = k.K1 * g / s;
  out.d_K1 = g / s;
  const double dg_dk2 = sum_b + k.k2 * sum_b_ds;
  const double dg_dk3 = sum_a + k.k2 * sum_b_ds;
  out.d_k2 = k.K1 * (dg_dk2 * s - g) / (s * s);
  out.d_k3 = k.K1 * (dg_dk3 * s - g) / (s * s);
  return out;
}

// ---------------------------------------------------------------------------
// Oracles for arbitrary continuous inputs

using TimeFunction = std::function<double(double)>;

/// C_tis(t) from the convolution representation
///   K1 k2/(k2+k3) int_0^t exp(-(k2+k3)(t-u)) C_art(u) du + K1 k3/(k2+k3) int_0^t C_art(u) du,
/// both integrals by adaptive Gauss-Kronrod quadrature.
[[nodiscard]] inline double c_tis_quadrature_oracle(const TimeFunction& c_art, const KineticParams& k, double t,
                                                    double rel_tol = 1e-12) {
  detail::require_valid_kinetics(k, t);
  if (t == 0.0) return 0.0;
  const double s = k.efflux_total();
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  constexpr unsigned max_depth = 20;

  auto integrate = [&](auto&& f, const char* what) {
    double error = 0.0;
    double l1 = 0.0;
    const double value = Quad::integrate(f, 0.0, t, max_depth, rel_tol, &error, &l1);
    if (!std::isfinite(value) || error > 100.0 * rel_tol * std::max(l1, 1e-300)) {
      std::ostringstream msg;
      msg << "quadrature of " << what << " did not converge: achieved error " << error << " (L1 norm " << l1
          << ")";
      throw NumericalError(msg.str());
    }
    return value;
  };

  const double damped = integrate([&](double u) { return std::exp(-s * (t - u)) * c_art(u); }, "damped input");
  const double plain = integrate([&](double u) { return c_art(u); }, "input");
  return k.K1 * k.k2 / s * damped + k.K1 * k.k3 / s * plain;
}

/// Default RK4 step for integrating up to t_end.
[[nodiscard]] inline double default_rk4_step(double t_end) {
  const double step = 1e-3 * t_end / std::max(1.0, t_end);
  return std::min(step, 1e-2);
}

/// Classical fixed-step RK4 integration of the compartment system for several
/// regions sharing one input, sampled at nondecreasing `times` (>= 0).
/// Each interval between output times is split into ceil(length / step)
/// equal substeps. Result is indexed [region][time].
[[nodiscard]] inline std::vector<std::vector<TissueCurves>> ode_rk4_trajectory(
    const TimeFunction& c_art, std::span<const KineticParams> regions, std::span<const double> times,
    double step) {
  if (!(step > 0.0)) throw std::invalid_argument("ode_rk4_trajectory: step must be positive");
  const std::size_t n = regions.size();
  std::vector<std::vector<TissueCurves>> out(n, std::vector<TissueCurves>(times.size()));
  std::vector<double> fr(n, 0.0), bd(n, 0.0);

  double t = 0.0;
  for (std::size_t l = 0; l < times.size(); ++l) {
    const double target = times[l];
    if (target < t) throw std::invalid_argument("ode_rk4_trajectory: times must be nondecreasing and >= 0");
    const double span_len = target - t;
    const auto substeps = static_cast<std::size_t>(std::ceil(span_len / step));
    const double h = substeps > 0 ? span_len / static_cast<double>(substeps) : 0.0;
    const double t0 = t;
    for (std::size_t m = 0; m < substeps; ++m) {
      const double ts = t0 + h * static_cast<double>(m);
      const double u0 = c_art(ts);
      const double u_mid = c_art(ts + 0.5 * h);
      const double u1 = c_art(ts + h);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& k = regions[i];
        const double s = k.efflux_total();
        auto dfr = [&](double u, double f) { return k.K1 * u - s * f; };
        const double a1 = dfr(u0, fr[i]);
        const double b1 = k.k3 * fr[i];
        const double f2 = fr[i] + 0.5 * h * a1;
        const double a2 = dfr(u_mid, f2);
        const double b2 = k.k3 * f2;
        const double f3 = fr[i] + 0.5 * h * a2;
        const double a3 = dfr(u_mid, f3);
        const double b3 = k.k3 * f3;
        const double f4 = fr[i] + h * a3;
        const double a4 = dfr(u1, f4);
        const double b4 = k.k3 * f4;
        fr[i] += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        bd[i] += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
      }
    }
    t = target;
    for (std::size_t i = 0; i < n; ++i) out[i][l] = {fr[i], bd[i], fr[i] + bd[i]};
  }
  return out;
}

/// RK4 solution of the compartment system at t_end from zero initial state.
[[nodiscard]] inline TissueCurves ode_rk4_oracle(const TimeFunction& c_art, const KineticParams& k, double t_end,
                                                 double step) {
  if (!(t_end >= 0.0)) throw std::invalid_argument("ode_rk4_oracle: t_end must be nonnegative");
  const KineticParams regions[] = {k};
  const double times[] = {t_end};
  return ode_rk4_trajectory(c_art, regions, times, step)[0][0];
}

}  // namespace tcm
