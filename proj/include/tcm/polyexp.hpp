#pragma once

// Polyexponential and generalized polyexponential functions, plus the
// executable identifiability checks built on them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tcm/error.hpp"
#include "tcm/kinetic_params.hpp"

namespace tcm {

/// Absolute tolerance for the exact "= 0" and "pairwise distinct" tests of
/// the identifiability conditions and for merging exponents.
inline constexpr double kEqualityTolerance = 1e-10;

/// One term lambda * exp(mu * t).
struct ExpTerm {
  double lambda = 0.0;
  double mu = 0.0;

  friend bool operator==(const ExpTerm&, const ExpTerm&) = default;
};

/// Sum of exponentials with pairwise distinct exponents and nonzero
/// coefficients. Construction canonicalizes: exponents closer than
/// kEqualityTolerance are merged (coefficients summed), zero coefficients are
/// dropped and terms are sorted by exponent. The empty sum is the zero
/// function of degree 0.
class PolyExp {
 public:
  PolyExp() = default;

  explicit PolyExp(std::vector<ExpTerm> terms) : terms_(std::move(terms)) { canonicalize(); }

  PolyExp(std::span<const double> lambda, std::span<const double> mu) {
    if (lambda.size() != mu.size()) {
      throw std::invalid_argument("PolyExp: lambda and mu must have equal length");
    }
    terms_.reserve(lambda.size());
    for (std::size_t j = 0; j < lambda.size(); ++j) terms_.push_back({lambda[j], mu[j]});
    canonicalize();
  }

  PolyExp(std::initializer_list<double> lambda, std::initializer_list<double> mu)
      : PolyExp(std::span<const double>(lambda.begin(), lambda.size()),
                std::span<const double>(mu.begin(), mu.size())) {}

  [[nodiscard]] const std::vector<ExpTerm>& terms() const { return terms_; }
  [[nodiscard]] std::size_t degree() const { return terms_.size(); }
  [[nodiscard]] bool is_zero() const { return terms_.empty(); }

  [[nodiscard]] double operator()(double t) const { return eval(t); }

  [[nodiscard]] double eval(double t) const {
    double sum = 0.0;
    for (const auto& term : terms_) sum += term.lambda * std::exp(term.mu * t);
    return sum;
  }

  friend PolyExp operator+(const PolyExp& a, const PolyExp& b) {
    std::vector<ExpTerm> all = a.terms_;
    all.insert(all.end(), b.terms_.begin(), b.terms_.end());
    return PolyExp(std::move(all));
  }

  friend PolyExp operator*(double scale, const PolyExp& g) {
    std::vector<ExpTerm> scaled = g.terms_;
    for (auto& term : scaled) term.lambda *= scale;
    return PolyExp(std::move(scaled));
  }

 private:
  void canonicalize() {
    std::stable_sort(terms_.begin(), terms_.end(),
                     [](const ExpTerm& a, const ExpTerm& b) { return a.mu < b.mu; });
    std::vector<ExpTerm> merged;
    merged.reserve(terms_.size());
    for (const auto& term : terms_) {
      if (!merged.empty() && std::abs(term.mu - merged.back().mu) <= kEqualityTolerance) {
        merged.back().lambda += term.lambda;
      } else {
        merged.push_back(term);
      }
    }
    std::erase_if(merged, [](const ExpTerm& term) { return term.lambda == 0.0; });
    terms_ = std::move(merged);
  }

  std::vector<ExpTerm> terms_;
};

/// Evaluates sum_j lambda_j exp(mu_j t).
[[nodiscard]] inline double eval_polyexp(const PolyExp& g, double t) { return g.eval(t); }

/// P(t) * exp(mu * t) with P given by its coefficients c_0 .. c_{m-1}.
struct PolyExpGroup {
  double mu = 0.0;
  std::vector<double> coeffs;
};

/// Generalized polyexponential sum_l P_l(t) exp(mu_l t). Groups with equal
/// exponents (within kEqualityTolerance) are merged, trailing zero polynomial
/// coefficients trimmed and vanishing groups dropped, so every stored group
/// has a nonzero leading coefficient.
class GenPolyExp {
 public:
  GenPolyExp() = default;

  explicit GenPolyExp(std::vector<PolyExpGroup> groups) : groups_(std::move(groups)) {
    std::stable_sort(groups_.begin(), groups_.end(),
                     [](const PolyExpGroup& a, const PolyExpGroup& b) { return a.mu < b.mu; });
    std::vector<PolyExpGroup> merged;
    for (auto& group : groups_) {
      if (!merged.empty() && std::abs(group.mu - merged.back().mu) <= kEqualityTolerance) {
        auto& target = merged.back().coeffs;
        if (target.size() < group.coeffs.size()) target.resize(group.coeffs.size(), 0.0);
        for (std::size_t k = 0; k < group.coeffs.size(); ++k) target[k] += group.coeffs[k];
      } else {
        merged.push_back(std::move(group));
      }
    }
    for (auto& group : merged) {
      while (!group.coeffs.empty() && group.coeffs.back() == 0.0) group.coeffs.pop_back();
    }
    std::erase_if(merged, [](const PolyExpGroup& g) { return g.coeffs.empty(); });
    groups_ = std::move(merged);
  }

  [[nodiscard]] const std::vector<PolyExpGroup>& groups() const { return groups_; }
  [[nodiscard]] bool is_zero() const { return groups_.empty(); }

  /// Sum of the group multiplicities m_l (polynomial degree + 1).
  [[nodiscard]] std::size_t degree() const {
    std::size_t d = 0;
    for (const auto& group : groups_) d += group.coeffs.size();
    return d;
  }

  [[nodiscard]] double eval(double t) const {
    double sum = 0.0;
    for (const auto& group : groups_) {
      double poly = 0.0;
      for (auto it = group.coeffs.rbegin(); it != group.coeffs.rend(); ++it) poly = poly * t + *it;
      sum += poly * std::exp(group.mu * t);
    }
    return sum;
  }

  [[nodiscard]] double operator()(double t) const { return eval(t); }

 private:
  std::vector<PolyExpGroup> groups_;
};

[[nodiscard]] inline double eval_genpolyexp(const GenPolyExp& g, double t) { return g.eval(t); }

/// Upper bound on the number of real roots of a nonzero generalized
/// polyexponential: deg(g) - 1.
[[nodiscard]] inline std::size_t max_roots_bound(const GenPolyExp& g) {
  if (g.is_zero()) throw DomainError("bound undefined for zero function");
  return g.degree() - 1;
}

/// Counts sign changes of f between consecutive nonzero samples on an
/// equidistant grid of `points` samples over [a, b]. A lower bound on the
/// number of roots in the interval.
[[nodiscard]] inline std::size_t count_sign_changes(const std::function<double(double)>& f, double a,
                                                    double b, std::size_t points = 10000) {
  if (points < 2) throw std::invalid_argument("count_sign_changes: need at least two points");
  std::size_t changes = 0;
  int last_sign = 0;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double v = f(t);
    const int sign = (v > 0.0) - (v < 0.0);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) ++changes;
    last_sign = sign;
  }
  return changes;
}

// ---------------------------------------------------------------------------
// Identifiability checks

/// Outcome of the region-diversity check.
struct AssumptionAReport {
  bool satisfied = false;
  /// Per exponent index j0: the witnessing region triple (0-based), if any.
  std::vector<std::optional<std::array<std::size_t, 3>>> witnesses;
  /// Human-readable description of each failed clause.
  std::vector<std::string> violations;
  /// Smallest distance from equality among the clauses that hold in the
  /// chosen witnesses (0 when unsatisfied).
  double margin = 0.0;
};

namespace detail {

struct TripleVerdict {
  bool ok = true;
  double margin = std::numeric_limits<double>::infinity();
  std::vector<std::string> failed;
};

inline double min_pairwise_gap(double a, double b, double c) {
  return std::min({std::abs(a - b), std::abs(a - c), std::abs(b - c)});
}

inline TripleVerdict check_triple(std::span<const double> mu, std::span<const double> lambda,
                                  std::span<const KineticParams> kinetics, std::size_t j0,
                                  const std::array<std::size_t, 3>& triple, double eta) {
  TripleVerdict verdict;
  const auto& a = kinetics[triple[0]];
  const auto& b = kinetics[triple[1]];
  const auto& c = kinetics[triple[2]];

  const double k3_gap = min_pairwise_gap(a.k3, b.k3, c.k3);
  if (k3_gap <= eta) {
    verdict.ok = false;
    verdict.failed.emplace_back("k3 values not pairwise distinct");
  }
  verdict.margin = std::min(verdict.margin, k3_gap);

  const double s_gap = min_pairwise_gap(a.efflux_total(), b.efflux_total(), c.efflux_total());
  if (s_gap <= eta) {
    verdict.ok = false;
    verdict.failed.emplace_back("k2+k3 not pairwise distinct");
  }
  verdict.margin = std::min(verdict.margin, s_gap);

  for (std::size_t region : triple) {
    const auto& k = kinetics[region];
    const double shifted = mu[j0] + k.k3;
    if (std::abs(shifted) <= eta) {
      verdict.ok = false;
      verdict.failed.push_back("mu_j0 + k3 = 0 in region " + std::to_string(region + 1));
    }
    verdict.margin = std::min(verdict.margin, std::abs(shifted));

    const double s = k.efflux_total();
    if (std::abs(mu[j0] + s) <= eta) continue;  // resonant: clause holds
    double sum = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      const double denom = s + mu[j];
      if (std::abs(denom) > eta) sum += lambda[j] / denom;
    }
    if (std::abs(sum) <= eta) {
      verdict.ok = false;
      verdict.failed.push_back("sum lambda_j/(k2+k3+mu_j) = 0 in region " + std::to_string(region + 1));
    }
    verdict.margin = std::min(verdict.margin, std::abs(sum));
  }
  if (!verdict.ok) verdict.margin = 0.0;
  return verdict;
}

}  // namespace detail

/// Checks the region-diversity condition: for every exponent index j0 there
/// must be three regions with pairwise distinct k3, pairwise distinct k2+k3,
/// mu_j0 + k3 != 0 and either mu_j0 + k2 + k3 = 0 or
/// sum_{j: mu_j+k2+k3 != 0} lambda_j / (k2+k3+mu_j) != 0.
[[nodiscard]] inline AssumptionAReport check_assumption_a(std::span<const double> mu,
                                                          std::span<const double> lambda,
                                                          std::span<const KineticParams> kinetics,
                                                          double eta = kEqualityTolerance) {
  if (mu.empty() || lambda.size() != mu.size()) {
    throw std::invalid_argument("check_assumption_a: mu and lambda must be nonempty and equal length");
  }
  AssumptionAReport report;
  report.witnesses.assign(mu.size(), std::nullopt);
  const std::size_t n = kinetics.size();
  if (n < 3) {
    report.violations.emplace_back("n < 3");
    return report;
  }

  double overall_margin = std::numeric_limits<double>::infinity();
  bool all = true;
  for (std::size_t j0 = 0; j0 < mu.size(); ++j0) {
    double best = -1.0;
    std::vector<std::string> failures;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        for (std::size_t c = b + 1; c < n; ++c) {
          const std::array<std::size_t, 3> triple{a, b, c};
          auto verdict = detail::check_triple(mu, lambda, kinetics, j0, triple, eta);
          if (verdict.ok) {
            if (verdict.margin > best) {
              best = verdict.margin;
              report.witnesses[j0] = triple;
            }
          } else {
            for (auto& clause : verdict.failed) {
              std::ostringstream msg;
              msg << "j0=" << j0 + 1 << " regions (" << a + 1 << "," << b + 1 << "," << c + 1
                  << "): " << clause;
              failures.push_back(msg.str());
            }
          }
        }
      }
    }
    if (report.witnesses[j0]) {
      overall_margin = std::min(overall_margin, best);
    } else {
      all = false;
      report.violations.insert(report.violations.end(), failures.begin(), failures.end());
    }
  }
  report.satisfied = all;
  report.margin = all ? overall_margin : 0.0;
  return report;
}

namespace detail {

/// Maps each value to a cluster id; values chained within eta share an id.
inline std::vector<std::size_t> cluster_ids(std::span<const double> values, double eta) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> ids(values.size());
  std::size_t id = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (r > 0 && values[order[r]] - values[order[r - 1]] > eta) ++id;
    ids[order[r]] = id;
  }
  return ids;
}

inline bool augment(std::size_t left, const std::vector<std::vector<std::size_t>>& adj,
                    std::vector<bool>& seen, std::vector<std::optional<std::size_t>>& match_right) {
  for (std::size_t right : adj[left]) {
    if (seen[right]) continue;
    seen[right] = true;
    if (!match_right[right] || augment(*match_right[right], adj, seen, match_right)) {
      match_right[right] = left;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Largest number of regions that can be selected such that their k3 values
/// are pairwise distinct and their k2+k3 values are pairwise distinct. Solved
/// as a maximum bipartite matching between k3 classes and k2+k3 classes.
[[nodiscard]] inline std::size_t max_distinct_regions(std::span<const KineticParams> kinetics,
                                                      double eta = kEqualityTolerance) {
  std::vector<double> k3(kinetics.size()), s(kinetics.size());
  for (std::size_t i = 0; i < kinetics.size(); ++i) {
    k3[i] = kinetics[i].k3;
    s[i] = kinetics[i].efflux_total();
  }
  const auto left_ids = detail::cluster_ids(k3, eta);
  const auto right_ids = detail::cluster_ids(s, eta);
  const std::size_t n_left = left_ids.empty() ? 0 : *std::max_element(left_ids.begin(), left_ids.end()) + 1;
  const std::size_t n_right = right_ids.empty() ? 0 : *std::max_element(right_ids.begin(), right_ids.end()) + 1;

  std::vector<std::vector<std::size_t>> adj(n_left);
  for (std::size_t i = 0; i < kinetics.size(); ++i) adj[left_ids[i]].push_back(right_ids[i]);

  std::vector<std::optional<std::size_t>> match_right(n_right);
  std::size_t matched = 0;
  for (std::size_t left = 0; left < n_left; ++left) {
    std::vector<bool> seen(n_right, false);
    if (detail::augment(left, adj, seen, match_right)) ++matched;
  }
  return matched;
}

/// True iff at least p+3 regions have pairwise distinct k3 and pairwise
/// distinct k2+k3 (sufficient for the region-diversity condition).
[[nodiscard]] inline bool check_sufficient_condition(std::span<const KineticParams> kinetics, std::size_t p,
                                                     double eta = kEqualityTolerance) {
  if (p < 1) throw std::invalid_argument("check_sufficient_condition: p must be >= 1");
  return max_distinct_regions(kinetics, eta) >= p + 3;
}

}  // namespace tcm
