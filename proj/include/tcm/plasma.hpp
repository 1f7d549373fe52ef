#pragma once

// Parametrized parent plasma fraction families m -> f_m.

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "tcm/error.hpp"

namespace tcm {

/// A family of parent plasma fraction functions parametrized by a vector m.
/// Implementers assert that the family is a degree-q parametrized set: if
/// c f - g vanishes at q distinct points for members f, g then c = 1 and f = g.
class PlasmaFamily {
 public:
  virtual ~PlasmaFamily() = default;

  [[nodiscard]] virtual std::string id() const = 0;
  /// Degree q of the parametrized set.
  [[nodiscard]] virtual std::size_t degree() const = 0;
  /// Number of parameters (length of m).
  [[nodiscard]] virtual std::size_t parameter_count() const = 0;

  [[nodiscard]] virtual double eval(std::span<const double> m, double t) const = 0;
  /// Writes df_m(t)/dm into `grad` (length parameter_count()).
  virtual void gradient(std::span<const double> m, double t, std::span<double> grad) const = 0;
  /// Euclidean projection of m onto the admissible parameter set, in place.
  virtual void project(std::span<double> m) const = 0;
  [[nodiscard]] virtual bool admissible(std::span<const double> m) const = 0;
};

/// f(t) = A exp(xi1 t) + (1 - A) exp(xi2 t), m = (A, xi1, xi2) in
/// [0, inf) x (-inf, 0]^2. Degree 4.
class BiexponentialFraction final : public PlasmaFamily {
 public:
  static constexpr const char* kId = "biexp";

  [[nodiscard]] std::string id() const override { return kId; }
  [[nodiscard]] std::size_t degree() const override { return 4; }
  [[nodiscard]] std::size_t parameter_count() const override { return 3; }

  [[nodiscard]] double eval(std::span<const double> m, double t) const override {
    check_size(m.size());
    // Written as e2 + A (e1 - e2) so that f(0) = 1 holds exactly.
    const double e1 = std::exp(m[1] * t);
    const double e2 = std::exp(m[2] * t);
    return e2 + m[0] * (e1 - e2);
  }

  void gradient(std::span<const double> m, double t, std::span<double> grad) const override {
    check_size(m.size());
    check_size(grad.size());
    const double e1 = std::exp(m[1] * t);
    const double e2 = std::exp(m[2] * t);
    grad[0] = e1 - e2;
    grad[1] = m[0] * t * e1;
    grad[2] = (1.0 - m[0]) * t * e2;
  }

  void project(std::span<double> m) const override {
    check_size(m.size());
    if (m[0] < 0.0) m[0] = 0.0;
    if (m[1] > 0.0) m[1] = 0.0;
    if (m[2] > 0.0) m[2] = 0.0;
  }

  [[nodiscard]] bool admissible(std::span<const double> m) const override {
    return m.size() == 3 && m[0] >= 0.0 && m[1] <= 0.0 && m[2] <= 0.0;
  }

 private:
  static void check_size(std::size_t size) {
    if (size != 3) throw std::invalid_argument("biexp plasma fraction expects 3 parameters");
  }
};

/// Process-wide registry of plasma fraction families. The biexponential
/// family is registered on first use.
class PlasmaRegistry {
 public:
  static PlasmaRegistry& instance() {
    static PlasmaRegistry registry;
    return registry;
  }

  /// Adds or replaces a family under its id.
  void add(std::shared_ptr<const PlasmaFamily> family) {
    std::unique_lock lock(mutex_);
    families_[family->id()] = std::move(family);
  }

  [[nodiscard]] std::shared_ptr<const PlasmaFamily> find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = families_.find(id);
    if (it == families_.end()) throw std::invalid_argument("unknown plasma fraction model '" + id + "'");
    return it->second;
  }

  [[nodiscard]] bool contains(const std::string& id) const {
    std::shared_lock lock(mutex_);
    return families_.contains(id);
  }

 private:
  PlasmaRegistry() { families_[BiexponentialFraction::kId] = std::make_shared<BiexponentialFraction>(); }

  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const PlasmaFamily>> families_;
};

inline void register_plasma_family(std::shared_ptr<const PlasmaFamily> family) {
  PlasmaRegistry::instance().add(std::move(family));
}

[[nodiscard]] inline std::shared_ptr<const PlasmaFamily> find_plasma_family(const std::string& id) {
  return PlasmaRegistry::instance().find(id);
}

/// Degree q of the named family.
[[nodiscard]] inline std::size_t plasma_family_degree(const std::string& id) { return find_plasma_family(id)->degree(); }

/// A family member: model id plus its parameter vector.
struct PlasmaParams {
  std::string model_id = BiexponentialFraction::kId;
  std::vector<double> m;

  static PlasmaParams biexponential(double a, double xi1, double xi2) { return {BiexponentialFraction::kId, {a, xi1, xi2}}; }
};

[[nodiscard]] inline double eval_plasma_fraction(const PlasmaParams& pp, double t) {
  return find_plasma_family(pp.model_id)->eval(pp.m, t);
}

}  // namespace tcm
