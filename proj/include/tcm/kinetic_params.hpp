#pragma once

namespace tcm {

/// Rate constants of one region of the irreversible two-tissue model.
/// K1 is the plasma-to-tissue rate, k2 the efflux rate, k3 the binding rate.
/// All in 1/sec internally.
struct KineticParams {
  double K1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;

  /// Total outflow rate of the free compartment.
  [[nodiscard]] double efflux_total() const { return k2 + k3; }

  friend bool operator==(const KineticParams&, const KineticParams&) = default;
};

}  // namespace tcm
