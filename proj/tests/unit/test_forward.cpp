#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tcm/experiments.hpp"
#include "tcm/jacobian_check.hpp"

using namespace tcm;

namespace {

struct ReferenceSetup {
  Scenario sc = reference_scenario();
  ForwardModel full = sc.make_model(DataMode::full);
  ForwardModel known = sc.make_model(DataMode::known_cart);
  Eigen::VectorXd x_true = pack(sc.true_parameters()).flat();
};

const ReferenceSetup& setup() {
  static const ReferenceSetup s;
  return s;
}

Eigen::VectorXd random_vector(std::mt19937_64& gen, Eigen::Index n, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = z(gen);
  return v;
}

}  // namespace

TEST(Layout, SizesAndOffsets) {
  const Layout layout{4, 3, 5};
  EXPECT_EQ(layout.size(), 26u);
  EXPECT_EQ(layout.mu_offset(), 4u);
  EXPECT_EQ(layout.plasma_offset(), 8u);
  EXPECT_EQ(layout.kinetics_offset(0), 11u);
  EXPECT_EQ(layout.kinetics_offset(4), 23u);
  EXPECT_EQ(setup().sc.layout().size(), 18u);
}

TEST(Pack, RoundTripOnRandomVectors) {
  std::mt19937_64 gen(21);
  const Layout layout{4, 3, 5};
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd v = random_vector(gen, 26);
    const Parameters params = unpack(layout, v);
    EXPECT_EQ(params.layout(), layout);
    EXPECT_EQ(pack(params).flat(), v);
    EXPECT_EQ(unpack(pack(params)), params);
  }
  EXPECT_THROW((void)unpack(layout, Eigen::VectorXd::Zero(25)), std::invalid_argument);
  EXPECT_THROW(ParamVector(layout, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST(ApplyForward, GroundTruthHasZeroBloodBlock) {
  const auto& s = setup();
  for (const auto* model : {&s.full, &s.known}) {
    const Eigen::VectorXd y = model->evaluate(s.x_true);
    ASSERT_EQ(y.size(), 100);
    EXPECT_LT(y.tail(25).cwiseAbs().maxCoeff(), 1e-15);
  }
  const auto set = apply_forward(pack(s.sc.true_parameters()), s.full);
  EXPECT_EQ(set.tissue.rows(), 3);
  EXPECT_EQ(set.tissue.cols(), 25);
  EXPECT_EQ(set.flatten(), s.full.evaluate(s.x_true));
}

TEST(ApplyForward, TissueBlockMatchesRk4Oracle) {
  const auto& s = setup();
  const Eigen::VectorXd y = s.full.evaluate(s.x_true);
  const auto traj = ode_rk4_trajectory([&](double t) { return s.sc.c_art(t); }, s.sc.kinetics, s.sc.t_grid,
                                       default_rk4_step(s.sc.t_max()));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t l = 1; l < 25; ++l) {
      const double ref = traj[i][l].c_tis;
      EXPECT_NEAR(y[static_cast<Eigen::Index>(25 * i + l)], ref, 1e-8 * std::abs(ref));
    }
  }
}

TEST(ApplyForward, RejectsNonpositiveEfflux) {
  const auto& s = setup();
  Eigen::VectorXd x = s.x_true;
  const auto o = static_cast<Eigen::Index>(s.sc.layout().kinetics_offset(0));
  x[o + 1] = 0.0;
  x[o + 2] = 0.0;
  EXPECT_THROW((void)s.full.evaluate(x), DomainError);
  EXPECT_THROW((void)s.full.jacobian(x), DomainError);
}

TEST(ApplyForward, ScalingDegeneracy) {
  const auto& s = setup();
  const Eigen::VectorXd y = s.full.evaluate(s.x_true);
  const Eigen::Index tissue = 75;
  for (double zeta : {0.5, 2.0, 10.0}) {
    Parameters p = s.sc.true_parameters();
    for (auto& l : p.lambda) l *= zeta;
    for (auto& k : p.kinetics) k.K1 /= zeta;
    const Eigen::VectorXd yz = s.full.evaluate(pack(p).flat());
    EXPECT_LE((yz.head(tissue) - y.head(tissue)).norm(), 1e-12 * y.head(tissue).norm());
    EXPECT_GT((yz.tail(25) - y.tail(25)).norm(), 1e-6);
  }
}

TEST(Jacobian, StructuralZerosAndLinearity) {
  const auto& s = setup();
  const Layout layout = s.sc.layout();
  const Eigen::VectorXd y = s.full.evaluate(s.x_true);
  for (const auto* model : {&s.full, &s.known}) {
    const Eigen::MatrixXd jac = model->jacobian(s.x_true);
    ASSERT_EQ(jac.rows(), 100);
    ASSERT_EQ(jac.cols(), 18);
    const auto k0 = static_cast<Eigen::Index>(layout.kinetics_offset(0));
    EXPECT_EQ(jac.bottomRows(25).rightCols(9).cwiseAbs().maxCoeff(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto col = k0 + static_cast<Eigen::Index>(3 * i);
      const double K1 = s.sc.kinetics[i].K1;
      for (Eigen::Index l = 0; l < 25; ++l) {
        const Eigen::Index row = static_cast<Eigen::Index>(25 * i) + l;
        EXPECT_NEAR(jac(row, col), y[row] / K1, 1e-13 * (1.0 + std::abs(y[row] / K1)));
      }
      // other regions do not depend on this region's rates
      for (std::size_t other = 0; other < 3; ++other) {
        if (other == i) continue;
        EXPECT_EQ(jac.block(static_cast<Eigen::Index>(25 * other), col, 25, 3).cwiseAbs().maxCoeff(), 0.0);
      }
    }
  }
  const Eigen::MatrixXd jk = s.known.jacobian(s.x_true);
  EXPECT_EQ(jk.middleCols(6, 3).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::MatrixXd jf = s.full.jacobian(s.x_true);
  EXPECT_GT(jf.bottomRows(25).middleCols(6, 3).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Jacobian, MatchesFiniteDifferencesAtRandomPoints) {
  const auto& s = setup();
  for (const auto* model : {&s.full, &s.known}) {
    JacobianCheckSettings settings;
    settings.trials = 20;
    const auto report = verify_jacobian(*model, s.x_true, settings);
    EXPECT_TRUE(report.passed) << report.max_deviation;
    EXPECT_LE(report.max_deviation, 1e-5);
    EXPECT_GT(report.entries_checked, 20u * 500u);
  }
}

TEST(Jacobian, PlainDifferencesAgreeOnTissueRows) {
  const auto& s = setup();
  const Eigen::MatrixXd fd = finite_difference_jacobian<ForwardModel>(s.full, s.x_true);
  const Eigen::MatrixXd jac = s.full.jacobian(s.x_true);
  const auto dev = max_relative_deviation(jac.topRows(75), fd.topRows(75));
  EXPECT_LE(dev.value, 1e-6);
}

TEST(Jacobian, CorruptedEntryIsDetected) {
  const auto& s = setup();
  JacobianCheckSettings settings;
  settings.trials = 2;
  settings.corrupt = [](Eigen::MatrixXd& jac) { jac(30, 0) *= 1.001; };
  const auto report = verify_jacobian(s.full, s.x_true, settings);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.worst_row, 30);
  EXPECT_EQ(report.worst_col, 0);
}

TEST(Jacobian, ResonantPointMatchesFiniteDifferences) {
  // mu_1 + k2 + k3 = 0 in region 1: the resonance branch and its derivative.
  const auto& s = setup();
  Eigen::VectorXd x = s.x_true;
  const auto o = static_cast<Eigen::Index>(s.sc.layout().kinetics_offset(0));
  x[0 + 3] = -(x[o + 1] + x[o + 2]);
  const Eigen::MatrixXd jac = s.full.jacobian(x);
  const Eigen::MatrixXd fd = finite_difference_jacobian(s.full, x);
  EXPECT_LE(max_relative_deviation(jac, fd).value, 1e-5);
}

TEST(Projection, Examples) {
  const auto& s = setup();
  EXPECT_EQ(s.full.project(s.x_true), s.x_true);
  EXPECT_TRUE(s.full.in_domain(s.x_true));
  Eigen::VectorXd x = s.x_true;
  x[9] = -0.5;   // K1 of region 1
  x[7] = 0.2;    // xi1
  x[0] = -50.0;  // lambda is unconstrained
  const Eigen::VectorXd px = s.full.project(x);
  EXPECT_FALSE(s.full.in_domain(x));
  EXPECT_EQ(px[9], kDefaultDomainFloor);
  EXPECT_EQ(px[7], 0.0);
  EXPECT_EQ(px[0], -50.0);
  EXPECT_EQ(project_to_domain(pack(s.sc.true_parameters()), s.full).flat(), s.x_true);
}

TEST(ProjectionProperty, IdempotentAndNonexpansive) {
  const auto& s = setup();
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::VectorXd a = s.x_true + random_vector(gen, 18, 0.3);
    const Eigen::VectorXd b = s.x_true + random_vector(gen, 18, 0.3);
    const Eigen::VectorXd pa = s.full.project(a);
    EXPECT_EQ(s.full.project(pa), pa);
    EXPECT_TRUE(s.full.in_domain(pa));
    EXPECT_LE((pa - s.full.project(b)).norm(), (a - b).norm() + 1e-15);
    // Euclidean projection: no admissible point is closer.
    EXPECT_LE((a - pa).norm(), (a - s.x_true).norm() + 1e-15);
  }
}

TEST(Tikhonov, Examples) {
  const auto& s = setup();
  const Eigen::VectorXd y = s.full.evaluate(s.x_true);
  EXPECT_EQ(tikhonov_objective(s.full, s.x_true, s.x_true, y, 3.0), 0.0);

  std::mt19937_64 gen(41);
  const Eigen::VectorXd x = s.full.project(s.x_true + random_vector(gen, 18, 0.01));
  const Eigen::VectorXd xr = s.x_true + random_vector(gen, 18, 0.01);
  // Residual recomputed through the structured interface.
  const auto set = apply_forward(ParamVector(s.sc.layout(), x), s.full);
  const auto ys = MeasurementSet::from_flat(3, 25, y);
  double residual = (set.tissue - ys.tissue).squaredNorm() + (set.blood - ys.blood).squaredNorm();
  double penalty = 0.0;
  for (Eigen::Index i = 0; i < 18; ++i) penalty += (x[i] - xr[i]) * (x[i] - xr[i]);
  EXPECT_NEAR(tikhonov_objective(s.full, x, xr, y, 0.0), residual, 1e-14 * (1.0 + residual));
  EXPECT_NEAR(tikhonov_objective(s.full, x, xr, y, 1.0), residual + penalty, 1e-14 * (1.0 + residual + penalty));
  EXPECT_THROW((void)tikhonov_objective(s.full, x, xr, y, -1.0), std::invalid_argument);
}

TEST(DataModeNames, RoundTrip) {
  for (auto mode : {DataMode::full, DataMode::known_cart}) EXPECT_EQ(data_mode_from_string(to_string(mode)), mode);
  EXPECT_THROW((void)data_mode_from_string("partial"), std::invalid_argument);
}
