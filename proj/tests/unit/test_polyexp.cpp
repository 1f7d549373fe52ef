#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tcm/polyexp.hpp"

using namespace tcm;

namespace {

const std::vector<KineticParams> kReferenceKinetics = {
    {0.157, 0.174, 0.118}, {0.161, 0.179, 0.096}, {0.177, 0.159, 0.088}};
const std::vector<double> kReferenceLambda = {-5.0, 4.0, 1.0};
const std::vector<double> kReferenceMu = {-0.5, -0.2, -0.1};

bool mentions(const AssumptionAReport& r, const std::string& needle) {
  for (const auto& v : r.violations)
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(PolyExp, EvaluatesReferenceInputAtZeroAndTen) {
  const PolyExp g(kReferenceLambda, kReferenceMu);
  EXPECT_EQ(g.eval(0.0), 0.0);
  // mpmath, 50 digits
  EXPECT_NEAR(g.eval(10.0), 0.87553083912246575369, 1e-14);
}

TEST(PolyExp, EmptySumIsZero) {
  const PolyExp g;
  EXPECT_TRUE(g.is_zero());
  EXPECT_EQ(g.degree(), 0u);
  EXPECT_EQ(g.eval(3.0), 0.0);
}

TEST(PolyExp, CanonicalizationMergesAndDropsTerms) {
  const PolyExp g({{1.0, -0.2}, {2.0, -0.2 + 1e-12}, {0.0, -3.0}, {4.0, -1.0}});
  ASSERT_EQ(g.degree(), 2u);
  EXPECT_DOUBLE_EQ(g.terms()[0].mu, -1.0);
  EXPECT_DOUBLE_EQ(g.terms()[1].lambda, 3.0);
  const PolyExp cancel(std::vector<ExpTerm>{{1.0, -0.5}, {-1.0, -0.5}});
  EXPECT_TRUE(cancel.is_zero());
}

TEST(PolyExp, SpanConstructorRejectsLengthMismatch) {
  const std::vector<double> lambda = {1.0, 2.0};
  const std::vector<double> mu = {1.0};
  EXPECT_THROW(PolyExp(lambda, mu), std::invalid_argument);
}

TEST(PolyExpProperty, SuperpositionAndScaling) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> coef(-3.0, 3.0), rate(-1.0, 0.2), time(0.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ExpTerm> a(4), b(3);
    for (auto& t : a) t = {coef(gen), rate(gen)};
    for (auto& t : b) t = {coef(gen), rate(gen)};
    const PolyExp f(a), g(b);
    const double c = coef(gen);
    const double t = time(gen);
    const double sum = (f + g).eval(t);
    const double expected = f.eval(t) + g.eval(t);
    EXPECT_NEAR(sum, expected, 1e-12 * (1.0 + std::abs(f.eval(t)) + std::abs(g.eval(t))));
    EXPECT_NEAR((c * f).eval(t), c * f.eval(t), 1e-12 * (1.0 + std::abs(c * f.eval(t))));
  }
}

TEST(GenPolyExp, HornerEvaluation) {
  const GenPolyExp g({{-0.5, {1.0, 2.0, 3.0}}, {0.1, {-1.0}}});
  const double t = 1.7;
  const double expected = (1.0 + 2.0 * t + 3.0 * t * t) * std::exp(-0.5 * t) - std::exp(0.1 * t);
  EXPECT_NEAR(g.eval(t), expected, 1e-14);
  EXPECT_EQ(g.degree(), 4u);
}

TEST(GenPolyExp, TrimsAndMerges) {
  const GenPolyExp g({{-1.0, {1.0, 0.0, 0.0}}, {-1.0, {-1.0}}, {2.0, {0.0}}});
  EXPECT_TRUE(g.is_zero());
  EXPECT_THROW((void)max_roots_bound(g), DomainError);
}

TEST(GenPolyExp, RootBoundExamples) {
  // (t - 1)(t - 2) e^{-t} has degree 3 and two roots.
  const GenPolyExp g({{-1.0, {2.0, -3.0, 1.0}}});
  EXPECT_EQ(max_roots_bound(g), 2u);
  EXPECT_EQ(count_sign_changes(g, 0.0, 5.0), 2u);
  // e^{-t} - e^{-2t}: degree 2, a single root at 0.
  const GenPolyExp h({{-1.0, {1.0}}, {-2.0, {-1.0}}});
  EXPECT_EQ(max_roots_bound(h), 1u);
}

TEST(GenPolyExpProperty, SignChangesNeverExceedBound) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), rate(-2.0, 2.0);
  std::uniform_int_distribution<int> groups(1, 3), mult(1, 3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<PolyExpGroup> gs;
    const int ng = groups(gen);
    for (int l = 0; l < ng; ++l) {
      PolyExpGroup group{rate(gen), {}};
      const int m = mult(gen);
      for (int k = 0; k < m; ++k) group.coeffs.push_back(coef(gen));
      gs.push_back(group);
    }
    const GenPolyExp g(gs);
    if (g.is_zero()) continue;
    EXPECT_LE(count_sign_changes(g, -3.0, 3.0, 4000), max_roots_bound(g));
  }
}

TEST(AssumptionA, ReferenceScenarioIsSatisfied) {
  const auto report = check_assumption_a(kReferenceMu, kReferenceLambda, kReferenceKinetics);
  EXPECT_TRUE(report.satisfied);
  EXPECT_TRUE(report.violations.empty());
  EXPECT_GT(report.margin, 1e-3);
  ASSERT_EQ(report.witnesses.size(), 3u);
  for (const auto& w : report.witnesses) {
    ASSERT_TRUE(w.has_value());
    EXPECT_EQ((*w)[0], 0u);
    EXPECT_EQ((*w)[1], 1u);
    EXPECT_EQ((*w)[2], 2u);
  }
}

TEST(AssumptionA, DuplicatedKineticsNamesClause) {
  auto kin = kReferenceKinetics;
  kin[2] = kin[1];
  const auto report = check_assumption_a(kReferenceMu, kReferenceLambda, kin);
  EXPECT_FALSE(report.satisfied);
  EXPECT_EQ(report.margin, 0.0);
  EXPECT_TRUE(mentions(report, "k3 values not pairwise distinct"));
  EXPECT_TRUE(mentions(report, "k2+k3 not pairwise distinct"));
}

TEST(AssumptionA, EqualEffluxOnlyNamesEffluxClause) {
  auto kin = kReferenceKinetics;
  kin[2].k2 = kin[0].efflux_total() - kin[2].k3;
  const auto report = check_assumption_a(kReferenceMu, kReferenceLambda, kin);
  EXPECT_FALSE(report.satisfied);
  EXPECT_TRUE(mentions(report, "k2+k3 not pairwise distinct"));
  EXPECT_FALSE(mentions(report, "k3 values not pairwise distinct"));
}

TEST(AssumptionA, TooFewRegions) {
  const std::vector<KineticParams> kin(kReferenceKinetics.begin(), kReferenceKinetics.begin() + 2);
  const auto report = check_assumption_a(kReferenceMu, kReferenceLambda, kin);
  EXPECT_FALSE(report.satisfied);
  EXPECT_TRUE(mentions(report, "n < 3"));
}

TEST(AssumptionA, ExponentCancellingBindingRate) {
  auto mu = kReferenceMu;
  mu[0] = -kReferenceKinetics[0].k3;
  const auto report = check_assumption_a(mu, kReferenceLambda, kReferenceKinetics);
  EXPECT_FALSE(report.satisfied);
  EXPECT_TRUE(mentions(report, "mu_j0 + k3 = 0 in region 1"));
}

TEST(AssumptionA, VanishingWeightedSum) {
  // Single exponent: sum lambda/(s + mu) = 0 iff lambda = 0 is excluded by
  // construction, so use two terms balanced for region 1.
  const auto& k = kReferenceKinetics[0];
  const double s = k.efflux_total();
  const std::vector<double> mu = {-0.01, -0.02};
  const std::vector<double> lambda = {s + mu[0], -(s + mu[1])};
  const auto report = check_assumption_a(mu, lambda, kReferenceKinetics);
  EXPECT_FALSE(report.satisfied);
  EXPECT_TRUE(mentions(report, "sum lambda_j/(k2+k3+mu_j) = 0 in region 1"));
}

TEST(AssumptionA, MoreRegionsFindAlternativeWitness) {
  auto kin = kReferenceKinetics;
  kin.push_back(kin[1]);  // duplicate of region 2
  kin.push_back({0.15, 0.2, 0.11});
  const auto report = check_assumption_a(kReferenceMu, kReferenceLambda, kin);
  EXPECT_TRUE(report.satisfied);
}

TEST(SufficientCondition, CountsDiverseRegions) {
  EXPECT_EQ(max_distinct_regions(kReferenceKinetics), 3u);
  EXPECT_FALSE(check_sufficient_condition(kReferenceKinetics, 3));
  std::vector<KineticParams> six;
  for (int i = 0; i < 6; ++i) six.push_back({0.1, 0.1 + 0.01 * i, 0.05 + 0.013 * i});
  EXPECT_TRUE(check_sufficient_condition(six, 3));
  EXPECT_THROW((void)check_sufficient_condition(six, 0), std::invalid_argument);
  // Duplicates of a single region contribute once.
  std::vector<KineticParams> same(8, {0.1, 0.2, 0.3});
  EXPECT_EQ(max_distinct_regions(same), 1u);
}

TEST(SufficientCondition, MatchingBeatsGreedyOrder) {
  // k3 classes {a, a, b}, k2+k3 classes {x, y, y}: two regions selectable.
  const std::vector<KineticParams> kin = {{1.0, 0.2, 0.1}, {1.0, 0.3, 0.1}, {1.0, 0.1, 0.3}};
  EXPECT_EQ(max_distinct_regions(kin), 2u);
}

TEST(SufficientConditionProperty, ImpliesAssumptionA) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> rate(0.01, 0.5), coef(-5.0, 5.0), decay(-1.0, -0.01);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 2;
    std::vector<KineticParams> kin(p + 3);
    for (auto& k : kin) k = {rate(gen), rate(gen), rate(gen)};
    std::vector<double> mu(p), lambda(p);
    for (std::size_t j = 0; j < p; ++j) {
      mu[j] = decay(gen);
      lambda[j] = coef(gen);
    }
    if (!check_sufficient_condition(kin, p)) continue;
    EXPECT_TRUE(check_assumption_a(mu, lambda, kin).satisfied) << "trial " << trial;
  }
}
