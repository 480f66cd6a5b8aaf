// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "reachcert/certificates.hpp"

namespace reachcert {
namespace {

ProblemSpec benchmark(const std::string& name, QueryKind kind) {
  ProblemSpec spec = load_problem(std::string(REACHCERT_SOURCE_DIR) + "/benchmarks/" + name + ".json");
  spec.query.kind = kind;
  return spec;
}

double max_abs_coefficient(const Polynomial& p) {
  double m = 0.0;
  for (const auto& [mono, c] : p.terms()) m = std::max(m, std::abs(c));
  return m;
}

std::vector<double> random_point(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  std::vector<double> z(n);
  for (auto& x : z) x = dist(rng);
  return z;
}

TEST(Kinds, NamesRoundTrip) {
  for (auto k : kAllCertificateKinds) {
    EXPECT_EQ(certificate_kind_from_string(to_string(k)), k);
  }
  EXPECT_EQ(certificate_kind_from_string("hl2"), CertificateKind::HL2);
  EXPECT_THROW(certificate_kind_from_string("HX1"), std::invalid_argument);
}

TEST(Conditions, CountsAndUnknowns) {
  const auto h = benchmark("brownian", QueryKind::horizon);
  const auto i = benchmark("brownian", QueryKind::instant);
  const DegreeSpec d;

  const auto hu1 = build_condition(CertificateKind::HU1, h.model, h.query, d, 0.0);
  EXPECT_EQ(hu1.conditions.size(), 4u);
  EXPECT_FALSE(hu1.w || hu1.beta || hu1.M);
  EXPECT_EQ(hu1.decisions(), 15u);  // dense quartic in (t, x1)

  const auto hl1 = build_condition(CertificateKind::HL1, h.model, h.query, d, 0.0);
  EXPECT_EQ(hl1.conditions.size(), 7u);
  ASSERT_TRUE(hl1.w && hl1.M);
  EXPECT_FALSE(hl1.beta);
  EXPECT_EQ(hl1.decisions(), 31u);
  EXPECT_TRUE(hl1.maximize);

  const auto hu3 = build_condition(CertificateKind::HU3, h.model, h.query, d, -1.0);
  EXPECT_EQ(hu3.decisions(), 6u);  // quartic in x1 plus beta
  ASSERT_TRUE(hu3.beta);
  for (const auto& c : hu3.conditions) {
    for (const auto& p : c.pieces) EXPECT_FALSE(p.timed) << c.name;
  }

  const auto iu1 = build_condition(CertificateKind::IU1, i.model, i.query, d, 0.0);
  EXPECT_EQ(iu1.conditions.size(), 4u);
  const auto il1 = build_condition(CertificateKind::IL1, i.model, i.query, d, 0.0);
  EXPECT_EQ(il1.conditions.size(), 4u);
  EXPECT_FALSE(il1.w || il1.M);
}

TEST(Conditions, KindMismatchAndDegreeErrors) {
  const auto h = benchmark("ou", QueryKind::horizon);
  EXPECT_THROW(build_condition(CertificateKind::IU1, h.model, h.query, {}, 0.0), KindMismatchError);
  EXPECT_THROW(certify(CertificateKind::IL2, h.model, h.query), KindMismatchError);

  DegreeSpec odd;
  odd.v = 3;
  EXPECT_THROW(build_condition(CertificateKind::HU1, h.model, h.query, odd, 0.0), sos::DegreeError);
  DegreeSpec odd_w;
  odd_w.w = 5;
  EXPECT_THROW(build_condition(CertificateKind::HL1, h.model, h.query, odd_w, 0.0), sos::DegreeError);
  odd_w.drop_w = true;
  EXPECT_NO_THROW(build_condition(CertificateKind::HL1, h.model, h.query, odd_w, 0.0));
  DegreeSpec odd_mult;
  odd_mult.multiplier = 1;
  EXPECT_THROW(build_condition(CertificateKind::HU1, h.model, h.query, odd_mult, 0.0), sos::DegreeError);
}

// Every expression must be affine in the decisions: check the exact identity
// E(a z1 + (1 - a) z2) = a E(z1) + (1 - a) E(z2) and that only declared decisions appear.
TEST(Conditions, ExpressionsAreAffineForEveryKind) {
  std::mt19937_64 rng(7);
  for (const char* name : {"brownian", "oscillator2d"}) {
    for (auto kind : kAllCertificateKinds) {
      const auto spec = benchmark(name, traits(kind).query);
      const auto prob = build_condition(kind, spec.model, spec.query, {}, traits(kind).uses_alpha ? -0.5 : 0.0);
      const std::size_t nz = prob.decisions();
      for (const auto& c : prob.conditions) {
        for (auto id : c.expression.decisions()) EXPECT_LT(id, nz);
        const auto z1 = random_point(nz, rng), z2 = random_point(nz, rng);
        std::vector<double> mix(nz);
        const double a = 0.3;
        for (std::size_t k = 0; k < nz; ++k) mix[k] = a * z1[k] + (1 - a) * z2[k];
        const Polynomial lhs = c.expression.evaluate(mix);
        const Polynomial rhs = a * c.expression.evaluate(z1) + (1 - a) * c.expression.evaluate(z2);
        EXPECT_LT(max_abs_coefficient(lhs - rhs), 1e-9) << to_string(kind) << " " << c.name;
      }
      for (auto id : prob.objective.coef) EXPECT_LT(id.first, nz);
    }
  }
}

TEST(Conditions, HU1IsHU2AtZeroAlphaAndBeta) {
  const auto h = benchmark("oscillator2d", QueryKind::horizon);
  const auto hu1 = build_condition(CertificateKind::HU1, h.model, h.query, {}, 0.0);
  const auto hu2 = build_condition(CertificateKind::HU2, h.model, h.query, {}, 0.0);
  ASSERT_EQ(hu2.decisions(), hu1.decisions() + 1);
  ASSERT_EQ(hu1.conditions.size(), hu2.conditions.size());
  std::mt19937_64 rng(3);
  auto z = random_point(hu1.decisions(), rng);
  auto z2 = z;
  z2.push_back(0.0);  // beta pinned to 0
  for (std::size_t c = 0; c < hu1.conditions.size(); ++c) {
    EXPECT_EQ(hu1.conditions[c].name, hu2.conditions[c].name);
    const Polynomial diff = hu1.conditions[c].expression.evaluate(z) - hu2.conditions[c].expression.evaluate(z2);
    EXPECT_LT(max_abs_coefficient(diff), 1e-12);
  }
  EXPECT_DOUBLE_EQ(hu1.objective.evaluate(z), hu2.objective.evaluate(z2));
}

TEST(Bounds, FormulaExamples) {
  EXPECT_NEAR(bound_formula(CertificateKind::HU2, 0.3, 0.0, 0.2, 0.0, 2.0), 0.7, 1e-12);
  EXPECT_NEAR(bound_formula(CertificateKind::HU2, 0.25, 1.0, 0.0, 0.0, std::log(2.0)), 0.5, 1e-12);
  EXPECT_NEAR(bound_formula(CertificateKind::HL2, 0.9, 0.0, -0.1, 0.05, 1.0), 0.75, 1e-12);
  EXPECT_NEAR(bound_formula(CertificateKind::HL1, 0.8, 0.0, 0.0, 0.1, 2.0), 0.7, 1e-12);
  // Plain kinds ignore alpha, beta and M.
  EXPECT_DOUBLE_EQ(bound_formula(CertificateKind::IU1, 0.4, 0.0, 0.0, 0.0, 3.0), 0.4);
  EXPECT_DOUBLE_EQ(bound_formula(CertificateKind::IL1, 0.4, 0.0, 0.0, 0.0, 3.0), 0.4);
}

TEST(Bounds, ClosedFormsAwayFromZero) {
  const double a = -0.7, b = 0.3, T = 1.5, v0 = 0.4, M = 0.02;
  const double e = std::exp(a * T);
  EXPECT_NEAR(bound_formula(CertificateKind::HU2, v0, a, b, 0, T), e * v0 + b / a * (e - 1), 1e-13);
  EXPECT_NEAR(bound_formula(CertificateKind::IU3, v0, a, b, 0, T), e * v0 + b / a * (e - 1), 1e-13);
  EXPECT_NEAR(bound_formula(CertificateKind::IL2, v0, a, b, 0, T), e * v0 + b / a * (e - 1), 1e-13);
  const double hl = ((v0 / a + b / (a * a)) * (e - 1) - b / a * T - 2 * M) / T;
  EXPECT_NEAR(bound_formula(CertificateKind::HL2, v0, a, b, M, T), hl, 1e-13);
  EXPECT_NEAR(bound_formula(CertificateKind::HL3, v0, a, b, M, T), hl, 1e-13);
}

TEST(Bounds, InstantKindsAtZeroAlpha) {
  const auto c = bound_coefficients(CertificateKind::IU2, 0.0, 2.5);
  EXPECT_DOUBLE_EQ(c.v0, 1.0);
  EXPECT_DOUBLE_EQ(c.beta, 2.5);
  EXPECT_DOUBLE_EQ(c.M, 0.0);
  const auto l = bound_coefficients(CertificateKind::HL2, 0.0, 2.5);
  EXPECT_DOUBLE_EQ(l.v0, 1.0);
  EXPECT_DOUBLE_EQ(l.beta, 1.25);
  EXPECT_DOUBLE_EQ(l.M, -0.8);
}

TEST(Bounds, ContinuityAtZeroAlpha) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double v0 = (i % 10) / 9.0;
    const double beta = -1.0 + 2.0 * ((i / 10) % 10) / 9.0;
    const double T = 0.1 + 9.9 * ((i * 37) % 100) / 99.0;
    for (auto kind : {CertificateKind::HU2, CertificateKind::HL2}) {
      const double at0 = bound_formula(kind, v0, 0.0, beta, 0.1, T);
      for (double a : {1e-8, -1e-8}) worst = std::max(worst, std::abs(bound_formula(kind, v0, a, beta, 0.1, T) - at0));
    }
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Bounds, SmallAlphaSeriesMatchesDirectFormula) {
  // Just above the cutoff the series and the direct expression must agree.
  const double a = 2e-3, b = 0.4, T = 1.0, v0 = 0.3;
  const double e = std::exp(a * T);
  const double direct = ((v0 / a + b / (a * a)) * (e - 1) - b / a * T) / T;
  EXPECT_NEAR(bound_formula(CertificateKind::HL2, v0, a, b, 0.0, T), direct, 1e-9);
  EXPECT_NEAR(bound_formula(CertificateKind::HL2, v0, 5e-4, b, 0.0, T), v0 * (1 + 2.5e-4) + b * T / 2 * (1 + 5e-4 / 3),
              1e-7);
}

TEST(CompetingBounds, Examples) {
  const auto c = competing_bounds(0.5, -1.0, 2.0, 1.0);
  EXPECT_NEAR(c.gronwall, std::exp(-1.0) * 0.5 - 2.0 * (std::exp(-1.0) - 1.0), 1e-12);
  EXPECT_NEAR(c.gronwall, 1.4481, 1e-4);
  ASSERT_TRUE(c.santoyo);
  EXPECT_NEAR(*c.santoyo, (0.5 + 2.0 * std::expm1(2.0)) * std::exp(-2.0), 1e-12);
  EXPECT_GT(*c.santoyo, c.gronwall);

  const auto z = competing_bounds(0.2, 0.0, 0.1, 1.0);
  ASSERT_TRUE(z.santoyo);
  EXPECT_NEAR(z.gronwall, 0.3, 1e-12);
  EXPECT_NEAR(*z.santoyo, 0.3, 1e-12);

  const auto s = competing_bounds(0.2, -1e-8, 0.1, 1.0);
  EXPECT_NEAR(s.gronwall, 0.3, 1e-6);
  ASSERT_TRUE(s.santoyo);
  EXPECT_GT(*s.santoyo, 1e3);

  const auto third = competing_bounds(0.2, -1.0, 0.5, 1.0);
  ASSERT_TRUE(third.santoyo);
  EXPECT_NEAR(*third.santoyo, std::exp(-0.5) * (0.2 - 1.0) + 1.0, 1e-12);

  EXPECT_FALSE(competing_bounds(0.2, 0.5, 0.1, 1.0).santoyo);
  EXPECT_FALSE(competing_bounds(0.2, 0.0, -0.1, 1.0).santoyo);
}

TEST(CompetingBounds, GronwallIsTighterInTheQuotedRegime) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double alpha = -2.0 * (1e-3 + 0.998 * u(rng));
    const double ratio = 1.0 + 1e-3 + 4.0 * u(rng);  // -beta/alpha > 1
    const double beta = -alpha * ratio;
    const double T = 0.05 + 4.95 * u(rng);
    const double v0 = u(rng);
    const auto c = competing_bounds(v0, alpha, beta, T);
    ASSERT_TRUE(c.santoyo);
    EXPECT_GT(*c.santoyo, c.gronwall) << alpha << " " << beta << " " << T << " " << v0;
  }
}

TEST(AlphaGrid, DefaultShape) {
  const auto g = default_alpha_grid(2.0);
  EXPECT_EQ(g.size(), 21u);
  std::set<double> s(g.begin(), g.end());
  EXPECT_EQ(s.size(), 21u);
  EXPECT_TRUE(s.count(0.0));
  EXPECT_TRUE(s.count(4.0));       // 2^3 / T
  EXPECT_TRUE(s.count(-1.0 / 128));  // -2^-6 / T
}

TEST(Certify, BrownianUpperBoundIsCertifiedAndSound) {
  const auto h = benchmark("brownian", QueryKind::horizon);
  const auto r = certify(CertificateKind::HU1, h.model, h.query);
  ASSERT_EQ(r.outcome, Outcome::certified) << r.solver_message;
  ASSERT_TRUE(r.raw_bound);
  // Reflection principle: P(max W >= 0.9) - P(min W <= -2) <= P <= P(max W >= 0.9).
  const double lower = std::erfc(0.9 / std::sqrt(2.0)) - std::erfc(2.0 / std::sqrt(2.0));
  EXPECT_GE(r.bound, lower);
  EXPECT_LE(r.bound, 1.0);
  EXPECT_FALSE(r.vacuous);
  EXPECT_LE(r.reconstruction_residual, 1e-6);
  EXPECT_TRUE(r.residual.checked);
  EXPECT_NEAR(evaluate(r.v, h.query.x0, 0.0), r.v0, 1e-12);
  EXPECT_EQ(r.attempts.size(), 1u);
}

TEST(Certify, AlphaGridIsReportedAndRestricted) {
  const auto h = benchmark("ou", QueryKind::horizon);
  CertifyOptions opt;
  opt.alpha_grid = {-1.0, 0.0};
  const auto r = certify(CertificateKind::HU2, h.model, h.query, opt);
  EXPECT_TRUE(r.grid_restricted);
  ASSERT_EQ(r.alpha_grid.size(), 2u);
  EXPECT_EQ(r.alpha_grid[0], 0.0);
  EXPECT_EQ(r.attempts.size(), 2u);
  ASSERT_EQ(r.outcome, Outcome::certified);
  EXPECT_GT(r.bound, 0.0);
}

// Without w the lower certificate is stuck at v0 <= 0.
TEST(Certify, DroppingAuxiliaryFunctionGivesNothing) {
  for (const char* name : {"brownian", "ou", "oscillator2d"}) {
    const auto h = benchmark(name, QueryKind::horizon);
    CertifyOptions opt;
    opt.degrees.drop_w = true;
    const auto r = certify(CertificateKind::HL1, h.model, h.query, opt);
    ASSERT_TRUE(r.outcome == Outcome::certified || r.outcome == Outcome::unchecked) << name;
    EXPECT_LE(r.v0, 1e-6) << name;
    EXPECT_FALSE(r.w);
    EXPECT_DOUBLE_EQ(r.bound, 0.0);
  }
}

TEST(ReachSet, StructureAndErrors) {
  auto spec = benchmark("oscillator2d", QueryKind::horizon);
  spec.model = spec.model.without_noise();
  BoundReport r;
  r.kind = CertificateKind::HL1;
  r.outcome = Outcome::certified;
  r.horizon_T = 2.0;
  r.M = 0.1;
  r.v = parse_polynomial("1 - x1^2 - x2^2 + t", 2, true);
  const auto set = retrieve_deterministic_reach_set(r, spec.model, spec.query);
  ASSERT_EQ(set.sets.size(), 3u);
  // v(0, x) - 2M/T = 0.9 - |x|^2
  const Polynomial expect = parse_polynomial("0.9 - x1^2 - x2^2", 2);
  EXPECT_LT(max_abs_coefficient(set.sets[2].g - expect), 1e-12);
  EXPECT_TRUE(set.contains(std::vector<double>{0.0, 0.9}));
  EXPECT_FALSE(set.contains(std::vector<double>{0.5, 0.0}));   // in Xs
  EXPECT_FALSE(set.contains(std::vector<double>{0.0, 0.96}));  // v(0,x) - 2M/T < 0

  BoundReport il = r;
  il.kind = CertificateKind::IL1;
  auto inst = spec;
  inst.query.kind = QueryKind::instant;
  const auto s2 = retrieve_deterministic_reach_set(il, inst.model, inst.query);
  EXPECT_LT(max_abs_coefficient(s2.sets[2].g - parse_polynomial("1 - x1^2 - x2^2", 2)), 1e-12);

  const auto noisy = benchmark("oscillator2d", QueryKind::horizon);
  EXPECT_THROW(retrieve_deterministic_reach_set(r, noisy.model, noisy.query), std::invalid_argument);
  BoundReport upper = r;
  upper.kind = CertificateKind::HU1;
  EXPECT_THROW(retrieve_deterministic_reach_set(upper, spec.model, spec.query), std::invalid_argument);
  BoundReport failed = r;
  failed.outcome = Outcome::solver_failure;
  EXPECT_THROW(retrieve_deterministic_reach_set(failed, spec.model, spec.query), std::invalid_argument);
}

TEST(ReachSet, DeterministicOscillatorContainsStart) {
  auto spec = benchmark("oscillator2d", QueryKind::horizon);
  spec.model = spec.model.without_noise();
  const auto r = certify(CertificateKind::HL1, spec.model, spec.query);
  ASSERT_EQ(r.outcome, Outcome::certified) << r.solver_message;
  EXPECT_GT(r.bound, 0.0);
  const auto set = retrieve_deterministic_reach_set(r, spec.model, spec.query);
  EXPECT_TRUE(set.contains(spec.query.x0));
}

}  // namespace
}  // namespace reachcert
