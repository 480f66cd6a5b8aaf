// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "reachcert/model.hpp"
#include "reachcert/poly.hpp"
#include "reachcert/sos.hpp"

namespace reachcert {

// H* bound the probability of reaching Xs within [0, T], I* the probability of being in
// Xs at T. U/L: upper/lower bound. 1: alpha = beta = 0, 2: alpha and beta,
// 3: time-independent v (and w).
enum class CertificateKind : std::uint8_t { HU1, HU2, HU3, HL1, HL2, HL3, IU1, IU2, IU3, IL1, IL2, IL3 };

inline constexpr std::array<CertificateKind, 12> kAllCertificateKinds = {
    CertificateKind::HU1, CertificateKind::HU2, CertificateKind::HU3, CertificateKind::HL1,
    CertificateKind::HL2, CertificateKind::HL3, CertificateKind::IU1, CertificateKind::IU2,
    CertificateKind::IU3, CertificateKind::IL1, CertificateKind::IL2, CertificateKind::IL3};

std::string to_string(CertificateKind kind);
/// Case-insensitive; throws std::invalid_argument for unknown names.
CertificateKind certificate_kind_from_string(std::string_view name);

struct KindTraits {
  QueryKind query = QueryKind::horizon;
  bool upper = true;
  bool time_dependent = true;
  bool uses_alpha = false;  // alpha grid and beta decision
  bool uses_w = false;      // auxiliary w and its bound M
};

KindTraits traits(CertificateKind kind);

class KindMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DegreeSpec {
  std::uint32_t v = 4;
  std::uint32_t w = 4;
  /// Multiplier degree for every inequality region atom (default: fill the degree budget).
  std::optional<std::uint32_t> multiplier;
  /// Relaxation degree of every constraint (default: target and region degrees rounded up to even).
  std::optional<std::uint32_t> relaxation;
  /// Force w = 0 (the degenerate auxiliary function).
  bool drop_w = false;
};

/// A spatial region, optionally extended over t in [0, T] through the atom t(T - t) >= 0.
struct RegionPiece {
  std::string name;
  std::vector<sos::RegionAtom> atoms;
  bool timed = false;
};

/// expression >= 0 on every piece.
struct Condition {
  std::string name;
  sos::AffinePolynomial expression;
  std::vector<RegionPiece> pieces;
};

struct CertificateProblem {
  CertificateKind kind = CertificateKind::HU1;
  double alpha = 0.0;
  double horizon_T = 1.0;
  DegreeSpec degrees;
  std::vector<std::string> decision_names;
  sos::PolynomialTemplate v;
  std::optional<sos::PolynomialTemplate> w;
  std::optional<sos::DecisionId> beta;
  std::optional<sos::DecisionId> M;
  std::vector<Condition> conditions;
  sos::LinearExpr v0;         // v(0, x0)
  sos::LinearExpr objective;  // the bound formula, affine in the decisions
  bool maximize = false;

  std::size_t decisions() const { return decision_names.size(); }
  /// One SOS constraint per (condition, piece), all tightened by epsilon.
  sos::SosProgram to_program(double epsilon = 1e-6) const;
};

/// Throws KindMismatchError when the kind does not match the query, DegreeError for odd
/// or too small degrees.
CertificateProblem build_condition(CertificateKind kind, const SdeModel& model, const ReachQuery& query,
                                   const DegreeSpec& degrees, double alpha);

/// Coefficients of the bound as an affine function: a_v0 * v0 + a_beta * beta + a_M * M.
struct BoundCoefficients {
  double v0 = 1.0;
  double beta = 0.0;
  double M = 0.0;
};

BoundCoefficients bound_coefficients(CertificateKind kind, double alpha, double T);
double bound_formula(CertificateKind kind, double v0, double alpha, double beta, double M, double T);

struct CompetingBounds {
  std::optional<double> santoyo;  // absent outside its three parameter regimes
  double gronwall = 0.0;
};

CompetingBounds competing_bounds(double v0, double alpha, double beta, double T);

/// {0} U {+-2^j / T : j = -6..3}, sorted by |alpha| then sign.
std::vector<double> default_alpha_grid(double T);

enum class Outcome : std::uint8_t { certified, unchecked, no_certificate, solver_failure };

std::string to_string(Outcome outcome);

struct AlphaAttempt {
  double alpha = 0.0;
  sdp::SolveStatus status = sdp::SolveStatus::numerical_trouble;
  Outcome outcome = Outcome::solver_failure;
  double raw_bound = 0.0;
  double worst_violation = 0.0;
  double reconstruction_residual = 0.0;
  int iterations = 0;
  std::string message;
};

struct BoundReport {
  CertificateKind kind = CertificateKind::HU1;
  Outcome outcome = Outcome::no_certificate;
  /// Clamped to [0, 1]; the trivial bound (1 for upper, 0 for lower kinds) without a certificate.
  double bound = 0.0;
  std::optional<double> raw_bound;
  bool vacuous = false;
  Polynomial v;
  std::optional<Polynomial> w;
  double alpha = 0.0;
  double beta = 0.0;
  double M = 0.0;
  double v0 = 0.0;
  double horizon_T = 1.0;
  sdp::SolveStatus solver_status = sdp::SolveStatus::numerical_trouble;
  std::string solver_message;
  int iterations = 0;
  double reconstruction_residual = 0.0;
  double epsilon = 0.0;
  sos::ResidualSummary residual;
  DegreeSpec degrees;
  std::vector<double> alpha_grid;
  bool grid_restricted = false;
  std::vector<AlphaAttempt> attempts;
  std::vector<std::string> notes;
};

struct CertifyOptions {
  DegreeSpec degrees;
  /// Empty selects default_alpha_grid(T); kinds without alpha always use {0}.
  std::vector<double> alpha_grid;
  sos::Backend backend;
  double epsilon = 1e-6;
  sos::SamplingOptions sampling;
};

/// Builds, solves and residual-checks the kind over the alpha grid and keeps the best
/// certified bound (ties: smallest |alpha|).
BoundReport certify(CertificateKind kind, const SdeModel& model, const ReachQuery& query,
                    const CertifyOptions& options = {});

/// Samples every (condition, piece) of the problem at the given decision values.
sos::ResidualSummary residual_check(const CertificateProblem& problem, std::span<const double> decisions,
                                    const Box& box, const sos::SamplingOptions& options = {});

/// Initial states that reach Xs (within [0, T] for horizon kinds, at T for instant kinds)
/// while staying in X, for deterministic dynamics: intersection of the open sets.
struct ReachSet {
  std::vector<SemialgebraicSet> sets;
  bool contains(std::span<const double> x) const;
};

/// {g_X > 0} n {g_S < 0} n {bound formula with v0 replaced by v(0, x) > 0}.
/// Throws std::invalid_argument for stochastic models, upper kinds or missing certificates.
ReachSet retrieve_deterministic_reach_set(const BoundReport& report, const SdeModel& model, const ReachQuery& query);

}  // namespace reachcert
