// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "reachcert/model.hpp"
#include "reachcert/poly.hpp"
#include "reachcert/sdp.hpp"

namespace reachcert::sos {

using DecisionId = std::size_t;

/// c0 + sum_k a_k z_k over scalar decision variables z.
struct LinearExpr {
  double constant = 0.0;
  std::map<DecisionId, double> coef;

  void add(DecisionId id, double a);
  LinearExpr& operator+=(const LinearExpr& other);
  LinearExpr& operator*=(double s);
  double evaluate(std::span<const double> z) const;
  bool is_zero() const { return constant == 0.0 && coef.empty(); }
};

/// Polynomial whose coefficients are affine in the decision variables.
class AffinePolynomial {
 public:
  using TermMap = std::map<Monomial, LinearExpr, GrlexLess>;

  explicit AffinePolynomial(std::size_t nvars = 0, bool has_time = false) : nvars_(nvars), has_time_(has_time) {}

  /// p with no decision dependence.
  static AffinePolynomial fixed(const Polynomial& p);

  /// this += scale * p.
  void add_polynomial(const Polynomial& p, double scale = 1.0);
  /// this += scale * z_id * p.
  void add_scaled(const Polynomial& p, DecisionId id, double scale = 1.0);
  /// this += scale * z_id (constant term).
  void add_decision(DecisionId id, double scale = 1.0);

  AffinePolynomial& operator+=(const AffinePolynomial& other);
  AffinePolynomial& operator-=(const AffinePolynomial& other);
  AffinePolynomial& operator*=(double s);
  friend AffinePolynomial operator+(AffinePolynomial a, const AffinePolynomial& b) { return a += b; }
  friend AffinePolynomial operator-(AffinePolynomial a, const AffinePolynomial& b) { return a -= b; }
  friend AffinePolynomial operator*(double s, AffinePolynomial a) { return a *= s; }

  /// Polynomial obtained by fixing the decision variables.
  Polynomial evaluate(std::span<const double> z) const;

  std::size_t nvars() const noexcept { return nvars_; }
  bool has_time() const noexcept { return has_time_; }
  const TermMap& terms() const noexcept { return terms_; }
  std::uint32_t degree() const noexcept;
  std::vector<VarId> variables() const;
  /// Decision variables with a nonzero coefficient somewhere.
  std::vector<DecisionId> decisions() const;

 private:
  void prune();
  TermMap terms_;
  std::size_t nvars_ = 0;
  bool has_time_ = false;
};

/// Polynomial template sum_k z_{first+k} * basis[k].
struct PolynomialTemplate {
  std::string name;
  std::vector<Monomial> basis;
  DecisionId first = 0;
  std::size_t nvars = 0;
  bool has_time = false;

  /// sum_k z_k * op(basis_k) for a linear operator op on polynomials.
  AffinePolynomial map(const std::function<Polynomial(const Polynomial&)>& op) const;
  AffinePolynomial as_affine() const;
  Polynomial evaluate(std::span<const double> z) const;
};

enum class Relation : std::uint8_t { nonnegative, zero };

struct RegionAtom {
  Polynomial g;
  Relation relation = Relation::nonnegative;
};

class DegreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// target(z, x) >= 0 on {g_i >= 0, h_j = 0}, certified by
/// target - eps = s0 + sum s_i g_i + sum lambda_j h_j.
struct SosConstraint {
  std::string name;
  AffinePolynomial target;
  std::vector<RegionAtom> region;
  /// Degree of s0 (the relaxation degree); defaults to deg(target) rounded up to even.
  std::optional<std::uint32_t> degree;
  /// Per-atom multiplier degree for inequality atoms; defaults to degree - deg(g) rounded down to even.
  std::vector<std::optional<std::uint32_t>> multiplier_degrees;
};

struct SosProgram {
  std::vector<std::string> decision_names;
  std::vector<SosConstraint> constraints;
  LinearExpr objective;
  bool maximize = false;
  double epsilon = 1e-6;

  DecisionId add_decision(std::string name);
  /// Adds a dense template of the given degree over x1..xn (and t if `time`).
  PolynomialTemplate add_template(const std::string& name, std::size_t nvars, bool time, std::uint32_t degree);
  std::size_t decisions() const { return decision_names.size(); }
};

struct GramLayout {
  std::size_t block = 0;
  std::vector<Monomial> basis;
};

struct ConstraintLayout {
  std::uint32_t degree = 0;
  std::vector<VarId> vars;
  GramLayout s0;
  /// One entry per region atom: Gram block for inequality atoms, free coefficients for equalities.
  std::vector<std::optional<GramLayout>> gram;
  std::vector<std::optional<std::pair<std::size_t, std::vector<Monomial>>>> lambda;  // (first free index, basis)
  std::size_t rows = 0;
};

struct CompiledProgram {
  sdp::SdpInstance sdp;
  std::vector<ConstraintLayout> layout;
  std::size_t decisions = 0;  // free variables [0, decisions) of the SDP
};

/// Coefficient matching over a dense grlex monomial basis. Throws DegreeError when a
/// multiplier times its region polynomial does not fit in the degree budget.
CompiledProgram compile(const SosProgram& program);

struct Backend {
  enum class Kind : std::uint8_t { in_process, file_exchange } kind = Kind::in_process;
  sdp::SolverOptions options;
  sdp::FileExchangeOptions files;
};

struct ConstraintCertificate {
  Polynomial s0;
  std::vector<Polynomial> multipliers;  // per region atom
  double min_gram_eigenvalue = 0.0;
  /// max |coefficient| of s0 + sum s_i g_i + sum lambda_j h_j - (target - eps)
  double residual = 0.0;
};

struct ProgramSolution {
  sdp::SolveStatus status = sdp::SolveStatus::numerical_trouble;
  std::vector<double> decisions;
  double objective = 0.0;
  std::vector<ConstraintCertificate> certificates;
  double max_residual = 0.0;
  double min_gram_eigenvalue = 0.0;
  int iterations = 0;
  std::string message;
};

ProgramSolution solve(const SosProgram& program, const Backend& backend = {});
ProgramSolution solve(const SosProgram& program, const CompiledProgram& compiled, const Backend& backend);

// ---------------------------------------------------------------------------
// Sampling-based post-check

/// expression >= 0 required on the spatial region, for all t in [0, T] when `timed`.
struct SampledCheck {
  std::string name;
  Polynomial expression;
  std::vector<RegionAtom> region;
  bool timed = false;
};

struct RegionCheck {
  std::string name;
  std::size_t samples = 0;
  double worst_violation = 0.0;
  std::vector<double> worst_point;  // x then t (when timed)
  bool checked = false;
};

struct ResidualSummary {
  std::vector<RegionCheck> regions;
  std::vector<std::string> warnings;
  double worst_violation = 0.0;
  double margin = 0.0;
  bool checked = false;
};

struct SamplingOptions {
  std::size_t samples = 2000;
  double margin = 1e-9;
  double root_tol = 1e-8;
  std::uint64_t seed = 1;
};

/// Points of the region {atoms} inside the box: rejection sampling for pure inequality
/// regions; for regions with an equality atom, roots along random lines through the box.
std::vector<std::vector<double>> sample_region(const std::vector<RegionAtom>& region, const Box& box,
                                               std::size_t count, std::uint64_t seed, double root_tol = 1e-8);

ResidualSummary residual_check(const std::vector<SampledCheck>& checks, const Box& box, double horizon_T,
                               const SamplingOptions& options = {});

}  // namespace reachcert::sos
