// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include "reachcert/certificates.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "reachcert/generator.hpp"

namespace reachcert {

namespace {

using sos::AffinePolynomial;
using sos::Relation;
using sos::RegionAtom;

constexpr double kAlphaZero = 1e-8;

struct KindEntry {
  CertificateKind kind;
  const char* name;
  KindTraits traits;
};

constexpr KindEntry kKinds[] = {
    {CertificateKind::HU1, "HU1", {QueryKind::horizon, true, true, false, false}},
    {CertificateKind::HU2, "HU2", {QueryKind::horizon, true, true, true, false}},
    {CertificateKind::HU3, "HU3", {QueryKind::horizon, true, false, true, false}},
    {CertificateKind::HL1, "HL1", {QueryKind::horizon, false, true, false, true}},
    {CertificateKind::HL2, "HL2", {QueryKind::horizon, false, true, true, true}},
    {CertificateKind::HL3, "HL3", {QueryKind::horizon, false, false, true, true}},
    {CertificateKind::IU1, "IU1", {QueryKind::instant, true, true, false, false}},
    {CertificateKind::IU2, "IU2", {QueryKind::instant, true, true, true, false}},
    {CertificateKind::IU3, "IU3", {QueryKind::instant, true, false, true, false}},
    {CertificateKind::IL1, "IL1", {QueryKind::instant, false, true, false, false}},
    {CertificateKind::IL2, "IL2", {QueryKind::instant, false, true, true, false}},
    {CertificateKind::IL3, "IL3", {QueryKind::instant, false, false, true, false}},
};

const KindEntry& entry(CertificateKind kind) { return kKinds[static_cast<std::size_t>(kind)]; }

std::uint32_t even_up(std::uint32_t d) { return d + (d % 2); }

RegionAtom ge(const Polynomial& g) { return {g, Relation::nonnegative}; }
RegionAtom eq(const Polynomial& g) { return {g, Relation::zero}; }

// (e^z - 1) / z and (e^z - 1 - z) / z^2
double phi1(double z) { return z == 0.0 ? 1.0 : std::expm1(z) / z; }
double phi2(double z) {
  if (std::abs(z) < 1e-3) return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
  return (std::expm1(z) - z) / (z * z);
}

}  // namespace

std::string to_string(CertificateKind kind) { return entry(kind).name; }

CertificateKind certificate_kind_from_string(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  for (const auto& e : kKinds) {
    if (upper == e.name) return e.kind;
  }
  throw std::invalid_argument("unknown certificate kind '" + std::string(name) + "'");
}

KindTraits traits(CertificateKind kind) { return entry(kind).traits; }

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::certified: return "certified";
    case Outcome::unchecked: return "unchecked";
    case Outcome::no_certificate: return "no_certificate";
    case Outcome::solver_failure: return "solver_failure";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Condition construction

constexpr double kMPenalty = 1e-5;

sos::SosProgram CertificateProblem::to_program(double epsilon) const {
  sos::SosProgram prog;
  prog.decision_names = decision_names;
  prog.objective = objective;
  prog.maximize = maximize;
  prog.epsilon = epsilon;
  // v = c, w = c (t - T/2), M = c T/2 is a zero-cost ray of the lower conditions; a small
  // price on M keeps the optimal face bounded.
  if (M) prog.objective.add(*M, maximize ? -kMPenalty : kMPenalty);
  const std::size_t n = v.nvars;
  const Polynomial t = Polynomial::variable(kTime, n, true);
  const Polynomial tau = t * (Polynomial::constant(horizon_T, n, true) - t);
  for (const auto& cond : conditions) {
    for (const auto& piece : cond.pieces) {
      sos::SosConstraint c;
      c.name = cond.name + " on " + piece.name;
      c.target = cond.expression;
      c.region = piece.atoms;
      if (piece.timed) c.region.push_back(ge(tau));
      std::uint32_t budget = std::max(2u, even_up(c.target.degree()));
      for (const auto& atom : c.region) budget = std::max(budget, even_up(atom.g.degree()));
      c.degree = degrees.relaxation ? *degrees.relaxation : budget;
      for (const auto& atom : c.region) {
        c.multiplier_degrees.push_back(atom.relation == Relation::nonnegative ? degrees.multiplier : std::nullopt);
      }
      prog.constraints.push_back(std::move(c));
    }
  }
  return prog;
}

CertificateProblem build_condition(CertificateKind kind, const SdeModel& model, const ReachQuery& query,
                                   const DegreeSpec& degrees, double alpha) {
  const KindTraits tr = traits(kind);
  if (tr.query != query.kind) {
    throw KindMismatchError(to_string(kind) + " bounds a " + to_string(tr.query) + " probability but the query is " +
                            to_string(query.kind));
  }
  model.check();
  if (degrees.v < 2 || degrees.v % 2 != 0) {
    throw sos::DegreeError("degree of v must be even and at least 2 (got " + std::to_string(degrees.v) + ")");
  }
  if (tr.uses_w && !degrees.drop_w && degrees.w % 2 != 0) {
    throw sos::DegreeError("degree of w must be even (got " + std::to_string(degrees.w) + ")");
  }
  if (degrees.multiplier && *degrees.multiplier % 2 != 0) {
    throw sos::DegreeError("multiplier degree must be even (got " + std::to_string(*degrees.multiplier) + ")");
  }
  if (degrees.relaxation && *degrees.relaxation % 2 != 0) {
    throw sos::DegreeError("relaxation degree must be even (got " + std::to_string(*degrees.relaxation) + ")");
  }
  if (!tr.uses_alpha) alpha = 0.0;
  if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");

  const std::size_t n = model.n;
  const bool timed = tr.time_dependent;
  const double T = query.horizon_T;
  CertificateProblem prob;
  prob.kind = kind;
  prob.alpha = alpha;
  prob.horizon_T = T;
  prob.degrees = degrees;
  prob.maximize = !tr.upper;

  sos::SosProgram names;
  prob.v = names.add_template("v", n, timed, degrees.v);
  if (tr.uses_w && !degrees.drop_w) prob.w = names.add_template("w", n, timed, degrees.w);
  if (tr.uses_alpha) prob.beta = names.add_decision("beta");
  if (tr.uses_w) prob.M = names.add_decision("M");
  prob.decision_names = names.decision_names;

  auto generator = [&](const Polynomial& p) { return apply_generator(p, model).full; };
  auto time_part = [&](const Polynomial& p) { return apply_generator(p, model).time_only; };
  auto at_T = [&](const Polynomial& p) { return timed ? substitute(p, kTime, T) : p; };
  auto constant = [&](double c, bool time) { return AffinePolynomial::fixed(Polynomial::constant(c, n, time)); };

  const AffinePolynomial v = prob.v.as_affine();
  const AffinePolynomial Lv = prob.v.map(generator);
  const AffinePolynomial dv = prob.v.map(time_part);
  const AffinePolynomial vT = prob.v.map(at_T);
  AffinePolynomial slack = alpha * v;  // alpha v + beta
  if (prob.beta) slack.add_decision(*prob.beta);

  const Polynomial gX = query.domain.g;
  const Polynomial gS = query.target.g;
  if (gX.nvars() != n || gS.nvars() != n) throw DimensionError("set polynomials do not match the model dimension");
  if (gX.depends_on(kTime) || gS.depends_on(kTime)) throw DimensionError("set polynomials must not depend on t");
  const Polynomial gx = gX.with_time(false);
  const Polynomial gs = gS.with_time(false);

  const RegionPiece outside_target{"cl(X \\ Xs)", {ge(gx), ge(-gs)}, timed};
  const RegionPiece boundary_X{"boundary of X", {eq(gx)}, timed};
  const RegionPiece boundary_S{"boundary of Xs", {eq(gs), ge(gx)}, timed};
  const RegionPiece closure_X{"cl X", {ge(gx)}, timed};
  auto at_terminal = [](RegionPiece p) {
    p.timed = false;
    return p;
  };
  const RegionPiece target{"Xs", {ge(gs), ge(gx)}, false};

  const bool horizon = tr.query == QueryKind::horizon;
  const RegionPiece interior = horizon ? outside_target : closure_X;
  std::vector<RegionPiece> boundary = {boundary_X};
  if (horizon) boundary.push_back(boundary_S);

  auto& conds = prob.conditions;
  if (tr.upper) {
    conds.push_back({"generator", slack - Lv, {interior}});
    conds.push_back({"stopped generator", slack - dv, boundary});
    if (horizon) {
      conds.push_back({"terminal on target boundary", vT - constant(1.0, false), {at_terminal(boundary_S)}});
      conds.push_back({"terminal nonnegative", vT, {at_terminal(outside_target)}});
    } else {
      conds.push_back({"terminal on target", vT - constant(1.0, false), {target}});
      conds.push_back({"terminal nonnegative", vT, {at_terminal(closure_X)}});
    }
  } else if (horizon) {
    AffinePolynomial Lw(n, timed), dw(n, timed), w(n, timed);
    if (prob.w) {
      Lw = prob.w->map(generator);
      dw = prob.w->map(time_part);
      w = prob.w->as_affine();
    }
    AffinePolynomial bound_minus(n, timed), bound_plus(n, timed);  // M - w, M + w
    bound_minus.add_decision(*prob.M);
    bound_plus.add_decision(*prob.M);
    bound_minus -= w;
    bound_plus += w;
    conds.push_back({"generator", Lv - slack, {interior}});
    conds.push_back({"stopped generator", dv - slack, boundary});
    conds.push_back({"auxiliary on target boundary", constant(1.0, timed) + dw - v, {boundary_S}});
    conds.push_back({"auxiliary generator", Lw - v, {interior}});
    conds.push_back({"auxiliary on domain boundary", dw - v, {boundary_X}});
    conds.push_back({"auxiliary bound above", bound_minus, {closure_X}});
    conds.push_back({"auxiliary bound below", bound_plus, {closure_X}});
  } else {
    // Paths stopped on the boundary of X are misses even where that boundary meets Xs,
    // so the terminal value must also be nonpositive there.
    conds.push_back({"generator", Lv - slack, {interior}});
    conds.push_back({"stopped generator", dv - slack, boundary});
    conds.push_back({"terminal outside target", constant(0.0, false) - vT,
                     {at_terminal(outside_target), at_terminal(boundary_X)}});
    conds.push_back({"terminal on target", constant(1.0, false) - vT, {target}});
  }

  for (std::size_t k = 0; k < prob.v.basis.size(); ++k) {
    const double value = evaluate(Polynomial::monomial(prob.v.basis[k], 1.0, n, timed), query.x0,
                                  timed ? std::optional<double>(0.0) : std::nullopt);
    prob.v0.add(prob.v.first + k, value);
  }
  const BoundCoefficients bc = bound_coefficients(kind, alpha, T);
  for (const auto& [id, a] : prob.v0.coef) prob.objective.add(id, bc.v0 * a);
  if (prob.beta) prob.objective.add(*prob.beta, bc.beta);
  if (prob.M) prob.objective.add(*prob.M, bc.M);
  return prob;
}

// ---------------------------------------------------------------------------
// Bound formulas

BoundCoefficients bound_coefficients(CertificateKind kind, double alpha, double T) {
  const KindTraits tr = traits(kind);
  BoundCoefficients c;
  if (tr.uses_w) c.M = -2.0 / T;
  if (!tr.uses_alpha) return c;
  const bool zero = std::abs(alpha) < kAlphaZero;
  const double z = zero ? 0.0 : alpha * T;
  if (tr.uses_w) {
    // time average of the exponential envelope
    c.v0 = phi1(z);
    c.beta = T * (zero ? 0.5 : phi2(z));
  } else {
    c.v0 = zero ? 1.0 : std::exp(z);
    c.beta = T * phi1(z);
  }
  return c;
}

double bound_formula(CertificateKind kind, double v0, double alpha, double beta, double M, double T) {
  const BoundCoefficients c = bound_coefficients(kind, alpha, T);
  const KindTraits tr = traits(kind);
  return c.v0 * v0 + (tr.uses_alpha ? c.beta * beta : 0.0) + (tr.uses_w ? c.M * M : 0.0);
}

CompetingBounds competing_bounds(double v0, double alpha, double beta, double T) {
  CompetingBounds out;
  out.gronwall = bound_formula(CertificateKind::HU2, v0, alpha, beta, 0.0, T);
  if (alpha < 0.0 && alpha + beta > 0.0) {
    out.santoyo = (v0 - std::expm1(beta * T) * beta / alpha) * std::exp(-beta * T);
  } else if (alpha == 0.0 && beta >= 0.0) {
    out.santoyo = v0 + beta * T;
  } else if (alpha < 0.0 && alpha + beta <= 0.0 && beta >= 0.0) {
    out.santoyo = std::exp(-beta * T) * (v0 - 1.0) + 1.0;
  }
  return out;
}

std::vector<double> default_alpha_grid(double T) {
  std::vector<double> grid = {0.0};
  for (int j = -6; j <= 3; ++j) {
    const double a = std::ldexp(1.0, j) / T;
    grid.push_back(-a);
    grid.push_back(a);
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Certification

sos::ResidualSummary residual_check(const CertificateProblem& problem, std::span<const double> decisions,
                                    const Box& box, const sos::SamplingOptions& options) {
  std::vector<sos::SampledCheck> checks;
  for (const auto& cond : problem.conditions) {
    const Polynomial expr = cond.expression.evaluate(decisions);
    for (const auto& piece : cond.pieces) {
      checks.push_back({cond.name + " on " + piece.name, piece.timed ? expr : expr.with_time(false), piece.atoms,
                        piece.timed});
    }
  }
  return sos::residual_check(checks, box, problem.horizon_T, options);
}

namespace {

struct Attempt {
  AlphaAttempt summary;
  CertificateProblem problem;
  sos::ProgramSolution solution;
  sos::ResidualSummary residual;
};

bool better(const Attempt& a, const Attempt& b, bool upper) {
  // a strictly better than b
  if (a.summary.outcome != b.summary.outcome) return a.summary.outcome < b.summary.outcome;
  if (a.summary.outcome != Outcome::certified && a.summary.outcome != Outcome::unchecked) return false;
  return upper ? a.summary.raw_bound < b.summary.raw_bound : a.summary.raw_bound > b.summary.raw_bound;
}

}  // namespace

BoundReport certify(CertificateKind kind, const SdeModel& model, const ReachQuery& query,
                    const CertifyOptions& options) {
  const KindTraits tr = traits(kind);
  if (tr.query != query.kind) {
    throw KindMismatchError(to_string(kind) + " bounds a " + to_string(tr.query) + " probability but the query is " +
                            to_string(query.kind));
  }
  const double T = query.horizon_T;
  const std::vector<double> full_grid = default_alpha_grid(T);
  std::vector<double> grid = {0.0};
  BoundReport report;
  report.kind = kind;
  report.horizon_T = T;
  report.degrees = options.degrees;
  report.epsilon = options.epsilon;
  if (tr.uses_alpha) {
    grid = options.alpha_grid.empty() ? full_grid : options.alpha_grid;
    report.grid_restricted = grid.size() != full_grid.size() ||
                             !std::is_permutation(grid.begin(), grid.end(), full_grid.begin());
  } else if (!options.alpha_grid.empty()) {
    report.notes.push_back("alpha grid ignored: " + to_string(kind) + " has alpha = beta = 0");
  }
  std::stable_sort(grid.begin(), grid.end(), [](double a, double b) {
    return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
  });
  report.alpha_grid = grid;

  std::optional<Attempt> best;
  for (double alpha : grid) {
    Attempt at;
    at.problem = build_condition(kind, model, query, options.degrees, alpha);
    at.summary.alpha = at.problem.alpha;
    at.solution = sos::solve(at.problem.to_program(options.epsilon), options.backend);
    at.summary.status = at.solution.status;
    at.summary.iterations = at.solution.iterations;
    at.summary.message = at.solution.message;
    switch (at.solution.status) {
      case sdp::SolveStatus::optimal: {
        const auto& z = at.solution.decisions;
        const double v0 = at.problem.v0.evaluate(z);
        const double beta = at.problem.beta ? z[*at.problem.beta] : 0.0;
        const double M = at.problem.M ? z[*at.problem.M] : 0.0;
        at.summary.raw_bound = bound_formula(kind, v0, at.problem.alpha, beta, M, T);
        at.summary.reconstruction_residual = at.solution.max_residual;
        at.residual = residual_check(at.problem, z, query.bounding_box, options.sampling);
        at.summary.worst_violation = at.residual.worst_violation;
        at.summary.outcome = at.residual.checked ? Outcome::certified : Outcome::unchecked;
        break;
      }
      case sdp::SolveStatus::infeasible:
        at.summary.outcome = Outcome::no_certificate;
        break;
      case sdp::SolveStatus::unbounded:
      case sdp::SolveStatus::numerical_trouble:
        at.summary.outcome = Outcome::solver_failure;
        break;
    }
    report.attempts.push_back(at.summary);
    if (!best || better(at, *best, tr.upper)) best = std::move(at);
  }

  const Attempt& b = *best;
  const auto& z = b.solution.decisions;
  report.outcome = b.summary.outcome;
  report.alpha = b.summary.alpha;
  report.solver_status = b.summary.status;
  report.solver_message = b.summary.message;
  report.iterations = b.summary.iterations;
  report.residual = b.residual;
  report.bound = tr.upper ? 1.0 : 0.0;
  if (b.summary.outcome == Outcome::certified || b.summary.outcome == Outcome::unchecked) {
    report.v = b.problem.v.evaluate(z);
    if (b.problem.w) report.w = b.problem.w->evaluate(z);
    report.v0 = b.problem.v0.evaluate(z);
    report.beta = b.problem.beta ? z[*b.problem.beta] : 0.0;
    report.M = b.problem.M ? z[*b.problem.M] : 0.0;
    report.raw_bound = b.summary.raw_bound;
    report.reconstruction_residual = b.summary.reconstruction_residual;
  }
  if (b.summary.outcome == Outcome::certified) {
    const double raw = b.summary.raw_bound;
    report.bound = std::clamp(raw, 0.0, 1.0);
    report.vacuous = tr.upper ? raw >= 1.0 : raw <= 0.0;
    if (report.vacuous) report.notes.push_back("certified bound is vacuous and was clamped to [0, 1]");
  } else if (b.summary.outcome == Outcome::unchecked) {
    report.notes.push_back("solver returned a certificate that fails the sampled residual check; bound not used");
  } else if (b.summary.outcome == Outcome::no_certificate) {
    report.notes.push_back("no certificate found at this degree");
  }
  if (tr.query == QueryKind::instant && !tr.upper) {
    report.notes.push_back(
        "terminal indicator split: v(T) <= 0 is imposed on cl(X \\ Xs) including the boundary of Xs and on the "
        "boundary of X");
  }
  if (tr.uses_w && options.degrees.drop_w) report.notes.push_back("auxiliary function w forced to 0");
  return report;
}

// ---------------------------------------------------------------------------
// Deterministic reach sets

bool ReachSet::contains(std::span<const double> x) const {
  return std::all_of(sets.begin(), sets.end(), [&](const SemialgebraicSet& s) {
    const double g = evaluate(s.g, x);
    return s.sense == SetSense::open ? g > 0.0 : g >= 0.0;
  });
}

ReachSet retrieve_deterministic_reach_set(const BoundReport& report, const SdeModel& model, const ReachQuery& query) {
  const KindTraits tr = traits(report.kind);
  if (!model.deterministic()) throw std::invalid_argument("reach-set retrieval needs a model without diffusion");
  if (tr.upper) throw std::invalid_argument("reach-set retrieval needs a lower-bound certificate");
  if (report.outcome != Outcome::certified) throw std::invalid_argument("reach-set retrieval needs a certificate");
  const std::size_t n = model.n;
  const BoundCoefficients c = bound_coefficients(report.kind, report.alpha, report.horizon_T);
  Polynomial v0 = tr.time_dependent ? substitute(report.v, kTime, 0.0) : report.v.with_time(false);
  Polynomial g = v0 * c.v0 + Polynomial::constant((tr.uses_alpha ? c.beta * report.beta : 0.0) +
                                                      (tr.uses_w ? c.M * report.M : 0.0),
                                                  n);
  ReachSet out;
  out.sets.push_back({query.domain.g.with_time(false), SetSense::open});
  out.sets.push_back({-query.target.g.with_time(false), SetSense::open});
  out.sets.push_back({g, SetSense::open});
  return out;
}

}  // namespace reachcert
