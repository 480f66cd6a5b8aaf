// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include "reachcert/sos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>

namespace reachcert::sos {

// ---------------------------------------------------------------------------
// LinearExpr / AffinePolynomial

void LinearExpr::add(DecisionId id, double a) {
  if (a == 0.0) return;
  auto [it, inserted] = coef.try_emplace(id, a);
  if (!inserted) {
    it->second += a;
    if (it->second == 0.0) coef.erase(it);
  }
}

LinearExpr& LinearExpr::operator+=(const LinearExpr& other) {
  constant += other.constant;
  for (const auto& [id, a] : other.coef) add(id, a);
  return *this;
}

LinearExpr& LinearExpr::operator*=(double s) {
  constant *= s;
  if (s == 0.0) {
    coef.clear();
    return *this;
  }
  for (auto& [id, a] : coef) a *= s;
  return *this;
}

double LinearExpr::evaluate(std::span<const double> z) const {
  double v = constant;
  for (const auto& [id, a] : coef) v += a * z[id];
  return v;
}

AffinePolynomial AffinePolynomial::fixed(const Polynomial& p) {
  AffinePolynomial out(p.nvars(), p.has_time());
  out.add_polynomial(p);
  return out;
}

void AffinePolynomial::prune() {
  std::erase_if(terms_, [](const auto& kv) { return kv.second.is_zero(); });
}

void AffinePolynomial::add_polynomial(const Polynomial& p, double scale) {
  if (p.nvars() != nvars_) throw DimensionError("affine polynomial: nvars mismatch");
  has_time_ = has_time_ || p.has_time();
  for (const auto& [m, c] : p.terms()) terms_[m].constant += scale * c;
  prune();
}

void AffinePolynomial::add_scaled(const Polynomial& p, DecisionId id, double scale) {
  if (p.nvars() != nvars_) throw DimensionError("affine polynomial: nvars mismatch");
  has_time_ = has_time_ || p.has_time();
  for (const auto& [m, c] : p.terms()) terms_[m].add(id, scale * c);
  prune();
}

void AffinePolynomial::add_decision(DecisionId id, double scale) {
  terms_[Monomial{}].add(id, scale);
  prune();
}

AffinePolynomial& AffinePolynomial::operator+=(const AffinePolynomial& other) {
  if (other.nvars_ != nvars_) throw DimensionError("affine polynomial: nvars mismatch");
  has_time_ = has_time_ || other.has_time_;
  for (const auto& [m, e] : other.terms_) terms_[m] += e;
  prune();
  return *this;
}

AffinePolynomial& AffinePolynomial::operator-=(const AffinePolynomial& other) {
  AffinePolynomial neg = other;
  neg *= -1.0;
  return *this += neg;
}

AffinePolynomial& AffinePolynomial::operator*=(double s) {
  for (auto& [m, e] : terms_) e *= s;
  prune();
  return *this;
}

Polynomial AffinePolynomial::evaluate(std::span<const double> z) const {
  Polynomial p(nvars_, has_time_);
  for (const auto& [m, e] : terms_) p.add_term(m, e.evaluate(z));
  return p;
}

std::uint32_t AffinePolynomial::degree() const noexcept {
  return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
}

std::vector<VarId> AffinePolynomial::variables() const {
  std::set<VarId> vars;
  for (const auto& [m, e] : terms_) {
    for (const auto& [v, k] : m.factors()) vars.insert(v);
  }
  return {vars.begin(), vars.end()};
}

std::vector<DecisionId> AffinePolynomial::decisions() const {
  std::set<DecisionId> ids;
  for (const auto& [m, e] : terms_) {
    for (const auto& [id, a] : e.coef) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

AffinePolynomial PolynomialTemplate::map(const std::function<Polynomial(const Polynomial&)>& op) const {
  AffinePolynomial out(nvars, has_time);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    out.add_scaled(op(Polynomial::monomial(basis[k], 1.0, nvars, has_time)), first + k);
  }
  return out;
}

AffinePolynomial PolynomialTemplate::as_affine() const {
  return map([](const Polynomial& p) { return p; });
}

Polynomial PolynomialTemplate::evaluate(std::span<const double> z) const {
  Polynomial p(nvars, has_time);
  for (std::size_t k = 0; k < basis.size(); ++k) p.add_term(basis[k], z[first + k]);
  return p;
}

DecisionId SosProgram::add_decision(std::string name) {
  decision_names.push_back(std::move(name));
  return decision_names.size() - 1;
}

PolynomialTemplate SosProgram::add_template(const std::string& name, std::size_t nvars, bool time,
                                            std::uint32_t degree) {
  std::vector<VarId> vars;
  for (std::size_t i = 0; i < nvars; ++i) vars.push_back(static_cast<VarId>(i));
  if (time) vars.push_back(kTime);
  PolynomialTemplate tpl{name, monomials_up_to(vars, degree), decisions(), nvars, time};
  for (const auto& m : tpl.basis) add_decision(name + "[" + to_string(m) + "]");
  return tpl;
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

std::uint32_t even_up(std::uint32_t d) { return d + (d % 2); }
std::uint32_t even_down(std::uint32_t d) { return d - (d % 2); }

}  // namespace

CompiledProgram compile(const SosProgram& program) {
  CompiledProgram out;
  auto& sdp = out.sdp;
  out.decisions = program.decisions();
  sdp.add_free(out.decisions);
  const double sign = program.maximize ? -1.0 : 1.0;
  for (const auto& [id, a] : program.objective.coef) {
    if (id >= out.decisions) throw std::invalid_argument("sos: objective references an unknown decision");
    sdp.free_c[id] = sign * a;
  }

  for (const auto& con : program.constraints) {
    const std::string where = "constraint '" + con.name + "'";
    for (DecisionId id : con.target.decisions()) {
      if (id >= out.decisions) throw std::invalid_argument("sos: " + where + " references an unknown decision");
    }
    std::set<VarId> varset;
    for (VarId v : con.target.variables()) varset.insert(v);
    std::uint32_t max_g = 0;
    for (const auto& atom : con.region) {
      if (atom.g.nvars() != con.target.nvars()) throw DimensionError("sos: region nvars mismatch in " + where);
      for (const auto& [m, c] : atom.g.terms()) {
        for (const auto& [v, k] : m.factors()) varset.insert(v);
      }
      max_g = std::max(max_g, atom.g.degree());
    }
    ConstraintLayout lay;
    lay.vars.assign(varset.begin(), varset.end());
    const std::uint32_t tdeg = con.target.degree();
    lay.degree = con.degree ? *con.degree : even_up(tdeg);
    if (lay.degree % 2 != 0) throw DegreeError("sos: " + where + ": relaxation degree must be even");
    if (lay.degree < tdeg) {
      throw DegreeError("sos: " + where + ": target has degree " + std::to_string(tdeg) +
                        " above the relaxation degree " + std::to_string(lay.degree) + "; raise the degree");
    }
    if (!con.multiplier_degrees.empty() && con.multiplier_degrees.size() != con.region.size()) {
      throw std::invalid_argument("sos: " + where + ": one multiplier degree per region atom expected");
    }

    std::map<Monomial, std::size_t, GrlexLess> rows;
    auto row_of = [&](const Monomial& m) {
      auto it = rows.find(m);
      if (it != rows.end()) return it->second;
      const std::size_t r = sdp.add_row(0.0);
      rows.emplace(m, r);
      return r;
    };

    // Target side (moved to the right-hand side / free columns), tightened by eps.
    sdp.rhs[row_of(Monomial{})] -= program.epsilon;
    for (const auto& [m, e] : con.target.terms()) {
      const std::size_t r = row_of(m);
      sdp.rhs[r] += e.constant;
      for (const auto& [id, a] : e.coef) sdp.free_a.push_back({r, id, -a});
    }

    auto add_gram = [&](const std::vector<Monomial>& basis, const Polynomial* g) {
      const std::size_t blk = sdp.add_block(sdp::BlockKind::psd, basis.size());
      for (std::size_t a = 0; a < basis.size(); ++a) {
        for (std::size_t b = a; b < basis.size(); ++b) {
          const Monomial ab = basis[a] * basis[b];
          if (g == nullptr) {
            sdp.a.push_back({row_of(ab), blk, a, b, 1.0});
          } else {
            for (const auto& [m, c] : g->terms()) sdp.a.push_back({row_of(ab * m), blk, a, b, c});
          }
        }
      }
      return GramLayout{blk, basis};
    };

    // On the variety of the equality atoms, monomials divisible by a leading monomial are
    // dependent on the others; dropping them keeps the moment side strictly feasible.
    std::vector<Monomial> leading;
    for (const auto& atom : con.region) {
      if (atom.relation == Relation::zero && !atom.g.is_zero()) leading.push_back(atom.g.terms().rbegin()->first);
    }
    auto gram_basis = [&](std::uint32_t half) {
      std::vector<Monomial> basis = monomials_up_to(lay.vars, half);
      std::erase_if(basis, [&](const Monomial& m) {
        return std::any_of(leading.begin(), leading.end(), [&](const Monomial& l) {
          return !l.is_one() && std::all_of(l.factors().begin(), l.factors().end(),
                                            [&](const auto& f) { return m.exponent(f.first) >= f.second; });
        });
      });
      return basis;
    };

    lay.s0 = add_gram(gram_basis(lay.degree / 2), nullptr);
    for (std::size_t i = 0; i < con.region.size(); ++i) {
      const auto& atom = con.region[i];
      const std::uint32_t dg = atom.g.degree();
      const std::optional<std::uint32_t> user =
          con.multiplier_degrees.empty() ? std::nullopt : con.multiplier_degrees[i];
      if (atom.relation == Relation::nonnegative) {
        if (user && *user % 2 != 0) throw DegreeError("sos: " + where + ": multiplier degrees must be even");
        if (dg > lay.degree || (user && *user + dg > lay.degree)) {
          throw DegreeError("sos: " + where + ": multiplier of degree " + std::to_string(user.value_or(0)) +
                            " times a region polynomial of degree " + std::to_string(dg) +
                            " exceeds the degree budget " + std::to_string(lay.degree) +
                            "; raise the relaxation degree");
        }
        const std::uint32_t md = user ? *user : even_down(lay.degree - dg);
        lay.gram.push_back(add_gram(gram_basis(md / 2), &atom.g));
        lay.lambda.emplace_back(std::nullopt);
      } else {
        if (dg > lay.degree) {
          throw DegreeError("sos: " + where + ": equality polynomial of degree " + std::to_string(dg) +
                            " exceeds the degree budget " + std::to_string(lay.degree) +
                            "; raise the relaxation degree");
        }
        const auto basis = monomials_up_to(lay.vars, lay.degree - dg);
        const std::size_t first = sdp.add_free(basis.size());
        for (std::size_t k = 0; k < basis.size(); ++k) {
          for (const auto& [m, c] : atom.g.terms()) sdp.free_a.push_back({row_of(basis[k] * m), first + k, c});
        }
        lay.gram.emplace_back(std::nullopt);
        lay.lambda.emplace_back(std::make_pair(first, basis));
      }
    }
    lay.rows = rows.size();
    out.layout.push_back(std::move(lay));
  }
  sdp.canonicalize();
  return out;
}

// ---------------------------------------------------------------------------
// Solving and reconstruction

namespace {

Polynomial gram_polynomial(const Eigen::MatrixXd& x, const std::vector<Monomial>& basis, std::size_t nvars,
                           bool has_time) {
  Polynomial p(nvars, has_time);
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = a; b < basis.size(); ++b) {
      const double v = x(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      p.add_term(basis[a] * basis[b], a == b ? v : 2.0 * v);
    }
  }
  return p;
}

double min_eigenvalue(const Eigen::MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(x, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

ProgramSolution solve(const SosProgram& program, const Backend& backend) {
  return solve(program, compile(program), backend);
}

ProgramSolution solve(const SosProgram& program, const CompiledProgram& compiled, const Backend& backend) {
  const sdp::Solution raw = backend.kind == Backend::Kind::in_process
                                ? sdp::solve_interior_point(compiled.sdp, backend.options)
                                : sdp::solve_file_exchange(compiled.sdp, backend.files, backend.options);
  ProgramSolution sol;
  sol.status = raw.status;
  sol.iterations = raw.iterations;
  sol.message = raw.message;
  if (raw.u.size() < static_cast<Eigen::Index>(compiled.decisions) || raw.x.size() != compiled.sdp.blocks.size()) {
    sol.status = sdp::SolveStatus::numerical_trouble;
    sol.message = "solver returned no usable solution: " + raw.message;
    return sol;
  }
  sol.decisions.assign(raw.u.data(), raw.u.data() + compiled.decisions);
  sol.objective = program.objective.evaluate(sol.decisions);
  sol.min_gram_eigenvalue = std::numeric_limits<double>::infinity();

  for (std::size_t c = 0; c < program.constraints.size(); ++c) {
    const auto& con = program.constraints[c];
    const auto& lay = compiled.layout[c];
    const std::size_t n = con.target.nvars();
    bool time = con.target.has_time();
    for (const auto& atom : con.region) time = time || atom.g.has_time();

    ConstraintCertificate cert;
    cert.s0 = gram_polynomial(raw.x[lay.s0.block], lay.s0.basis, n, time);
    cert.min_gram_eigenvalue = min_eigenvalue(raw.x[lay.s0.block]);
    Polynomial recon = cert.s0;
    for (std::size_t i = 0; i < con.region.size(); ++i) {
      Polynomial mult(n, time);
      if (lay.gram[i]) {
        mult = gram_polynomial(raw.x[lay.gram[i]->block], lay.gram[i]->basis, n, time);
        cert.min_gram_eigenvalue = std::min(cert.min_gram_eigenvalue, min_eigenvalue(raw.x[lay.gram[i]->block]));
      } else {
        const auto& [first, basis] = *lay.lambda[i];
        for (std::size_t k = 0; k < basis.size(); ++k) mult.add_term(basis[k], raw.u[static_cast<Eigen::Index>(first + k)]);
      }
      recon += mult * con.region[i].g;
      cert.multipliers.push_back(std::move(mult));
    }
    Polynomial target = con.target.evaluate(sol.decisions) - program.epsilon;
    cert.residual = (recon - target).max_abs_coefficient();
    sol.max_residual = std::max(sol.max_residual, cert.residual);
    sol.min_gram_eigenvalue = std::min(sol.min_gram_eigenvalue, cert.min_gram_eigenvalue);
    sol.certificates.push_back(std::move(cert));
  }
  if (program.constraints.empty()) sol.min_gram_eigenvalue = 0.0;
  return sol;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

bool satisfies(const std::vector<CompiledPolynomial>& ineq, const std::vector<CompiledPolynomial>& eq,
               std::span<const double> x, double tol) {
  for (const auto& g : ineq) {
    if (g(x) < -tol) return false;
  }
  for (const auto& h : eq) {
    if (std::abs(h(x)) > tol) return false;
  }
  return true;
}

}  // namespace

std::vector<std::vector<double>> sample_region(const std::vector<RegionAtom>& region, const Box& box,
                                               std::size_t count, std::uint64_t seed, double root_tol) {
  const std::size_t n = box.dim();
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> axes;
  for (const auto& [lo, hi] : box.bounds) axes.emplace_back(lo, hi);
  std::vector<CompiledPolynomial> ineq, eq;
  for (const auto& atom : region) {
    if (atom.g.depends_on(kTime)) throw DimensionError("sample_region: region atoms must be spatial");
    (atom.relation == Relation::zero ? eq : ineq).emplace_back(atom.g);
  }
  std::vector<std::vector<double>> out;
  std::vector<double> x(n);
  if (eq.empty()) {
    const std::size_t max_attempts = 400 * count + 1000;
    for (std::size_t a = 0; a < max_attempts && out.size() < count; ++a) {
      for (std::size_t i = 0; i < n; ++i) x[i] = axes[i](rng);
      if (satisfies(ineq, eq, x, 0.0)) out.push_back(x);
    }
    return out;
  }

  // Roots of the first equality atom along random lines; other atoms filter.
  const CompiledPolynomial& h = eq.front();
  std::normal_distribution<double> normal;
  std::vector<double> p(n), d(n), y(n);
  constexpr int kGrid = 256;
  const std::size_t max_lines = 200 * count + 200;
  for (std::size_t line = 0; line < max_lines && out.size() < count; ++line) {
    for (std::size_t i = 0; i < n; ++i) p[i] = axes[i](rng);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = normal(rng);
      norm += d[i] * d[i];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    double smin = -std::numeric_limits<double>::infinity(), smax = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      d[i] /= norm;
      const auto [lo, hi] = box.bounds[i];
      if (d[i] == 0.0) continue;
      const double s1 = (lo - p[i]) / d[i], s2 = (hi - p[i]) / d[i];
      smin = std::max(smin, std::min(s1, s2));
      smax = std::min(smax, std::max(s1, s2));
    }
    if (!(smin < smax)) continue;
    auto at = [&](double s) {
      for (std::size_t i = 0; i < n; ++i) y[i] = std::clamp(p[i] + s * d[i], box.bounds[i].first, box.bounds[i].second);
      return h(y);
    };
    double s_prev = smin, h_prev = at(smin);
    auto accept = [&](double s) {
      at(s);
      if (satisfies(ineq, {}, y, root_tol) && out.size() < count) out.push_back(y);
    };
    if (h_prev == 0.0) accept(smin);
    for (int k = 1; k <= kGrid; ++k) {
      const double s = smin + (smax - smin) * k / kGrid;
      const double hv = at(s);
      if (hv == 0.0) {
        accept(s);
      } else if (h_prev != 0.0 && (hv > 0.0) != (h_prev > 0.0)) {
        double a = s_prev, b = s, ha = h_prev;
        for (int it = 0; it < 200 && b - a > root_tol * 1e-3; ++it) {
          const double mid = 0.5 * (a + b);
          const double hm = at(mid);
          if (hm == 0.0) {
            a = b = mid;
            break;
          }
          if ((hm > 0.0) == (ha > 0.0)) {
            a = mid;
            ha = hm;
          } else {
            b = mid;
          }
        }
        const double root = 0.5 * (a + b);
        if (b - a <= root_tol) accept(root);
      }
      s_prev = s;
      h_prev = hv;
    }
  }
  return out;
}

ResidualSummary residual_check(const std::vector<SampledCheck>& checks, const Box& box, double horizon_T,
                               const SamplingOptions& options) {
  ResidualSummary summary;
  summary.margin = options.margin;
  summary.checked = true;
  std::mt19937_64 trng(options.seed ^ 0x9E3779B97F4A7C15ULL);
  std::uniform_real_distribution<double> tdist(0.0, horizon_T);
  for (std::size_t c = 0; c < checks.size(); ++c) {
    const auto& chk = checks[c];
    RegionCheck rc;
    rc.name = chk.name;
    const auto points = sample_region(chk.region, box, options.samples, options.seed + 7919 * (c + 1), options.root_tol);
    rc.samples = points.size();
    if (points.empty()) {
      summary.warnings.push_back("region '" + chk.name + "': no sample points found; left unchecked");
      summary.checked = false;
      summary.regions.push_back(std::move(rc));
      continue;
    }
    const CompiledPolynomial f(chk.expression);
    for (std::size_t k = 0; k < points.size(); ++k) {
      // Every tenth timed sample sits on an end of the horizon.
      double t = 0.0;
      if (chk.timed) t = k % 10 == 0 ? 0.0 : (k % 10 == 5 ? horizon_T : tdist(trng));
      const double viol = -f(points[k], t);
      if (viol > rc.worst_violation || rc.worst_point.empty()) {
        if (viol > rc.worst_violation) rc.worst_violation = viol;
        rc.worst_point = points[k];
        if (chk.timed) rc.worst_point.push_back(t);
      }
    }
    rc.worst_violation = std::max(0.0, rc.worst_violation);
    rc.checked = rc.worst_violation <= options.margin;
    summary.worst_violation = std::max(summary.worst_violation, rc.worst_violation);
    summary.checked = summary.checked && rc.checked;
    summary.regions.push_back(std::move(rc));
  }
  return summary;
}

}  // namespace reachcert::sos
