// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <tuple>

#include <Eigen/LU>
#include <Eigen/QR>

#include "reachcert/sdp.hpp"

namespace reachcert::sdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// SdpInstance

std::size_t SdpInstance::add_block(BlockKind kind, std::size_t size) {
  blocks.push_back({kind, size});
  return blocks.size() - 1;
}

std::size_t SdpInstance::add_free(std::size_t count) {
  const std::size_t first = n_free;
  n_free += count;
  free_c.resize(n_free, 0.0);
  return first;
}

std::size_t SdpInstance::add_row(double rhs_value) {
  rhs.push_back(rhs_value);
  return rhs.size() - 1;
}

namespace {

void canonical_entries(std::vector<MatrixEntry>& entries) {
  for (auto& e : entries) {
    if (e.i > e.j) std::swap(e.i, e.j);
  }
  std::sort(entries.begin(), entries.end(), [](const MatrixEntry& a, const MatrixEntry& b) {
    return std::tie(a.row, a.block, a.i, a.j) < std::tie(b.row, b.block, b.i, b.j);
  });
  std::vector<MatrixEntry> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (!out.empty() && out.back().row == e.row && out.back().block == e.block && out.back().i == e.i &&
        out.back().j == e.j) {
      out.back().value += e.value;
    } else {
      out.push_back(e);
    }
  }
  std::erase_if(out, [](const MatrixEntry& e) { return e.value == 0.0; });
  entries = std::move(out);
}

}  // namespace

void SdpInstance::canonicalize() {
  canonical_entries(a);
  for (auto& e : c) e.row = 0;
  canonical_entries(c);
  std::sort(free_a.begin(), free_a.end(),
            [](const FreeEntry& x, const FreeEntry& y) { return std::tie(x.row, x.var) < std::tie(y.row, y.var); });
  std::vector<FreeEntry> merged;
  for (const auto& e : free_a) {
    if (!merged.empty() && merged.back().row == e.row && merged.back().var == e.var) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const FreeEntry& e) { return e.value == 0.0; });
  free_a = std::move(merged);
  free_c.resize(n_free, 0.0);
}

void SdpInstance::check() const {
  auto check_entry = [&](const MatrixEntry& e, bool objective) {
    if (!objective && e.row >= rows()) throw FormatError("sdp: entry row out of range");
    if (e.block >= blocks.size()) throw FormatError("sdp: entry block out of range");
    const auto& spec = blocks[e.block];
    if (e.i >= spec.size || e.j >= spec.size) throw FormatError("sdp: entry index out of range");
    if (spec.kind == BlockKind::diagonal && e.i != e.j) {
      throw FormatError("sdp: off-diagonal entry in a diagonal block");
    }
    if (!std::isfinite(e.value)) throw FormatError("sdp: non-finite coefficient");
  };
  for (const auto& e : a) check_entry(e, false);
  for (const auto& e : c) check_entry(e, true);
  for (const auto& e : free_a) {
    if (e.row >= rows() || e.var >= n_free) throw FormatError("sdp: free entry out of range");
  }
  if (!free_c.empty() && free_c.size() != n_free) throw FormatError("sdp: free objective size mismatch");
  for (const auto& spec : blocks) {
    if (spec.size == 0) throw FormatError("sdp: empty block");
  }
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal:
      return "optimal";
    case SolveStatus::infeasible:
      return "infeasible";
    case SolveStatus::unbounded:
      return "unbounded";
    case SolveStatus::numerical_trouble:
      break;
  }
  return "numerical_trouble";
}

// ---------------------------------------------------------------------------
// Interior-point method

namespace {

struct Entry {
  int p;
  int q;
  double v;
};

struct RowPiece {
  std::size_t row;
  std::vector<Entry> entries;  // both triangles
};

struct PsdBlock {
  std::size_t index;  // position in instance.blocks
  int size;
  std::vector<RowPiece> rows;
  MatrixXd c;
};

double frob_dot(const MatrixXd& a, const MatrixXd& b) { return a.cwiseProduct(b).sum(); }

MatrixXd sym(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

// Largest step alpha with X + alpha dX psd, given the Cholesky factor of X.
double max_step_psd(const Eigen::LLT<MatrixXd>& chol, const MatrixXd& d) {
  const auto& l = chol.matrixL();
  MatrixXd t = l.solve(d);
  t = l.solve(t.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(t), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

double max_step_lp(const VectorXd& x, const VectorXd& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx[i] < 0.0) alpha = std::min(alpha, -x[i] / dx[i]);
  }
  return alpha;
}

class InteriorPoint {
 public:
  InteriorPoint(const SdpInstance& inst, const SolverOptions& opt) : inst_(inst), opt_(opt) { setup(); }

  Solution run();

 private:
  void setup();
  void initial_point();
  void drop_dependent_free();
  VectorXd apply_a(const std::vector<MatrixXd>& xs, const VectorXd& xl) const;
  std::vector<MatrixXd> apply_at(const VectorXd& y) const;
  bool factor_schur();
  void solve_schur(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& du) const;
  void raw_solve(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& du) const;
  Solution finish(SolveStatus status, int iterations, std::string message) const;

  const SdpInstance& inst_;
  SolverOptions opt_;

  std::size_t m_ = 0;
  std::size_t p_ = 0;
  std::vector<PsdBlock> psd_;
  std::vector<std::pair<std::size_t, std::size_t>> lp_blocks_;  // (block index, offset)
  std::size_t nlp_ = 0;
  MatrixXd alp_;  // m x nlp
  VectorXd clp_;
  MatrixXd bfree_;  // m x p
  std::vector<Eigen::Index> free_keep_;  // kept original free columns, when some were dropped
  VectorXd f_;
  VectorXd b_;
  double norm_b_ = 0.0;
  double norm_c_ = 0.0;
  double barrier_n_ = 0.0;

  std::vector<MatrixXd> x_, z_, w_;
  VectorXd xl_, zl_, u_, y_;

  MatrixXd schur_;
  Eigen::LLT<MatrixXd> schur_llt_;
  Eigen::PartialPivLU<MatrixXd> kkt_lu_;  // [M B; B' 0] when there are free variables

  double relp_ = 0.0, reld_ = 0.0, relgap_ = 0.0, pobj_ = 0.0, dobj_ = 0.0;
};

void InteriorPoint::setup() {
  inst_.check();
  m_ = inst_.rows();
  p_ = inst_.n_free;
  std::vector<std::size_t> psd_pos(inst_.blocks.size(), SIZE_MAX);
  std::vector<std::size_t> lp_offset(inst_.blocks.size(), SIZE_MAX);
  for (std::size_t k = 0; k < inst_.blocks.size(); ++k) {
    const auto& spec = inst_.blocks[k];
    if (spec.kind == BlockKind::psd) {
      psd_pos[k] = psd_.size();
      PsdBlock blk;
      blk.index = k;
      blk.size = static_cast<int>(spec.size);
      blk.c = MatrixXd::Zero(blk.size, blk.size);
      psd_.push_back(std::move(blk));
    } else {
      lp_offset[k] = nlp_;
      lp_blocks_.emplace_back(k, nlp_);
      nlp_ += spec.size;
    }
  }
  alp_ = MatrixXd::Zero(m_, nlp_);
  clp_ = VectorXd::Zero(nlp_);
  bfree_ = MatrixXd::Zero(m_, p_);
  f_ = VectorXd::Zero(p_);
  b_ = Eigen::Map<const VectorXd>(inst_.rhs.data(), m_);

  // Group constraint entries per (block, row).
  std::vector<std::vector<std::vector<Entry>>> per_block(psd_.size(), std::vector<std::vector<Entry>>(m_));
  for (const auto& e : inst_.a) {
    const auto& spec = inst_.blocks[e.block];
    if (spec.kind == BlockKind::psd) {
      auto& list = per_block[psd_pos[e.block]][e.row];
      const int i = static_cast<int>(e.i), j = static_cast<int>(e.j);
      list.push_back({i, j, e.value});
      if (i != j) list.push_back({j, i, e.value});
    } else {
      alp_(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(lp_offset[e.block] + e.i)) += e.value;
    }
  }
  for (std::size_t k = 0; k < psd_.size(); ++k) {
    for (std::size_t r = 0; r < m_; ++r) {
      if (!per_block[k][r].empty()) psd_[k].rows.push_back({r, std::move(per_block[k][r])});
    }
  }
  for (const auto& e : inst_.c) {
    const auto& spec = inst_.blocks[e.block];
    if (spec.kind == BlockKind::psd) {
      auto& c = psd_[psd_pos[e.block]].c;
      c(e.i, e.j) += e.value;
      if (e.i != e.j) c(e.j, e.i) += e.value;
    } else {
      clp_[static_cast<Eigen::Index>(lp_offset[e.block] + e.i)] += e.value;
    }
  }
  for (const auto& e : inst_.free_a) bfree_(e.row, e.var) += e.value;
  for (std::size_t i = 0; i < inst_.free_c.size(); ++i) f_[i] = inst_.free_c[i];
  drop_dependent_free();

  norm_b_ = b_.norm();
  double cc = clp_.squaredNorm() + f_.squaredNorm();
  for (const auto& blk : psd_) cc += blk.c.squaredNorm();
  norm_c_ = std::sqrt(cc);
  barrier_n_ = static_cast<double>(nlp_);
  for (const auto& blk : psd_) barrier_n_ += blk.size;
}

// Linearly dependent free columns make [M B; B' 0] singular. Keep an independent subset and
// pin the rest at zero: B u is unchanged, and so is the objective when f lies in range(B').
void InteriorPoint::drop_dependent_free() {
  if (p_ == 0) return;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(bfree_);
  qr.setThreshold(1e-10);
  const Eigen::Index r = qr.rank();
  const auto p = static_cast<Eigen::Index>(p_);
  if (r == p) return;
  std::vector<Eigen::Index> keep, drop;
  for (Eigen::Index i = 0; i < p; ++i) (i < r ? keep : drop).push_back(qr.colsPermutation().indices()[i]);
  std::sort(keep.begin(), keep.end());
  MatrixXd bs(static_cast<Eigen::Index>(m_), r);
  VectorXd fs(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    bs.col(j) = bfree_.col(keep[j]);
    fs[j] = f_[keep[j]];
  }
  const auto qs = bs.colPivHouseholderQr();
  for (const auto d : drop) {
    const VectorXd k = qs.solve(VectorXd(bfree_.col(d)));
    if (std::abs(f_[d] - k.dot(fs)) > 1e-9 * (1.0 + f_.norm())) return;  // objective would change
  }
  free_keep_ = std::move(keep);
  bfree_ = std::move(bs);
  f_ = std::move(fs);
  p_ = static_cast<std::size_t>(r);
}

void InteriorPoint::initial_point() {
  x_.clear();
  z_.clear();
  for (const auto& blk : psd_) {
    const double s = blk.size;
    double xi = std::max(10.0, std::sqrt(s));
    double eta = std::max({10.0, std::sqrt(s), blk.c.norm()});
    for (const auto& piece : blk.rows) {
      double na = 0.0;
      for (const auto& e : piece.entries) na += e.v * e.v;
      na = std::sqrt(na);
      xi = std::max(xi, s * (1.0 + std::abs(b_[piece.row])) / (1.0 + na));
      eta = std::max(eta, na);
    }
    x_.push_back(xi * MatrixXd::Identity(blk.size, blk.size));
    z_.push_back(eta * MatrixXd::Identity(blk.size, blk.size));
  }
  double xi = 10.0, eta = std::max(10.0, clp_.norm());
  for (std::size_t j = 0; j < nlp_; ++j) {
    const double na = alp_.col(j).norm();
    eta = std::max(eta, na);
  }
  for (std::size_t i = 0; i < m_; ++i) {
    xi = std::max(xi, (1.0 + std::abs(b_[i])) / (1.0 + alp_.row(i).norm()));
  }
  xl_ = VectorXd::Constant(nlp_, xi);
  zl_ = VectorXd::Constant(nlp_, eta);
  u_ = VectorXd::Zero(p_);
  y_ = VectorXd::Zero(m_);
}

VectorXd InteriorPoint::apply_a(const std::vector<MatrixXd>& xs, const VectorXd& xl) const {
  VectorXd out = VectorXd::Zero(m_);
  for (std::size_t k = 0; k < psd_.size(); ++k) {
    const auto& x = xs[k];
    for (const auto& piece : psd_[k].rows) {
      double s = 0.0;
      for (const auto& e : piece.entries) s += e.v * x(e.p, e.q);
      out[piece.row] += s;
    }
  }
  if (nlp_ > 0) out += alp_ * xl;
  return out;
}

std::vector<MatrixXd> InteriorPoint::apply_at(const VectorXd& y) const {
  std::vector<MatrixXd> out;
  out.reserve(psd_.size());
  for (const auto& blk : psd_) {
    MatrixXd s = MatrixXd::Zero(blk.size, blk.size);
    for (const auto& piece : blk.rows) {
      const double yi = y[piece.row];
      if (yi == 0.0) continue;
      for (const auto& e : piece.entries) s(e.p, e.q) += yi * e.v;
    }
    out.push_back(std::move(s));
  }
  return out;
}

bool InteriorPoint::factor_schur() {
  schur_ = MatrixXd::Zero(m_, m_);
  for (std::size_t k = 0; k < psd_.size(); ++k) {
    const auto& blk = psd_[k];
    const MatrixXd& x = x_[k];
    const MatrixXd& w = w_[k];
    MatrixXd g(blk.size, blk.size);
    for (std::size_t a = 0; a < blk.rows.size(); ++a) {
      const auto& ri = blk.rows[a];
      g.setZero();
      for (const auto& e : ri.entries) g.col(e.q) += e.v * x.col(e.p);
      const MatrixXd h = g * w;
      for (std::size_t bidx = a; bidx < blk.rows.size(); ++bidx) {
        const auto& rj = blk.rows[bidx];
        double s = 0.0;
        for (const auto& e : rj.entries) s += e.v * h(e.q, e.p);
        schur_(ri.row, rj.row) += s;
        if (bidx != a) schur_(rj.row, ri.row) += s;
      }
    }
  }
  if (nlp_ > 0) {
    const VectorXd d = xl_.cwiseQuotient(zl_);
    schur_.noalias() += alp_ * d.asDiagonal() * alp_.transpose();
  }
  schur_ = sym(schur_);

  const double scale = std::max(1.0, schur_.diagonal().cwiseAbs().maxCoeff());
  if (p_ > 0) {
    const auto m = static_cast<Eigen::Index>(m_), p = static_cast<Eigen::Index>(p_);
    MatrixXd kkt(m + p, m + p);
    kkt.topLeftCorner(m, m) = schur_;
    kkt.topRightCorner(m, p) = bfree_;
    kkt.bottomLeftCorner(p, m) = bfree_.transpose();
    kkt.bottomRightCorner(p, p).setZero();
    kkt_lu_.compute(kkt);
    return kkt_lu_.rcond() > 1e-300 && kkt_lu_.matrixLU().allFinite();
  }
  double reg = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    MatrixXd mm = schur_;
    if (reg > 0.0) mm.diagonal().array() += reg;
    schur_llt_.compute(mm);
    if (schur_llt_.info() == Eigen::Success) break;
    reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
    if (attempt == 7) return false;
  }
  return true;
}

void InteriorPoint::raw_solve(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& du) const {
  if (p_ == 0) {
    dy = schur_llt_.solve(h);
    du.resize(0);
    return;
  }
  VectorXd rhs(m_ + p_);
  rhs << h, rf;
  const VectorXd sol = kkt_lu_.solve(rhs);
  dy = sol.head(static_cast<Eigen::Index>(m_));
  du = sol.tail(static_cast<Eigen::Index>(p_));
}

// Solves [M B; B' 0] [dy; du] = [h; rf] with two steps of iterative refinement.
void InteriorPoint::solve_schur(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& du) const {
  raw_solve(h, rf, dy, du);
  for (int it = 0; it < 2; ++it) {
    VectorXd r1 = h - schur_ * dy;
    VectorXd r2 = rf;
    if (p_ > 0) {
      r1 -= bfree_ * du;
      r2 -= bfree_.transpose() * dy;
    }
    VectorXd cy, cu;
    raw_solve(r1, r2, cy, cu);
    dy += cy;
    if (p_ > 0) du += cu;
  }
}

Solution InteriorPoint::finish(SolveStatus status, int iterations, std::string message) const {
  Solution sol;
  sol.status = status;
  sol.iterations = iterations;
  sol.message = std::move(message);
  sol.x.resize(inst_.blocks.size());
  sol.z.resize(inst_.blocks.size());
  for (std::size_t k = 0; k < psd_.size(); ++k) {
    sol.x[psd_[k].index] = x_[k];
    sol.z[psd_[k].index] = z_[k];
  }
  for (const auto& [k, off] : lp_blocks_) {
    const auto n = static_cast<Eigen::Index>(inst_.blocks[k].size);
    sol.x[k] = xl_.segment(static_cast<Eigen::Index>(off), n);
    sol.z[k] = zl_.segment(static_cast<Eigen::Index>(off), n);
  }
  if (free_keep_.empty()) {
    sol.u = u_;
  } else {
    sol.u = VectorXd::Zero(static_cast<Eigen::Index>(inst_.n_free));
    for (std::size_t j = 0; j < free_keep_.size(); ++j) sol.u[free_keep_[j]] = u_[static_cast<Eigen::Index>(j)];
  }
  sol.y = y_;
  sol.primal_objective = pobj_;
  sol.dual_objective = dobj_;
  sol.primal_residual = relp_;
  sol.dual_residual = reld_;
  sol.gap = relgap_;
  return sol;
}

Solution InteriorPoint::run() {
  initial_point();
  const std::size_t nk = psd_.size();
  w_.assign(nk, MatrixXd());
  std::vector<Eigen::LLT<MatrixXd>> xchol(nk), zchol(nk);
  double prev_alpha = 1.0;
  int stall = 0;
  double best_merit = std::numeric_limits<double>::infinity();

  auto relaxed_ok = [&] {
    return relp_ <= opt_.relaxed_tol && reld_ <= opt_.relaxed_tol && relgap_ <= opt_.relaxed_tol;
  };
  auto feasible_ok = [&] {
    return relp_ <= opt_.relaxed_tol && reld_ <= opt_.relaxed_tol && relgap_ <= opt_.stalled_gap_tol;
  };
  // Best iterate within the relaxed tolerances (else best feasible one with a moderate gap);
  // late iterations can lose accuracy.
  struct Snapshot {
    std::vector<MatrixXd> x, z;
    VectorXd xl, zl, u, y;
    double pobj = 0.0, dobj = 0.0, relp = 0.0, reld = 0.0, gap = 0.0, merit = 0.0;
    int iter = 0;
    int tier = 0;
  };
  std::optional<Snapshot> saved;
  auto restore = [&](const Snapshot& sn) {
    x_ = sn.x;
    z_ = sn.z;
    xl_ = sn.xl;
    zl_ = sn.zl;
    u_ = sn.u;
    y_ = sn.y;
    pobj_ = sn.pobj;
    dobj_ = sn.dobj;
    relp_ = sn.relp;
    reld_ = sn.reld;
    relgap_ = sn.gap;
  };

  int iter = 0;
  bool diverged = false;
  for (; iter <= opt_.max_iterations; ++iter) {
    // Residuals and objectives.
    VectorXd rp = b_ - apply_a(x_, xl_);
    if (p_ > 0) rp -= bfree_ * u_;
    const auto aty = apply_at(y_);
    std::vector<MatrixXd> rd(nk);
    double rd2 = 0.0, cmr2 = 0.0;
    pobj_ = 0.0;
    double xz = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
      rd[k] = psd_[k].c - aty[k] - z_[k];
      rd2 += rd[k].squaredNorm();
      cmr2 += (aty[k] + z_[k]).squaredNorm();
      pobj_ += frob_dot(psd_[k].c, x_[k]);
      xz += frob_dot(x_[k], z_[k]);
    }
    VectorXd rdl = clp_ - zl_;
    if (nlp_ > 0) rdl -= alp_.transpose() * y_;
    rd2 += rdl.squaredNorm();
    cmr2 += (clp_ - rdl).squaredNorm();
    pobj_ += clp_.dot(xl_);
    xz += xl_.dot(zl_);
    VectorXd rf = f_;
    if (p_ > 0) rf -= bfree_.transpose() * y_;
    rd2 += rf.squaredNorm();
    pobj_ += f_.dot(u_);
    dobj_ = b_.dot(y_);
    const double mu = xz / barrier_n_;

    relp_ = rp.norm() / (1.0 + norm_b_);
    reld_ = std::sqrt(rd2) / (1.0 + norm_c_);
    relgap_ = std::abs(pobj_ - dobj_) / (1.0 + std::abs(pobj_) + std::abs(dobj_));
    if (opt_.verbose) {
      std::fprintf(stderr, "%3d pobj %+.8e dobj %+.8e relp %.2e reld %.2e gap %.2e mu %.2e\n", iter, pobj_, dobj_,
                   relp_, reld_, relgap_, mu);
    }
    if (relp_ <= opt_.feasibility_tol && reld_ <= opt_.feasibility_tol && relgap_ <= opt_.gap_tol) {
      return finish(SolveStatus::optimal, iter, "converged");
    }
    // Farkas-type certificates on the normalized iterates.
    if (dobj_ > 0.0) {
      const double fr = (f_ - rf).norm();
      if (std::sqrt(cmr2) / dobj_ <= opt_.infeasibility_tol && fr / dobj_ <= opt_.infeasibility_tol) {
        return finish(SolveStatus::infeasible, iter, "primal infeasibility certificate");
      }
    }
    if (pobj_ < 0.0) {
      const double ax = (b_ - rp).norm();
      if (ax / -pobj_ <= opt_.infeasibility_tol) {
        return finish(SolveStatus::unbounded, iter, "dual infeasibility certificate");
      }
    }
    const double merit = std::max({relp_, reld_, relgap_});
    if (feasible_ok()) {
      const int tier = relaxed_ok() ? 0 : 1;
      if (!saved || tier < saved->tier || (tier == saved->tier && merit < saved->merit)) {
        saved = Snapshot{x_, z_, xl_, zl_, u_, y_, pobj_, dobj_, relp_, reld_, relgap_, merit, iter, tier};
      }
    }
    if (iter == opt_.max_iterations) break;

    if (merit < 0.5 * best_merit) {
      best_merit = merit;
      stall = 0;
    } else if (++stall >= 12) {
      break;
    }

    // Factorizations.
    bool ok = true;
    for (std::size_t k = 0; k < nk && ok; ++k) {
      xchol[k].compute(x_[k]);
      zchol[k].compute(z_[k]);
      ok = xchol[k].info() == Eigen::Success && zchol[k].info() == Eigen::Success;
      if (ok) w_[k] = sym(zchol[k].solve(MatrixXd::Identity(psd_[k].size, psd_[k].size)));
    }
    if (!ok || !factor_schur()) break;

    // Predictor (sigma = 0) then corrector.
    std::vector<MatrixXd> dxa(nk), dza(nk);
    VectorXd dxla, dzla;
    double sigma = 0.0;
    std::vector<MatrixXd> dx(nk), dz(nk);
    VectorXd dxl, dzl, dy, du;
    for (int pass = 0; pass < 2; ++pass) {
      const bool corrector = pass == 1;
      std::vector<MatrixXd> tk(nk);
      for (std::size_t k = 0; k < nk; ++k) {
        MatrixXd t = sigma * mu * w_[k] - x_[k] - sym(x_[k] * rd[k] * w_[k]);
        if (corrector) t -= sym(dxa[k] * dza[k] * w_[k]);
        tk[k] = std::move(t);
      }
      VectorXd tl;
      if (nlp_ > 0) {
        tl = (sigma * mu * zl_.cwiseInverse()) - xl_ - xl_.cwiseProduct(rdl).cwiseQuotient(zl_);
        if (corrector) tl -= dxla.cwiseProduct(dzla).cwiseQuotient(zl_);
      } else {
        tl = VectorXd::Zero(0);
      }
      const VectorXd h = rp - apply_a(tk, tl);
      solve_schur(h, rf, dy, du);
      const auto atdy = apply_at(dy);
      for (std::size_t k = 0; k < nk; ++k) {
        dz[k] = rd[k] - atdy[k];
        dx[k] = tk[k] + sym(x_[k] * atdy[k] * w_[k]);
      }
      if (nlp_ > 0) {
        const VectorXd atdyl = alp_.transpose() * dy;
        dzl = rdl - atdyl;
        dxl = tl + xl_.cwiseProduct(atdyl).cwiseQuotient(zl_);
      }
      double ap = std::numeric_limits<double>::infinity(), ad = ap;
      for (std::size_t k = 0; k < nk; ++k) {
        ap = std::min(ap, max_step_psd(xchol[k], dx[k]));
        ad = std::min(ad, max_step_psd(zchol[k], dz[k]));
      }
      if (nlp_ > 0) {
        ap = std::min(ap, max_step_lp(xl_, dxl));
        ad = std::min(ad, max_step_lp(zl_, dzl));
      }
      if (!corrector) {
        ap = std::min(1.0, ap);
        ad = std::min(1.0, ad);
        double xz_aff = 0.0;
        for (std::size_t k = 0; k < nk; ++k) xz_aff += frob_dot(x_[k] + ap * dx[k], z_[k] + ad * dz[k]);
        if (nlp_ > 0) xz_aff += (xl_ + ap * dxl).dot(zl_ + ad * dzl);
        const double mu_aff = std::max(0.0, xz_aff / barrier_n_);
        const double ratio = mu > 0.0 ? mu_aff / mu : 0.0;
        sigma = std::clamp(ratio * ratio * ratio, 0.0, 1.0);
        dxa = dx;
        dza = dz;
        dxla = dxl;
        dzla = dzl;
        continue;
      }
      const double gamma = 0.9 + 0.09 * prev_alpha;
      ap = std::min(1.0, gamma * ap);
      ad = std::min(1.0, gamma * ad);
      prev_alpha = std::min(ap, ad);
      for (std::size_t k = 0; k < nk; ++k) {
        x_[k] = sym(x_[k] + ap * dx[k]);
        z_[k] = sym(z_[k] + ad * dz[k]);
      }
      if (nlp_ > 0) {
        xl_ += ap * dxl;
        zl_ += ad * dzl;
      }
      if (p_ > 0) u_ += ap * du;
      y_ += ad * dy;
      if (!y_.allFinite()) diverged = true;
    }
    if (diverged) break;
  }
  iter = std::min(iter, opt_.max_iterations);
  if (saved) {
    restore(*saved);
    return finish(SolveStatus::optimal, saved->iter,
                  saved->tier == 0 ? "stalled at reduced accuracy" : "stalled at a feasible point with a loose gap");
  }
  if (!y_.allFinite()) return finish(SolveStatus::numerical_trouble, iter, "non-finite iterate");
  return finish(SolveStatus::numerical_trouble, iter, "no convergence");
}

}  // namespace

Solution solve_interior_point(const SdpInstance& instance, const SolverOptions& options) {
  InteriorPoint ipm(instance, options);
  return ipm.run();
}

}  // namespace reachcert::sdp
