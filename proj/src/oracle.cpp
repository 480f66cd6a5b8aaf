// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include "reachcert/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <thread>

#include <boost/math/special_functions/beta.hpp>

namespace reachcert::oracle {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::array<double, 4> gaussian_block(std::uint64_t seed, std::uint64_t path, std::uint32_t lo, std::uint32_t hi) {
  const auto r = philox4x32({lo, hi, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)},
                            {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  auto uniform = [](std::uint32_t w) { return (static_cast<double>(w) + 0.5) * 0x1.0p-32; };
  std::array<double, 4> out{};
  for (int k = 0; k < 2; ++k) {
    const double rad = std::sqrt(-2.0 * std::log(uniform(r[2 * k])));
    const double ang = 2.0 * std::numbers::pi * uniform(r[2 * k + 1]);
    out[2 * k] = rad * std::cos(ang);
    out[2 * k + 1] = rad * std::sin(ang);
  }
  return out;
}

std::string to_string(PathOutcome outcome) {
  switch (outcome) {
    case PathOutcome::hit: return "hit";
    case PathOutcome::miss: return "miss";
    case PathOutcome::overflow: return "overflow";
  }
  return "unknown";
}

namespace {

void check_config(const ReachQuery& query, const SimConfig& cfg) {
  if (!(cfg.step_h > 0.0) || cfg.step_h > query.horizon_T) {
    throw std::invalid_argument("step_h must be in (0, T]");
  }
  if (cfg.n_paths == 0) throw std::invalid_argument("n_paths must be at least 1");
  if (!(cfg.boundary_tol >= 0.0)) throw std::invalid_argument("boundary_tol must be nonnegative");
}

class Simulator {
 public:
  Simulator(const SdeModel& model, const ReachQuery& query, const SimConfig& cfg)
      : n_(model.n), k_(model.k), query_(query), cfg_(cfg), gx_(query.domain.g.with_time(false)),
        gs_(query.target.g.with_time(false)) {
    model.check();
    query.check(model.n);
    check_config(query, cfg);
    for (const auto& b : model.drift) drift_.emplace_back(b.with_time(false));
    for (const auto& row : model.diffusion) {
      for (const auto& s : row) {
        diffusion_.emplace_back(s.with_time(false));
        zero_.push_back(s.is_zero());
      }
    }
    steps_ = static_cast<std::uint32_t>(std::ceil(query.horizon_T / cfg.step_h - 1e-9));
    steps_ = std::max<std::uint32_t>(steps_, 1);
  }

  PathResult run(std::uint64_t path, std::vector<TrajectoryPoint>* traj) const {
    const bool horizon = query_.kind == QueryKind::horizon;
    const double T = query_.horizon_T, tol = cfg_.boundary_tol;
    std::vector<double> x = query_.x0, b(n_), s(n_ * k_), xi(k_);
    // Draw j of the path is lane j % 4 of block j / 4.
    std::array<double, 4> cache{};
    std::uint64_t cached = ~std::uint64_t{0};
    auto normal = [&](std::uint64_t p, std::uint64_t j) {
      if (j / 4 != cached) {
        cached = j / 4;
        cache = gaussian_block(cfg_.seed, p, static_cast<std::uint32_t>(cached), static_cast<std::uint32_t>(cached >> 32));
      }
      return cache[j % 4];
    };
    PathResult res;
    auto record = [&](double t, bool stopped) {
      if (traj) traj->push_back({t, x, stopped});
    };
    auto finish = [&](PathOutcome o, double t) {
      record(t, true);
      res.outcome = o;
      res.stop_time = t;
      res.state = x;
      return res;
    };
    if (horizon && gs_(x) >= -tol) return finish(PathOutcome::hit, 0.0);
    if (gx_(x) <= tol) return finish(PathOutcome::miss, 0.0);
    record(0.0, false);
    double t = 0.0;
    for (std::uint32_t m = 0; m < steps_; ++m) {
      const double h = m + 1 == steps_ ? T - t : cfg_.step_h;
      const double sq = std::sqrt(h);
      for (std::size_t i = 0; i < n_; ++i) b[i] = drift_[i](x);
      for (std::size_t j = 0; j < s.size(); ++j) s[j] = zero_[j] ? 0.0 : diffusion_[j](x);
      for (std::size_t l = 0; l < k_; ++l) xi[l] = normal(path, std::uint64_t{m} * k_ + l);
      bool finite = true;
      for (std::size_t i = 0; i < n_; ++i) {
        double dx = b[i] * h;
        for (std::size_t l = 0; l < k_; ++l) dx += s[i * k_ + l] * sq * xi[l];
        x[i] += dx;
        finite = finite && std::isfinite(x[i]);
      }
      t = m + 1 == steps_ ? T : t + h;
      if (!finite) return finish(PathOutcome::overflow, t);
      if (horizon && gs_(x) >= -tol) return finish(PathOutcome::hit, t);
      if (gx_(x) <= tol) return finish(PathOutcome::miss, t);
      if (m + 1 < steps_) record(t, false);
    }
    if (horizon) return finish(PathOutcome::miss, T);
    return finish(gs_(x) >= -tol ? PathOutcome::hit : PathOutcome::miss, T);
  }

 private:
  std::size_t n_, k_;
  const ReachQuery& query_;
  SimConfig cfg_;
  CompiledPolynomial gx_, gs_;
  std::vector<CompiledPolynomial> drift_, diffusion_;
  std::vector<bool> zero_;
  std::uint32_t steps_ = 1;
};

}  // namespace

PathResult simulate_path(const SdeModel& model, const ReachQuery& query, const SimConfig& cfg,
                         std::uint64_t path_index, std::vector<TrajectoryPoint>* trajectory) {
  return Simulator(model, query, cfg).run(path_index, trajectory);
}

Interval clopper_pearson(std::uint64_t k, std::uint64_t n, double level) {
  if (n == 0) return {0.0, 1.0};
  if (k > n) throw std::invalid_argument("more successes than trials");
  const double a = 1.0 - level;
  const auto nd = static_cast<double>(n), kd = static_cast<double>(k);
  Interval ci;
  ci.low = k == 0 ? 0.0 : k == n ? std::pow(a / 2, 1.0 / nd) : boost::math::ibeta_inv(kd, nd - kd + 1, a / 2);
  ci.high = k == n ? 1.0 : k == 0 ? 1.0 - std::pow(a / 2, 1.0 / nd) : boost::math::ibeta_inv(kd + 1, nd - kd, 1 - a / 2);
  return ci;
}

double McEstimate::stderr_estimate() const {
  if (n_paths == 0) return 0.0;
  return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n_paths));
}

McEstimate estimate_probability(const SdeModel& model, const ReachQuery& query, const SimConfig& cfg) {
  const Simulator sim(model, query, cfg);
  const unsigned workers = std::max(1u, cfg.threads);
  struct Counts {
    std::uint64_t hit = 0, overflow = 0;
  };
  std::vector<Counts> counts(workers);
  auto work = [&](unsigned w) {
    const std::uint64_t lo = cfg.n_paths * w / workers, hi = cfg.n_paths * (w + 1) / workers;
    for (std::uint64_t p = lo; p < hi; ++p) {
      const auto o = sim.run(p, nullptr).outcome;
      if (o == PathOutcome::hit) ++counts[w].hit;
      if (o == PathOutcome::overflow) ++counts[w].overflow;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  McEstimate est;
  est.step_h = cfg.step_h;
  est.seed = cfg.seed;
  std::uint64_t overflow = 0;
  for (const auto& c : counts) {
    est.n_success += c.hit;
    overflow += c.overflow;
  }
  est.n_paths = cfg.n_paths;
  if (query.kind == QueryKind::horizon) {
    est.n_overflow = overflow;
    if (overflow > 0) est.warnings.push_back(std::to_string(overflow) + " non-finite paths counted as misses");
  } else {
    est.n_excluded = overflow;
    est.n_paths -= overflow;
    if (overflow > 0) est.warnings.push_back(std::to_string(overflow) + " non-finite paths excluded");
  }
  if (est.n_paths == 0) {
    est.warnings.push_back("no usable paths");
    return est;
  }
  est.p_hat = static_cast<double>(est.n_success) / static_cast<double>(est.n_paths);
  const Interval ci = clopper_pearson(est.n_success, est.n_paths);
  est.ci_low = std::min(ci.low, est.p_hat);
  est.ci_high = std::max(ci.high, est.p_hat);
  return est;
}

void write_trajectories_csv(std::ostream& os, const SdeModel& model, const ReachQuery& query, const SimConfig& cfg,
                            std::uint64_t paths) {
  const Simulator sim(model, query, cfg);
  os << "path,t";
  for (std::size_t i = 0; i < model.n; ++i) os << ",x" << i + 1;
  os << ",stopped\n";
  const auto old = os.precision(17);
  for (std::uint64_t p = 0; p < paths; ++p) {
    std::vector<TrajectoryPoint> traj;
    sim.run(p, &traj);
    for (const auto& pt : traj) {
      os << p << ',' << pt.t;
      for (double v : pt.x) os << ',' << v;
      os << ',' << (pt.stopped ? 1 : 0) << '\n';
    }
  }
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Finite differences

namespace {

/// First point from `from` towards `to` where pred holds, refined by bisection; nullopt if none.
template <typename Pred>
std::optional<double> first_crossing(double from, double to, Pred pred) {
  constexpr int kScan = 20000;
  double prev = from;
  for (int i = 1; i <= kScan; ++i) {
    const double x = from + (to - from) * i / kScan;
    if (pred(x)) {
      double a = prev, b = x;  // pred(a) false, pred(b) true
      for (int it = 0; it < 200 && std::abs(b - a) > 1e-15 * (1.0 + std::abs(b)); ++it) {
        const double mid = 0.5 * (a + b);
        (pred(mid) ? b : a) = mid;
      }
      return b;
    }
    prev = x;
  }
  return std::nullopt;
}

// Solves a tridiagonal system in place (sub, diag, sup, rhs -> solution).
void thomas(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup, std::vector<double>& rhs) {
  const std::size_t m = diag.size();
  for (std::size_t i = 1; i < m; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[m - 1] /= diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

double fd_solve_1d(const SdeModel& model, const ReachQuery& query, std::size_t grid, std::size_t steps) {
  model.check();
  query.check(model.n);
  if (model.n != 1) throw std::invalid_argument("fd_solve_1d needs a one-dimensional model");
  if (grid < 3) throw std::invalid_argument("fd_solve_1d needs at least 3 grid nodes");
  if (steps < 1) throw std::invalid_argument("fd_solve_1d needs at least one time step");
  if (query.bounding_box.dim() != 1) throw std::invalid_argument("fd_solve_1d needs a one-dimensional bounding box");

  const CompiledPolynomial gx(query.domain.g.with_time(false)), gs(query.target.g.with_time(false));
  const CompiledPolynomial b(model.drift[0].with_time(false));
  std::vector<CompiledPolynomial> sig;
  for (const auto& s : model.diffusion[0]) sig.emplace_back(s.with_time(false));
  auto at = [](const CompiledPolynomial& p, double x) { return p(std::span<const double>(&x, 1)); };

  const double x0 = query.x0[0];
  const auto [lo, hi] = query.bounding_box.bounds[0];
  auto outside_x = [&](double x) { return !(at(gx, x) > 0.0); };
  auto in_target = [&](double x) { return at(gs, x) >= 0.0; };
  const auto xl = first_crossing(x0, lo, outside_x), xr = first_crossing(x0, hi, outside_x);
  if (!xl || !xr) throw std::invalid_argument("X must be an interval inside the bounding box");

  const bool horizon = query.kind == QueryKind::horizon;
  double left = *xl, right = *xr, left_value = 0.0, right_value = 0.0;
  if (horizon) {
    if (const auto sl = first_crossing(x0, *xl, in_target)) {
      left = *sl;
      left_value = 1.0;
    }
    if (const auto sr = first_crossing(x0, *xr, in_target)) {
      right = *sr;
      right_value = 1.0;
    }
  }

  const std::size_t m = grid - 2;  // interior nodes
  const double dx = (right - left) / static_cast<double>(grid - 1);
  std::vector<double> v(grid), lower(m), diag(m), upper(m);
  for (std::size_t j = 0; j < grid; ++j) {
    const double x = left + dx * static_cast<double>(j);
    v[j] = horizon ? 0.0 : (in_target(x) ? 1.0 : 0.0);
  }
  v.front() = left_value;
  v.back() = right_value;

  // Spatial operator A v = b v_x + a/2 v_xx as a tridiagonal stencil (lower, diag, upper).
  for (std::size_t i = 0; i < m; ++i) {
    const double x = left + dx * static_cast<double>(i + 1);
    const double drift = at(b, x);
    double a = 0.0;
    for (const auto& s : sig) a += std::pow(at(s, x), 2);
    const double diff = 0.5 * a / (dx * dx);
    if (a >= std::abs(drift) * dx) {
      lower[i] = diff - drift / (2 * dx);
      upper[i] = diff + drift / (2 * dx);
    } else if (drift > 0) {  // upwind: information arrives from x + b dt
      lower[i] = diff;
      upper[i] = diff + drift / dx;
    } else {
      lower[i] = diff - drift / dx;
      upper[i] = diff;
    }
    diag[i] = -(lower[i] + upper[i]);
  }

  // theta-step: (I - theta dt A) v_new = (I + (1 - theta) dt A) v_old, Dirichlet ends fixed.
  auto step = [&](double dt, double theta) {
    std::vector<double> sub(m), dg(m), sup(m), rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double e = 1.0 - theta;
      rhs[i] = v[i + 1] + e * dt * (lower[i] * v[i] + diag[i] * v[i + 1] + upper[i] * v[i + 2]);
      sub[i] = -theta * dt * lower[i];
      dg[i] = 1.0 - theta * dt * diag[i];
      sup[i] = -theta * dt * upper[i];
    }
    rhs[0] -= sub[0] * v[0];
    rhs[m - 1] -= sup[m - 1] * v[grid - 1];
    thomas(sub, dg, sup, rhs);
    std::copy(rhs.begin(), rhs.end(), v.begin() + 1);
  };

  const double dt = query.horizon_T / static_cast<double>(steps);
  // Rannacher start-up: the first two steps as four implicit Euler half steps.
  const std::size_t startup = std::min<std::size_t>(steps, 2);
  for (std::size_t s = 0; s < 2 * startup; ++s) step(0.5 * dt, 1.0);
  for (std::size_t s = startup; s < steps; ++s) step(dt, 0.5);

  const double pos = (x0 - left) / dx;
  const auto j = std::min<std::size_t>(static_cast<std::size_t>(std::floor(pos)), grid - 2);
  const double frac = pos - static_cast<double>(j);
  return (1.0 - frac) * v[j] + frac * v[j + 1];
}

}  // namespace reachcert::oracle
