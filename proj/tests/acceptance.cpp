// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachcert/certificates.hpp"
#include "reachcert/model.hpp"
#include "reachcert/oracle.hpp"
#include "reachcert/sdp.hpp"
#include "reachcert/sos.hpp"

namespace fs = std::filesystem;
using namespace reachcert;

namespace {

const std::string kBench = std::string(REACHCERT_SOURCE_DIR) + "/benchmarks/";
const char* const kBenchmarks[] = {"brownian", "ou", "oscillator2d"};

struct Outcome8 {
  std::size_t certificates = 0;
  double worst_residual = 0.0;
};

// Reconstruction residuals of every certificate solved along the way.
Outcome8 g_residuals;

void note_residual(const BoundReport& r) {
  if (r.outcome != Outcome::certified && r.outcome != Outcome::unchecked) return;
  ++g_residuals.certificates;
  g_residuals.worst_residual = std::max(g_residuals.worst_residual, r.reconstruction_residual);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Result {
  bool pass = true;
  std::string detail;
};

ProblemSpec benchmark(const std::string& name, QueryKind kind) {
  ProblemSpec spec = load_problem(kBench + name + ".json");
  spec.query.kind = kind;
  return spec;
}

Result soundness() {
  Result res;
  std::ostringstream d;
  std::size_t checked = 0, failed = 0;
  for (const char* name : kBenchmarks) {
    for (QueryKind kind : {QueryKind::horizon, QueryKind::instant}) {
      const auto spec = benchmark(name, kind);
      oracle::SimConfig cfg;
      cfg.n_paths = 100000;
      cfg.step_h = 1e-3;
      const auto est = oracle::estimate_probability(spec.model, spec.query, cfg);
      std::printf("  %s/%s: p_hat %.5f CI [%.5f, %.5f]\n", name, to_string(kind).c_str(), est.p_hat, est.ci_low,
                  est.ci_high);
      for (CertificateKind k : kAllCertificateKinds) {
        if (traits(k).query != kind) continue;
        const auto r = certify(k, spec.model, spec.query);
        note_residual(r);
        if (r.outcome != Outcome::certified) {
          std::printf("    %-4s %s\n", to_string(k).c_str(), to_string(r.outcome).c_str());
          continue;
        }
        const bool up = traits(k).upper;
        const bool ok = up ? r.bound >= est.ci_low : r.bound <= est.ci_high;
        ++checked;
        if (!ok) ++failed;
        std::printf("    %-4s %.6f %s %s\n", to_string(k).c_str(), r.bound, up ? ">= ci_low" : "<= ci_high",
                    ok ? "ok" : "VIOLATED");
      }
      std::fflush(stdout);
    }
  }
  res.pass = failed == 0 && checked > 0;
  d << checked << " certified bounds checked against the 95% interval, " << failed << " violations";
  res.detail = d.str();
  return res;
}

Result pde_characterization() {
  Result res;
  const auto base = benchmark("brownian", QueryKind::horizon);
  oracle::SimConfig cfg;
  cfg.step_h = 1e-4;
  cfg.n_paths = 20000;
  double worst = 0.0;
  for (QueryKind kind : {QueryKind::horizon, QueryKind::instant}) {
    for (double T : {0.25, 1.0, 4.0}) {
      auto q = base.query;
      q.kind = kind;
      q.horizon_T = T;
      const double fd = oracle::fd_solve_1d(base.model, q, 2001);
      const auto est = oracle::estimate_probability(base.model, q, cfg);
      const double sigma = std::sqrt(fd * (1.0 - fd) / static_cast<double>(est.n_paths));
      const double z = sigma > 0.0 ? std::abs(est.p_hat - fd) / sigma : (est.p_hat == fd ? 0.0 : INFINITY);
      worst = std::max(worst, z);
      std::printf("  %s T=%.2f: fd %.6f  mc %.6f  |z| %.2f\n", to_string(kind).c_str(), T, fd, est.p_hat, z);
      if (z > 3.0) res.pass = false;
    }
  }
  std::fflush(stdout);
  res.detail = "max |mc - fd| / sigma = " + fmt("%.2f", worst) + " (h = 1e-4, 2e4 paths, sigma from the fd value)";
  return res;
}

Result monotonicity() {
  Result res;
  std::size_t exact = 0, pairs = 0;
  for (const char* name : kBenchmarks) {
    const auto spec = benchmark(name, QueryKind::horizon);
    oracle::SimConfig cfg;
    cfg.n_paths = std::string(name) == "oscillator2d" ? 20000 : 100000;
    std::optional<oracle::McEstimate> prev;
    std::printf("  %s:", name);
    for (double T : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      auto q = spec.query;
      q.horizon_T = T;
      const auto est = oracle::estimate_probability(spec.model, q, cfg);
      std::printf(" %.4f", est.p_hat);
      if (prev) {
        ++pairs;
        if (est.p_hat >= prev->p_hat) ++exact;
        if (est.ci_high < prev->ci_low) res.pass = false;
      }
      prev = est;
    }
    std::printf("\n");
    std::fflush(stdout);
  }
  res.detail = std::to_string(exact) + "/" + std::to_string(pairs) + " consecutive pairs nondecreasing";
  return res;
}

Result alpha_continuity() {
  Result res;
  double worst = 0.0;
  std::size_t n = 0;
  for (double v0 : {-0.5, 0.0, 0.25, 0.5, 1.0}) {
    for (double beta : {-1.0, -0.1, 0.0, 0.1, 1.0}) {
      for (double T : {0.25, 1.0, 2.0, 4.0}) {
        ++n;
        for (CertificateKind k : {CertificateKind::HU2, CertificateKind::HL2}) {
          const double M = 0.1;
          const double at0 = bound_formula(k, v0, 0.0, beta, M, T);
          for (double a : {1e-8, -1e-8}) worst = std::max(worst, std::abs(bound_formula(k, v0, a, beta, M, T) - at0));
        }
      }
    }
  }
  res.pass = worst <= 1e-6 && n == 100;
  res.detail = std::to_string(n) + " grid points, max deviation " + fmt("%.2e", worst);
  return res;
}

Result tightness() {
  Result res;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t below = 0, total = 0;
  while (total < 1000) {
    const double alpha = -2.0 * u(rng);
    const double v0 = u(rng);
    const double ratio = 1.0 + 4.0 * u(rng);
    const double beta = -alpha * ratio;
    const double T = 5.0 * u(rng);
    if (alpha >= 0.0 || alpha <= -2.0 || ratio <= 1.0 || T <= 0.0) continue;
    ++total;
    const auto c = competing_bounds(v0, alpha, beta, T);
    const double hu2 = bound_formula(CertificateKind::HU2, v0, alpha, beta, 0.0, T);
    if (c.santoyo && hu2 < *c.santoyo) ++below;
  }
  res.pass = below == total;
  res.detail = std::to_string(below) + "/" + std::to_string(total) + " samples strictly below the prior bound";
  return res;
}

Result degeneracy() {
  Result res;
  std::ostringstream d;
  for (const char* name : kBenchmarks) {
    const auto spec = benchmark(name, QueryKind::horizon);
    CertifyOptions opt;
    opt.degrees.drop_w = true;
    const auto r = certify(CertificateKind::HL1, spec.model, spec.query, opt);
    note_residual(r);
    const bool solved = r.outcome == Outcome::certified || r.outcome == Outcome::unchecked;
    if (!solved || r.v0 > 1e-6) res.pass = false;
    d << (d.tellp() > 0 ? ", " : "") << name << " v0=" << fmt("%.2e", r.v0) << " (" << to_string(r.outcome) << ")";
  }
  res.detail = d.str();
  return res;
}

// RK4 on the deterministic drift; true when the run reaches Xs while staying in X.
bool reach_avoid(const SdeModel& model, const ReachQuery& q, std::vector<double> x, double dt) {
  const std::size_t n = model.n;
  auto f = [&](const std::vector<double>& s) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = evaluate(model.drift[i], s);
    return out;
  };
  auto axpy = [](const std::vector<double>& a, double h, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + h * b[i];
    return out;
  };
  const auto steps = static_cast<std::size_t>(std::ceil(q.horizon_T / dt));
  const double h = q.horizon_T / static_cast<double>(steps);
  for (std::size_t s = 0; s <= steps; ++s) {
    if (evaluate(q.domain.g, x) <= 0.0) return false;
    const bool in_target = evaluate(q.target.g, x) >= 0.0;
    if (q.kind == QueryKind::horizon && in_target) return true;
    if (s == steps) return in_target;
    const auto k1 = f(x);
    const auto k2 = f(axpy(x, h / 2, k1));
    const auto k3 = f(axpy(x, h / 2, k2));
    const auto k4 = f(axpy(x, h, k3));
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return false;
}

// 20 points of the reach set by rejection sampling in the bounding box.
std::vector<std::vector<double>> sample_reach_set(const ReachSet& set, const Box& box, std::size_t count) {
  std::mt19937_64 rng(7);
  std::vector<std::vector<double>> pts;
  std::vector<double> x(box.dim());
  for (std::size_t tries = 0; tries < 20000000 && pts.size() < count; ++tries) {
    for (std::size_t i = 0; i < box.dim(); ++i) {
      x[i] = std::uniform_real_distribution<double>(box.bounds[i].first, box.bounds[i].second)(rng);
    }
    if (set.contains(x)) pts.push_back(x);
  }
  return pts;
}

Result deterministic_degeneration() {
  Result res;
  std::ostringstream d;
  bool any = false;
  for (auto [kind, query] : {std::pair{CertificateKind::HL1, QueryKind::horizon},
                             std::pair{CertificateKind::IL1, QueryKind::instant}}) {
    const auto spec = benchmark("oscillator2d", query);
    const SdeModel det = spec.model.without_noise();
    BoundReport r;
    std::uint32_t used = 0;
    for (std::uint32_t deg : {4u, 6u}) {
      CertifyOptions opt;
      opt.degrees.v = deg;
      opt.degrees.w = deg;
      r = certify(kind, det, spec.query, opt);
      note_residual(r);
      used = deg;
      if (r.outcome == Outcome::certified && !r.vacuous) break;
    }
    if (r.outcome != Outcome::certified) {
      d << to_string(kind) << ": " << to_string(r.outcome) << "; ";
      continue;
    }
    const auto set = retrieve_deterministic_reach_set(r, det, spec.query);
    const auto pts = sample_reach_set(set, spec.query.bounding_box, 20);
    std::size_t good = 0;
    for (const auto& p : pts) good += reach_avoid(det, spec.query, p, 1e-4) ? 1 : 0;
    d << to_string(kind) << " degree " << used << " bound " << fmt("%.4f", r.bound) << ": " << good << "/"
      << pts.size() << " sampled points confirmed; ";
    if (pts.size() == 20) {
      any = true;
      if (good != 20) res.pass = false;
    } else if (!pts.empty() && good != pts.size()) {
      res.pass = false;
    }
  }
  res.pass = res.pass && any;
  res.detail = d.str();
  if (res.detail.size() >= 2) res.detail.resize(res.detail.size() - 2);
  return res;
}

Result sos_layer() {
  Result res;
  std::ostringstream d;
  using sos::AffinePolynomial;
  using sos::Relation;
  auto single = [](const char* name, const char* text, std::size_t n, std::vector<sos::RegionAtom> region,
                   std::uint32_t degree) {
    sos::SosProgram prog;
    prog.epsilon = 0.0;
    sos::SosConstraint c{name, AffinePolynomial::fixed(parse_polynomial(text, n)), std::move(region), std::nullopt, {}};
    if (degree > 0) c.degree = degree;
    prog.constraints.push_back(std::move(c));
    return sos::solve(prog);
  };
  const auto sq = single("square", "x1^2 - 2*x1*x2 + x2^2", 2, {}, 0);
  const auto iv = single("interval", "1.1 - x1^2", 1, {{parse_polynomial("1 - x1^2", 1), Relation::nonnegative}}, 0);
  const auto mz = single("motzkin", "x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1", 2, {}, 6);
  const bool feas = sq.status == sdp::SolveStatus::optimal && iv.status == sdp::SolveStatus::optimal;
  const bool motz = mz.status == sdp::SolveStatus::infeasible;
  d << "square " << sdp::to_string(sq.status) << ", interval " << sdp::to_string(iv.status) << ", motzkin "
    << sdp::to_string(mz.status);
  for (const auto* s : {&sq, &iv}) g_residuals.worst_residual = std::max(g_residuals.worst_residual, s->max_residual);

  // SDPA round trip of a real certificate instance.
  const auto spec = benchmark("brownian", QueryKind::horizon);
  const auto problem = build_condition(CertificateKind::HL1, spec.model, spec.query, {}, 0.0);
  const auto compiled = sos::compile(problem.to_program());
  const std::string text = sdp::write_sdpa(compiled.sdp);
  std::istringstream in(text);
  const bool round_trip = sdp::write_sdpa(sdp::read_sdpa(in)) == text;
  d << "; sdpa round trip " << (round_trip ? "identical" : "DIFFERS");

  const bool residual = g_residuals.worst_residual <= 1e-6;
  d << "; worst reconstruction residual " << fmt("%.2e", g_residuals.worst_residual) << " over "
    << g_residuals.certificates << " certificates";
  res.pass = feas && motz && round_trip && residual;
  res.detail = d.str();
  return res;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result reproducibility() {
  Result res;
  const fs::path dir = fs::temp_directory_path() / ("reachcert_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto run = [&](const std::string& out, const std::string& extra) {
    const std::string cmd = std::string("'") + REACHCERT_CLI + "' compare '" + kBench +
                            "ou.json' --paths 20000 --seed 42 --out '" + (dir / out).string() + "' " + extra +
                            " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const int a = run("a.json", ""), b = run("b.json", "");
  const int c = run("c.json", "--no-timings"), e = run("d.json", "--threads 3 --no-timings");
  bool same_modulo_timings = false;
  if (a == 0 && b == 0) {
    auto ja = nlohmann::json::parse(read_file(dir / "a.json"));
    auto jb = nlohmann::json::parse(read_file(dir / "b.json"));
    ja.erase("timings");
    jb.erase("timings");
    same_modulo_timings = ja.dump(2) == jb.dump(2);
  }
  const bool bytes = c == 0 && e == 0 && read_file(dir / "c.json") == read_file(dir / "d.json");
  fs::remove_all(dir);
  res.pass = same_modulo_timings && bytes;
  res.detail = std::string("with timings stripped: ") + (same_modulo_timings ? "identical" : "DIFFER") +
               "; --no-timings (1 vs 3 threads): " + (bytes ? "byte-identical" : "DIFFER");
  return res;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria = {
      {"bound soundness against the Monte-Carlo oracle", soundness},
      {"finite differences agree with Monte Carlo", pde_characterization},
      {"horizon probability nondecreasing in T", monotonicity},
      {"continuity of the bound formulas at alpha = 0", alpha_continuity},
      {"HU2 bound below the prior alpha/beta bound", tightness},
      {"HL1 without the auxiliary function is vacuous", degeneracy},
      {"deterministic reach sets confirmed by integration", deterministic_degeneration},
      {"SOS layer", sos_layer},
      {"compare reports are reproducible", reproducibility},
  };
  int failures = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu: %s  %s: %s [%.1fs]\n", i + 1, r.pass ? "PASS" : "FAIL", criteria[i].first,
                r.detail.c_str(), secs);
    std::fflush(stdout);
    if (!r.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed in %.0fs\n", static_cast<int>(criteria.size()) - failures, criteria.size(),
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return failures == 0 ? 0 : 1;
}
