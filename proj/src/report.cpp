// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include "reachcert/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace reachcert {

using nlohmann::ordered_json;

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::ok:
      return "OK";
    case Verdict::fail:
      return "FAIL";
    case Verdict::not_checked:
      return "NOT_CHECKED";
  }
  return "NOT_CHECKED";
}

void evaluate_consistency(RunReport& report) {
  report.checks.clear();
  if (!report.estimate) {
    report.verdict = Verdict::not_checked;
    return;
  }
  const auto& est = *report.estimate;
  bool all = true;
  for (const auto& b : report.bounds) {
    if (b.outcome != Outcome::certified) continue;
    ConsistencyCheck c;
    c.kind = b.kind;
    c.bound = b.bound;
    if (traits(b.kind).upper) {
      c.reference = est.ci_low;
      c.pass = b.bound >= est.ci_low;
    } else {
      c.reference = est.ci_high;
      c.pass = b.bound <= est.ci_high;
    }
    all = all && c.pass;
    report.checks.push_back(c);
  }
  report.verdict = all ? Verdict::ok : Verdict::fail;
}

std::vector<CompetingRow> competing_table(const std::vector<BoundReport>& bounds) {
  std::vector<CompetingRow> rows;
  for (const auto& b : bounds) {
    if (b.outcome != Outcome::certified) continue;
    if (b.kind != CertificateKind::HU2 && b.kind != CertificateKind::HU3) continue;
    CompetingRow r;
    r.kind = b.kind;
    r.v0 = b.v0;
    r.alpha = b.alpha;
    r.beta = b.beta;
    r.T = b.horizon_T;
    r.bounds = competing_bounds(b.v0, b.alpha, b.beta, b.horizon_T);
    rows.push_back(r);
  }
  return rows;
}

namespace {

// nlohmann writes non-finite numbers as null; keep them readable instead.
ordered_json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

ordered_json degrees_json(const DegreeSpec& d) {
  ordered_json j;
  j["v"] = d.v;
  j["w"] = d.w;
  j["multiplier"] = d.multiplier ? ordered_json(*d.multiplier) : ordered_json(nullptr);
  j["relaxation"] = d.relaxation ? ordered_json(*d.relaxation) : ordered_json(nullptr);
  j["drop_w"] = d.drop_w;
  return j;
}

ordered_json residual_json(const sos::ResidualSummary& r) {
  ordered_json j;
  j["status"] = r.checked ? "checked" : "unchecked";
  j["worst_violation"] = num(r.worst_violation);
  j["margin"] = num(r.margin);
  ordered_json regions = ordered_json::array();
  for (const auto& reg : r.regions) {
    ordered_json e;
    e["name"] = reg.name;
    e["samples"] = reg.samples;
    e["worst_violation"] = num(reg.worst_violation);
    ordered_json pt = ordered_json::array();
    for (double x : reg.worst_point) pt.push_back(num(x));
    e["worst_point"] = pt;
    e["checked"] = reg.checked;
    regions.push_back(e);
  }
  j["regions"] = regions;
  j["warnings"] = r.warnings;
  return j;
}

ordered_json bound_json(const BoundReport& b) {
  ordered_json j;
  j["kind"] = to_string(b.kind);
  j["outcome"] = to_string(b.outcome);
  j["bound"] = num(b.bound);
  j["raw_bound"] = b.raw_bound ? num(*b.raw_bound) : ordered_json(nullptr);
  j["vacuous"] = b.vacuous;
  j["v"] = to_string(b.v);
  j["w"] = b.w ? ordered_json(to_string(*b.w)) : ordered_json(nullptr);
  j["alpha"] = num(b.alpha);
  j["beta"] = num(b.beta);
  j["M"] = num(b.M);
  j["v0"] = num(b.v0);
  j["T"] = num(b.horizon_T);
  j["solver_status"] = sdp::to_string(b.solver_status);
  j["solver_message"] = b.solver_message;
  j["iterations"] = b.iterations;
  j["reconstruction_residual"] = num(b.reconstruction_residual);
  j["epsilon"] = num(b.epsilon);
  j["residual_summary"] = residual_json(b.residual);
  j["degrees"] = degrees_json(b.degrees);
  ordered_json grid = ordered_json::array();
  for (double a : b.alpha_grid) grid.push_back(num(a));
  j["alpha_grid"] = grid;
  j["grid_restricted"] = b.grid_restricted;
  ordered_json attempts = ordered_json::array();
  for (const auto& a : b.attempts) {
    ordered_json e;
    e["alpha"] = num(a.alpha);
    e["status"] = sdp::to_string(a.status);
    e["outcome"] = to_string(a.outcome);
    e["raw_bound"] = num(a.raw_bound);
    e["worst_violation"] = num(a.worst_violation);
    e["reconstruction_residual"] = num(a.reconstruction_residual);
    e["iterations"] = a.iterations;
    e["message"] = a.message;
    attempts.push_back(e);
  }
  j["attempts"] = attempts;
  j["notes"] = b.notes;
  return j;
}

ordered_json estimate_json(const oracle::McEstimate& e) {
  ordered_json j;
  j["p_hat"] = num(e.p_hat);
  j["ci_low"] = num(e.ci_low);
  j["ci_high"] = num(e.ci_high);
  j["confidence"] = 0.95;
  j["stderr"] = num(e.stderr_estimate());
  j["n_success"] = e.n_success;
  j["n_paths"] = e.n_paths;
  j["n_excluded"] = e.n_excluded;
  j["n_overflow"] = e.n_overflow;
  j["step_h"] = num(e.step_h);
  j["seed"] = e.seed;
  j["warnings"] = e.warnings;
  return j;
}

std::string fmt(double x, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

}  // namespace

std::string report_to_json_text(const RunReport& report, bool include_timings) {
  ordered_json j;
  j["command"] = report.command;
  j["model_file"] = report.model_file;
  j["problem"] = ordered_json::parse(problem_to_json_text(report.problem));

  ordered_json val;
  val["ok"] = report.validation.ok();
  val["errors"] = report.validation.errors;
  val["warnings"] = report.validation.warnings;
  val["samples"] = report.validation.samples;
  val["target_samples"] = report.validation.target_samples;
  val["target_interior_samples"] = report.validation.target_interior_samples;
  j["validation"] = val;

  ordered_json settings;
  if (!report.bounds.empty() || report.command != "estimate") {
    const auto& c = report.certify;
    settings["degrees"] = degrees_json(c.degrees);
    ordered_json grid = ordered_json::array();
    for (double a : c.alpha_grid) grid.push_back(num(a));
    settings["alpha_grid"] = c.alpha_grid.empty() ? ordered_json("default") : grid;
    settings["backend"] = c.backend.kind == sos::Backend::Kind::in_process ? "inprocess" : "sdpa";
    if (c.backend.kind == sos::Backend::Kind::file_exchange) {
      settings["sdpa_directory"] = c.backend.files.directory;
      settings["sdpa_command"] = c.backend.files.command;
    }
    settings["epsilon"] = num(c.epsilon);
    settings["residual_samples"] = c.sampling.samples;
    settings["margin"] = num(c.sampling.margin);
  }
  if (report.sim) {
    ordered_json s;
    s["step_h"] = num(report.sim->step_h);
    s["n_paths"] = report.sim->n_paths;
    s["seed"] = report.sim->seed;
    s["boundary_tol"] = num(report.sim->boundary_tol);
    s["overshoot"] = "freeze at first sampled point outside";
    settings["simulation"] = s;
  }
  j["settings"] = settings;

  ordered_json bounds = ordered_json::array();
  for (const auto& b : report.bounds) bounds.push_back(bound_json(b));
  j["bounds"] = bounds;

  ordered_json competing = ordered_json::array();
  for (const auto& r : report.competing) {
    ordered_json e;
    e["kind"] = to_string(r.kind);
    e["v0"] = num(r.v0);
    e["alpha"] = num(r.alpha);
    e["beta"] = num(r.beta);
    e["T"] = num(r.T);
    e["santoyo"] = r.bounds.santoyo ? num(*r.bounds.santoyo) : ordered_json(nullptr);
    e["gronwall"] = num(r.bounds.gronwall);
    competing.push_back(e);
  }
  j["competing_bounds"] = competing;

  j["oracle"] = report.estimate ? estimate_json(*report.estimate) : ordered_json(nullptr);
  if (report.fd_value) {
    ordered_json fd;
    fd["value"] = num(*report.fd_value);
    fd["grid"] = report.fd_grid;
    fd["steps"] = report.fd_steps;
    j["fd"] = fd;
  } else {
    j["fd"] = nullptr;
  }

  ordered_json checks = ordered_json::array();
  for (const auto& c : report.checks) {
    ordered_json e;
    e["kind"] = to_string(c.kind);
    e["bound"] = num(c.bound);
    e["reference"] = num(c.reference);
    e["against"] = traits(c.kind).upper ? "ci_low" : "ci_high";
    e["pass"] = c.pass;
    checks.push_back(e);
  }
  j["checks"] = checks;
  j["verdict"] = to_string(report.verdict);

  if (include_timings) {
    ordered_json t;
    for (const auto& [name, secs] : report.timings) t[name] = num(secs);
    j["timings"] = t;
  }
  return j.dump(2) + "\n";
}

std::string render_summary(const RunReport& report) {
  std::ostringstream os;
  const auto& q = report.problem.query;
  os << report.command << ": " << report.model_file << " (n=" << report.problem.model.n
     << ", query=" << to_string(q.kind) << ", T=" << fmt(q.horizon_T) << ")\n";
  for (const auto& w : report.validation.warnings) os << "  warning: " << w << "\n";
  for (const auto& e : report.validation.errors) os << "  error: " << e << "\n";

  if (!report.bounds.empty()) {
    os << "  kind  outcome          bound         alpha       residual\n";
    for (const auto& b : report.bounds) {
      char line[160];
      std::snprintf(line, sizeof line, "  %-5s %-16s %-13s %-11s %s", to_string(b.kind).c_str(),
                    to_string(b.outcome).c_str(), fmt(b.bound, "%.6f").c_str(), fmt(b.alpha, "%.4g").c_str(),
                    b.residual.checked ? "checked" : "unchecked");
      os << line;
      if (b.outcome == Outcome::no_certificate) os << "  (no certificate found at this degree)";
      if (b.vacuous && b.outcome == Outcome::certified) os << "  (vacuous)";
      if (b.grid_restricted) os << "  (grid restricted)";
      os << "\n";
    }
  }
  for (const auto& r : report.competing) {
    os << "  " << to_string(r.kind) << " gronwall " << fmt(r.bounds.gronwall) << ", santoyo "
       << (r.bounds.santoyo ? fmt(*r.bounds.santoyo) : std::string("n/a")) << "\n";
  }
  if (report.estimate) {
    const auto& e = *report.estimate;
    os << "  oracle p_hat " << fmt(e.p_hat) << "  95% CI [" << fmt(e.ci_low) << ", " << fmt(e.ci_high) << "]  ("
       << e.n_success << "/" << e.n_paths << ", h=" << fmt(e.step_h) << ", seed=" << e.seed << ")\n";
    for (const auto& w : e.warnings) os << "  warning: " << w << "\n";
  }
  if (report.fd_value) os << "  finite differences " << fmt(*report.fd_value) << "\n";
  for (const auto& c : report.checks) {
    if (!c.pass) {
      os << "  inconsistent: " << to_string(c.kind) << " bound " << fmt(c.bound) << " vs "
         << (traits(c.kind).upper ? "ci_low " : "ci_high ") << fmt(c.reference) << "\n";
    }
  }
  if (report.verdict != Verdict::not_checked) os << "  verdict " << to_string(report.verdict) << "\n";
  return os.str();
}

}  // namespace reachcert
