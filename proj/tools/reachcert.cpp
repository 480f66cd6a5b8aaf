// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0
//
// reachcert: certify, estimate and compare reachability probabilities of polynomial SDEs.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reachcert/certificates.hpp"
#include "reachcert/model.hpp"
#include "reachcert/oracle.hpp"
#include "reachcert/report.hpp"
#include "reachcert/sdp.hpp"

namespace {

using namespace reachcert;

constexpr int kExitOk = 0;
constexpr int kExitVerdictFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string model_file;
  std::string kinds = "all";
  std::uint32_t deg_v = 4;
  std::uint32_t deg_w = 4;
  std::uint32_t deg_mult = 0;  // 0: fill the degree budget
  bool drop_w = false;
  std::string alpha_grid;
  std::string backend = "inprocess";
  std::string sdpa_command;
  double margin = 1e-9;
  double epsilon = 1e-6;
  std::size_t samples = 2000;
  std::string query;
  double horizon = 0.0;  // 0: keep the model file value
  std::uint64_t paths = 100000;
  double step = 1e-3;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t fd_grid = 2001;
  std::size_t fd_steps = 2000;
  bool no_fd = false;
  std::string trajectories;
  std::uint64_t trajectory_paths = 20;
  std::string out;
  bool no_timings = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) parts.push_back(item.substr(b, e - b + 1));
  }
  return parts;
}

std::vector<CertificateKind> parse_kinds(const std::string& text, QueryKind query) {
  std::vector<CertificateKind> kinds;
  if (text == "all") {
    for (auto k : kAllCertificateKinds) {
      if (traits(k).query == query) kinds.push_back(k);
    }
    return kinds;
  }
  for (const auto& name : split(text, ',')) kinds.push_back(certificate_kind_from_string(name));
  if (kinds.empty()) throw UsageError("--kind: no kinds given");
  return kinds;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  for (const auto& item : split(text, ',')) {
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !std::isfinite(a)) throw UsageError("--alpha-grid: bad value '" + item + "'");
    grid.push_back(a);
  }
  if (!text.empty() && grid.empty()) throw UsageError("--alpha-grid: empty list");
  return grid;
}

sos::Backend parse_backend(const Options& o) {
  sos::Backend backend;
  if (o.backend == "inprocess") return backend;
  if (o.backend.rfind("sdpa:", 0) == 0 && o.backend.size() > 5) {
    backend.kind = sos::Backend::Kind::file_exchange;
    backend.files.directory = o.backend.substr(5);
    backend.files.command = o.sdpa_command;
    return backend;
  }
  throw UsageError("--backend must be 'inprocess' or 'sdpa:<dir>'");
}

ProblemSpec load(const Options& o) {
  ProblemSpec spec = load_problem(o.model_file);
  if (!o.query.empty()) spec.query.kind = query_kind_from_string(o.query);
  if (o.horizon != 0.0) spec.query.horizon_T = o.horizon;
  return spec;
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void validate_or_throw(RunReport& report, bool lower) {
  report.validation = validate(report.problem.model, report.problem.query, 4000, lower);
  if (!report.validation.ok()) {
    std::string msg = "validation failed";
    for (const auto& e : report.validation.errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
}

void run_certify(RunReport& report, const Options& o, Stopwatch& clock) {
  const auto& q = report.problem.query;
  const auto kinds = parse_kinds(o.kinds, q.kind);
  for (auto k : kinds) {
    if (traits(k).query != q.kind) {
      throw KindMismatchError(to_string(k) + " bounds a " + to_string(traits(k).query) + " query, the model asks a " +
                              to_string(q.kind) + " query");
    }
  }
  bool lower = false;
  for (auto k : kinds) lower = lower || !traits(k).upper;
  validate_or_throw(report, lower);

  auto& c = report.certify;
  c.degrees.v = o.deg_v;
  c.degrees.w = o.deg_w;
  if (o.deg_mult > 0) c.degrees.multiplier = o.deg_mult;
  c.degrees.drop_w = o.drop_w;
  c.alpha_grid = parse_grid(o.alpha_grid);
  c.backend = parse_backend(o);
  c.epsilon = o.epsilon;
  c.sampling.samples = o.samples;
  c.sampling.margin = o.margin;
  report.timings.emplace_back("setup", clock.lap());

  for (auto k : kinds) {
    report.bounds.push_back(certify(k, report.problem.model, q, c));
    report.timings.emplace_back("certify_" + to_string(k), clock.lap());
  }
  report.competing = competing_table(report.bounds);
}

void run_estimate(RunReport& report, const Options& o, Stopwatch& clock) {
  if (o.paths == 0) throw UsageError("--paths must be positive");
  if (!(o.step > 0.0)) throw UsageError("--step must be positive");
  oracle::SimConfig cfg;
  cfg.n_paths = o.paths;
  cfg.step_h = o.step;
  cfg.seed = o.seed;
  cfg.threads = o.threads == 0 ? 1 : o.threads;
  report.sim = cfg;
  report.estimate = oracle::estimate_probability(report.problem.model, report.problem.query, cfg);
  report.timings.emplace_back("simulate", clock.lap());

  if (!o.trajectories.empty()) {
    std::ofstream csv(o.trajectories);
    if (!csv) throw UsageError("cannot write '" + o.trajectories + "'");
    oracle::write_trajectories_csv(csv, report.problem.model, report.problem.query, cfg, o.trajectory_paths);
    report.timings.emplace_back("trajectories", clock.lap());
  }

  if (report.problem.model.n == 1 && !o.no_fd) {
    try {
      report.fd_value = oracle::fd_solve_1d(report.problem.model, report.problem.query, o.fd_grid, o.fd_steps);
      report.fd_grid = o.fd_grid;
      report.fd_steps = o.fd_steps;
    } catch (const std::invalid_argument& e) {
      report.estimate->warnings.push_back(std::string("finite differences skipped: ") + e.what());
    }
    report.timings.emplace_back("finite_differences", clock.lap());
  }
}

int emit(const RunReport& report, const Options& o) {
  const std::string json = report_to_json_text(report, !o.no_timings);
  const std::string summary = render_summary(report);
  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot write '" << o.out << "'\n";
      return kExitUsage;
    }
    f << json;
    std::cout << summary;
  } else {
    std::cout << json;
    std::cerr << summary;
  }
  for (const auto& b : report.bounds) {
    if (b.outcome == Outcome::solver_failure) return kExitSolver;
  }
  if (report.verdict == Verdict::fail) return kExitVerdictFail;
  return kExitOk;
}

int run_command(const std::string& command, const Options& o) {
  Stopwatch clock;
  RunReport report;
  report.command = command;
  report.model_file = o.model_file;
  report.problem = load(o);
  if (command == "certify" || command == "compare") run_certify(report, o, clock);
  if (command == "estimate") {
    validate_or_throw(report, false);
    report.timings.emplace_back("setup", clock.lap());
  }
  if (command == "estimate" || command == "compare") run_estimate(report, o, clock);
  if (command == "compare") evaluate_consistency(report);
  return emit(report, o);
}

int run_sdp_solve(const std::string& problem, const std::string& solution) {
  const auto instance = sdp::read_sdpa_file(problem);
  const auto sol = sdp::solve_interior_point(instance);
  std::ofstream out(solution);
  if (!out) throw UsageError("cannot write '" + solution + "'");
  sdp::write_sdpa_solution(out, instance, sol);
  return kExitOk;
}

void add_certify_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--kind", o.kinds, "Comma-separated certificate kinds (HU1..IL3) or 'all' for the query's kinds")
      ->capture_default_str();
  cmd->add_option("--deg-v", o.deg_v, "Degree of v")->capture_default_str();
  cmd->add_option("--deg-w", o.deg_w, "Degree of the auxiliary w (lower kinds)")->capture_default_str();
  cmd->add_option("--deg-mult", o.deg_mult, "Multiplier degree (0 fills the degree budget)")->capture_default_str();
  cmd->add_flag("--drop-w", o.drop_w, "Force w = 0 in the lower kinds");
  cmd->add_option("--alpha-grid", o.alpha_grid, "Comma-separated alpha values (default {0, +-2^j/T, j=-6..3})");
  cmd->add_option("--backend", o.backend, "SDP backend: inprocess or sdpa:<dir>")->capture_default_str();
  cmd->add_option("--sdpa-command", o.sdpa_command,
                  "External solver run as '<cmd> <problem> <solution>' (default: built-in solver via files)");
  cmd->add_option("--margin", o.margin, "Residual-check margin")->capture_default_str();
  cmd->add_option("--epsilon", o.epsilon, "Strictness tightening of every SOS constraint")->capture_default_str();
  cmd->add_option("--samples", o.samples, "Residual-check samples per region")->capture_default_str();
}

void add_oracle_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--paths", o.paths, "Monte-Carlo paths")->capture_default_str();
  cmd->add_option("--step", o.step, "Euler-Maruyama step")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  cmd->add_option("--threads", o.threads, "Worker threads (results do not depend on it)")->capture_default_str();
  cmd->add_option("--fd-grid", o.fd_grid, "Finite-difference grid points (1-D models)")->capture_default_str();
  cmd->add_option("--fd-steps", o.fd_steps, "Finite-difference time steps")->capture_default_str();
  cmd->add_flag("--no-fd", o.no_fd, "Skip the finite-difference solve");
  cmd->add_option("--trajectories", o.trajectories, "Write sample trajectories to this CSV file");
  cmd->add_option("--trajectory-paths", o.trajectory_paths, "Number of trajectories written")->capture_default_str();
}

void add_common_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("model", o.model_file, "Model file (JSON)")->required();
  cmd->add_option("--query", o.query, "Override the query kind: horizon or instant");
  cmd->add_option("--T", o.horizon, "Override the horizon T");
  cmd->add_option("--out", o.out, "Write the JSON report here (summary goes to stdout)");
  cmd->add_flag("--no-timings", o.no_timings, "Leave wall-clock timings out of the report");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachability probability bounds for polynomial SDEs"};
  app.require_subcommand(1);
  Options o;

  auto* certify_cmd = app.add_subcommand("certify", "Search for certificates and report the bounds");
  add_common_flags(certify_cmd, o);
  add_certify_flags(certify_cmd, o);

  auto* estimate_cmd = app.add_subcommand("estimate", "Monte-Carlo (and 1-D finite-difference) estimate");
  add_common_flags(estimate_cmd, o);
  add_oracle_flags(estimate_cmd, o);

  auto* compare_cmd = app.add_subcommand("compare", "Certify, estimate and check consistency");
  add_common_flags(compare_cmd, o);
  add_certify_flags(compare_cmd, o);
  add_oracle_flags(compare_cmd, o);

  std::string sdp_problem, sdp_solution;
  auto* sdp_cmd = app.add_subcommand("sdp-solve", "Solve an SDPA problem file with the built-in solver");
  sdp_cmd->add_option("problem", sdp_problem, "SDPA sparse problem file")->required();
  sdp_cmd->add_option("solution", sdp_solution, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sdp_cmd) return run_sdp_solve(sdp_problem, sdp_solution);
    for (auto* cmd : {certify_cmd, estimate_cmd, compare_cmd}) {
      if (*cmd) return run_command(cmd->get_name(), o);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sdp::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    // KindMismatchError, DegreeError, DimensionError and unknown kind names.
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitUsage;
}
