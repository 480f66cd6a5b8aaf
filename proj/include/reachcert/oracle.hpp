// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "reachcert/model.hpp"

namespace reachcert::oracle {

/// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Four standard normals via Box-Muller on the Philox block with counter (lo, hi, path) and key seed.
/// Paths draw normal j = m * k + l for step m and channel l from block j / 4, lane j % 4.
std::array<double, 4> gaussian_block(std::uint64_t seed, std::uint64_t path, std::uint32_t lo, std::uint32_t hi);

struct SimConfig {
  double step_h = 1e-3;
  std::uint64_t n_paths = 100000;
  std::uint64_t seed = 1;
  /// Exit when g_X <= boundary_tol, hit when g_S >= -boundary_tol.
  double boundary_tol = 0.0;
  unsigned threads = 1;
};

enum class PathOutcome : std::uint8_t { hit, miss, overflow };

std::string to_string(PathOutcome outcome);

struct PathResult {
  PathOutcome outcome = PathOutcome::miss;
  double stop_time = 0.0;  // time the path was stopped (T when it ran to the end)
  std::vector<double> state;
};

/// One trajectory row: t, x, stopped flag.
struct TrajectoryPoint {
  double t = 0.0;
  std::vector<double> x;
  bool stopped = false;
};

/// Euler-Maruyama path of the stopped process. Deterministic in (cfg.seed, path_index).
/// When `trajectory` is given every step is recorded.
PathResult simulate_path(const SdeModel& model, const ReachQuery& query, const SimConfig& cfg,
                         std::uint64_t path_index, std::vector<TrajectoryPoint>* trajectory = nullptr);

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Two-sided Clopper-Pearson interval at the given confidence level.
Interval clopper_pearson(std::uint64_t successes, std::uint64_t trials, double level = 0.95);

struct McEstimate {
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::uint64_t n_success = 0;
  std::uint64_t n_paths = 0;
  /// Non-finite instant-query paths, left out of n_paths.
  std::uint64_t n_excluded = 0;
  /// Non-finite horizon-query paths, counted as misses.
  std::uint64_t n_overflow = 0;
  double step_h = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  double stderr_estimate() const;
};

McEstimate estimate_probability(const SdeModel& model, const ReachQuery& query, const SimConfig& cfg);

/// Writes `paths` trajectories as CSV with columns path, t, x1..xn, stopped.
void write_trajectories_csv(std::ostream& os, const SdeModel& model, const ReachQuery& query, const SimConfig& cfg,
                            std::uint64_t paths);

/// Crank-Nicolson (with implicit-Euler start-up steps) for the backward equation of the
/// stopped process in one dimension. Returns the value at x0.
/// Throws std::invalid_argument when n != 1, grid < 3, steps < 1 or the sets are not intervals around x0.
double fd_solve_1d(const SdeModel& model, const ReachQuery& query, std::size_t grid = 2001, std::size_t steps = 2000);

}  // namespace reachcert::oracle
