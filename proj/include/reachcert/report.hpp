// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reachcert/certificates.hpp"
#include "reachcert/model.hpp"
#include "reachcert/oracle.hpp"

namespace reachcert {

/// One certified bound against the Monte-Carlo interval.
struct ConsistencyCheck {
  CertificateKind kind = CertificateKind::HU1;
  double bound = 0.0;
  double reference = 0.0;  // ci_low for upper kinds, ci_high for lower kinds
  bool pass = true;
};

enum class Verdict : std::uint8_t { ok, fail, not_checked };

std::string to_string(Verdict verdict);

struct CompetingRow {
  CertificateKind kind = CertificateKind::HU2;
  double v0 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double T = 1.0;
  CompetingBounds bounds;
};

struct RunReport {
  std::string command;
  std::string model_file;
  ProblemSpec problem;
  ValidationReport validation;

  CertifyOptions certify;
  std::vector<BoundReport> bounds;
  std::vector<CompetingRow> competing;

  std::optional<oracle::SimConfig> sim;
  std::optional<oracle::McEstimate> estimate;
  std::optional<double> fd_value;
  std::size_t fd_grid = 0;
  std::size_t fd_steps = 0;

  std::vector<ConsistencyCheck> checks;
  Verdict verdict = Verdict::not_checked;

  /// Wall-clock seconds per stage; the only nondeterministic part of the report.
  std::vector<std::pair<std::string, double>> timings;
};

/// Fills checks and verdict: OK iff every certified upper bound is >= ci_low and every
/// certified lower bound is <= ci_high.
void evaluate_consistency(RunReport& report);

/// Rows for the certified HU2/HU3 reports (the kinds the prior-work formula applies to).
std::vector<CompetingRow> competing_table(const std::vector<BoundReport>& bounds);

/// Pretty-printed JSON; identical inputs give identical text apart from "timings".
std::string report_to_json_text(const RunReport& report, bool include_timings = true);

/// Plain-text table for terminals.
std::string render_summary(const RunReport& report);

}  // namespace reachcert
