// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "reachcert/poly.hpp"

namespace reachcert {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Autonomous polynomial SDE  dx = b(x) dt + sigma(x) dW  with n states and k noise channels.
struct SdeModel {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<Polynomial> drift;                  // n entries
  std::vector<std::vector<Polynomial>> diffusion;  // n rows of k entries

  /// Throws ValidationError if shapes or variable spaces are inconsistent.
  void check() const;
  bool deterministic() const;
  /// Copy with sigma replaced by zeros.
  SdeModel without_noise() const;
};

enum class SetSense { open, closed };

/// {g > 0} (open) or {g >= 0} (closed); the boundary is taken to be {g = 0}.
struct SemialgebraicSet {
  Polynomial g;
  SetSense sense = SetSense::closed;
};

enum class Membership { inside, boundary_tolerant, outside };

Membership membership(const SemialgebraicSet& set, std::span<const double> point, double boundary_tol);

enum class QueryKind { horizon, instant };

std::string to_string(QueryKind kind);
QueryKind query_kind_from_string(const std::string& s);

/// Axis-aligned box [lo_i, hi_i] used for sampling-based checks.
struct Box {
  std::vector<std::pair<double, double>> bounds;
  std::size_t dim() const { return bounds.size(); }
};

struct ReachQuery {
  SemialgebraicSet domain;  // X = {g_X > 0}
  SemialgebraicSet target;  // Xs = {g_S >= 0}
  double horizon_T = 1.0;
  std::vector<double> x0;
  QueryKind kind = QueryKind::horizon;
  Box bounding_box;

  /// Throws ValidationError when x0 is not in X \ Xs or T is not a positive finite number.
  void check(std::size_t n) const;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::size_t samples = 0;
  std::size_t target_samples = 0;           // points with g_S >= 0 inside the box
  std::size_t target_interior_samples = 0;  // points with g_S > 0 and g_X > 0

  bool ok() const { return errors.empty(); }
};

/// Checks the standing assumptions: model shape, x0 in X \ Xs (authoritative),
/// and, by rejection sampling in the bounding box, evidence that Xs is inside X
/// and (when lower bounds are requested) that Xs has interior points.
ValidationReport validate(const SdeModel& model, const ReachQuery& query, std::size_t samples,
                          bool lower_bound_requested = false, std::uint64_t seed = 20240917);

/// A model file: one SDE together with one reachability query.
struct ProblemSpec {
  SdeModel model;
  ReachQuery query;
};

/// Parses the JSON model document; unknown fields and malformed polynomials are rejected
/// with ValidationError (ParseError for the polynomial text is wrapped).
ProblemSpec problem_from_json_text(const std::string& text);
ProblemSpec load_problem(const std::string& path);
std::string problem_to_json_text(const ProblemSpec& spec);

}  // namespace reachcert
