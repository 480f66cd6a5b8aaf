// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "reachcert/model.hpp"
#include "reachcert/poly.hpp"

namespace reachcert {

/// Generator of the SDE applied to v, in the interior (`full`) and on the
/// stopping boundaries of a stopped process (`time_only` = dv/dt).
struct GeneratorResult {
  Polynomial full;
  Polynomial time_only;

  /// grad(v) . b + 1/2 tr(sigma^T Hess(v) sigma)
  Polynomial spatial() const { return full - time_only; }
};

/// Lv = dv/dt + sum_i dv/dx_i b_i + 1/2 sum_l sigma_{:l}^T Hess(v) sigma_{:l}.
/// Throws DimensionError when v is not a polynomial over the model's states.
GeneratorResult apply_generator(const Polynomial& v, const SdeModel& model);

}  // namespace reachcert
