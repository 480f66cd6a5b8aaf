// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include "reachcert/generator.hpp"

#include <string>
#include <vector>

namespace reachcert {

GeneratorResult apply_generator(const Polynomial& v, const SdeModel& model) {
  if (v.nvars() != model.n) {
    throw DimensionError("apply_generator: v has nvars=" + std::to_string(v.nvars()) + " but the model has n=" +
                         std::to_string(model.n));
  }
  const std::size_t n = model.n;
  GeneratorResult out;
  out.time_only = differentiate(v, kTime);
  out.full = out.time_only;

  std::vector<Polynomial> grad;
  grad.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    grad.push_back(differentiate(v, static_cast<VarId>(i)));
    out.full += grad[i] * model.drift[i];
  }

  // Diffusion term column by column: 1/2 sum_l sum_{i,j} s_il s_jl d2v/dxi dxj.
  std::vector<std::vector<Polynomial>> hess(n);
  auto hessian = [&](std::size_t i, std::size_t j) -> const Polynomial& {
    if (i > j) std::swap(i, j);
    auto& row = hess[i];
    if (row.empty()) {
      row.reserve(n);
      for (std::size_t c = 0; c < n; ++c) {
        row.push_back(c < i ? Polynomial(n, v.has_time()) : differentiate(grad[i], static_cast<VarId>(c)));
      }
    }
    return row[j];
  };
  for (std::size_t l = 0; l < model.k; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      const Polynomial& si = model.diffusion[i][l];
      if (si.is_zero()) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const Polynomial& sj = model.diffusion[j][l];
        if (sj.is_zero()) continue;
        const Polynomial& h = hessian(i, j);
        if (h.is_zero()) continue;
        out.full += 0.5 * (si * sj * h);
      }
    }
  }
  return out;
}

}  // namespace reachcert
