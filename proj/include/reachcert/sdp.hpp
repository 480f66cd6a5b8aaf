// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reachcert::sdp {

// Standard form used throughout:
//
//   minimize    <C, X> + f'u
//   subject to  <A_i, X> + (B u)_i = b_i      i = 0..m-1
//               X = diag(X_1, ..., X_K) with every X_k psd (or a nonnegative vector
//               for diagonal blocks), u free.
//
// The dual is   maximize b'y  s.t.  Z = C - sum_i y_i A_i psd,  B'y = f.

enum class BlockKind : std::uint8_t { psd, diagonal };

struct BlockSpec {
  BlockKind kind = BlockKind::psd;
  std::size_t size = 0;
  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

/// One entry of a symmetric block coefficient; stored for the upper triangle only (i <= j).
struct MatrixEntry {
  std::size_t row = 0;  // constraint index; ignored for objective entries
  std::size_t block = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;
  friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
};

struct FreeEntry {
  std::size_t row = 0;
  std::size_t var = 0;
  double value = 0.0;
  friend bool operator==(const FreeEntry&, const FreeEntry&) = default;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SdpInstance {
  std::vector<BlockSpec> blocks;
  std::size_t n_free = 0;
  std::vector<double> rhs;            // b
  std::vector<MatrixEntry> a;         // A_i entries
  std::vector<FreeEntry> free_a;      // B entries
  std::vector<MatrixEntry> c;         // objective on blocks
  std::vector<double> free_c;         // f (size n_free, or empty for zero)

  std::size_t rows() const { return rhs.size(); }
  std::size_t add_block(BlockKind kind, std::size_t size);
  std::size_t add_free(std::size_t count);
  std::size_t add_row(double rhs_value);

  /// Moves lower-triangle entries up, sorts, merges duplicates, drops exact zeros.
  void canonicalize();
  /// Throws FormatError on out-of-range indices or off-diagonal entries in diagonal blocks.
  void check() const;

  friend bool operator==(const SdpInstance&, const SdpInstance&) = default;
};

enum class SolveStatus : std::uint8_t { optimal, infeasible, unbounded, numerical_trouble };

std::string to_string(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::numerical_trouble;
  std::vector<Eigen::MatrixXd> x;  // per block; diagonal blocks are size x 1 columns
  Eigen::VectorXd u;
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> z;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;  // relative
  double dual_residual = 0.0;    // relative
  double gap = 0.0;              // relative
  int iterations = 0;
  std::string message;
};

struct SolverOptions {
  int max_iterations = 150;
  double feasibility_tol = 1e-9;
  double gap_tol = 1e-8;
  // Accepted when the iteration stalls before reaching the strict tolerances.
  double relaxed_tol = 1e-6;
  // Failing that, a feasible iterate (within relaxed_tol) with at most this gap.
  double stalled_gap_tol = 1e-3;
  double infeasibility_tol = 1e-8;
  bool verbose = false;
};

/// Primal-dual interior-point method (HKM search direction, Mehrotra predictor-corrector).
Solution solve_interior_point(const SdpInstance& instance, const SolverOptions& options = {});

// SDPA sparse format. The instance is written as the SDPA dual problem
//   max F0 . Y  s.t.  F_i . Y = c_i,  Y psd,
// with Y = diag(X, u+, u-), F_i = A_i (+) diag(B_i, -B_i), F0 = -(C (+) diag(f, -f)), c = b.
// A comment line records the free split so that reading restores the free variables.

void write_sdpa(std::ostream& os, const SdpInstance& instance);
std::string write_sdpa(const SdpInstance& instance);
SdpInstance read_sdpa(std::istream& is);
SdpInstance read_sdpa_file(const std::string& path);

/// Solution file in the SDPA output layout (objValPrimal, xVec, xMat, yMat, phase.value).
void write_sdpa_solution(std::ostream& os, const SdpInstance& instance, const Solution& solution);
/// Parses an SDPA output file for `instance` (as it would be written by write_sdpa).
Solution read_sdpa_solution(std::istream& is, const SdpInstance& instance);

struct FileExchangeOptions {
  std::string directory;
  /// External solver invoked as `command <problem> <solution>`; empty runs the
  /// built-in solver on the re-read file instead.
  std::string command;
  std::string stem = "problem";
};

/// Writes the instance in SDPA format, solves it out of process (or in-process from the
/// file), and parses the solution file back.
Solution solve_file_exchange(const SdpInstance& instance, const FileExchangeOptions& files,
                             const SolverOptions& options = {});

}  // namespace reachcert::sdp
