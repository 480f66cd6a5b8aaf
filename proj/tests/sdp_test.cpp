// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "reachcert/sdp.hpp"

namespace reachcert::sdp {
namespace {

// min <C, X> s.t. tr(X) = 1, X psd  has optimum lambda_min(C).
SdpInstance min_eigenvalue_problem(const Eigen::MatrixXd& c) {
  SdpInstance inst;
  const auto n = static_cast<std::size_t>(c.rows());
  const auto blk = inst.add_block(BlockKind::psd, n);
  const auto row = inst.add_row(1.0);
  for (std::size_t i = 0; i < n; ++i) {
    inst.a.push_back({row, blk, i, i, 1.0});
    for (std::size_t j = i; j < n; ++j) {
      inst.c.push_back({0, blk, i, j, c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    }
  }
  inst.canonicalize();
  return inst;
}

TEST(InteriorPoint, MinimumEigenvalue) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int n : {1, 2, 5, 12}) {
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) c(i, j) = c(j, i) = g(rng);
    }
    const double expected = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues().minCoeff();
    const Solution s = solve_interior_point(min_eigenvalue_problem(c));
    ASSERT_EQ(s.status, SolveStatus::optimal) << s.message;
    EXPECT_NEAR(s.primal_objective, expected, 1e-7);
    EXPECT_NEAR(s.dual_objective, expected, 1e-7);
  }
}

TEST(InteriorPoint, FreeVariablesAndDiagonalBlocks) {
  // min -u + 2 d  s.t.  X00 + u = 1,  X01 + d = 0.5 (d >= 0 diagonal), X psd 2x2.
  SdpInstance inst;
  const auto x = inst.add_block(BlockKind::psd, 2);
  const auto d = inst.add_block(BlockKind::diagonal, 1);
  const auto u = inst.add_free(1);
  const auto r0 = inst.add_row(1.0);
  const auto r1 = inst.add_row(0.5);
  inst.a.push_back({r0, x, 0, 0, 1.0});
  inst.free_a.push_back({r0, u, 1.0});
  inst.a.push_back({r1, x, 0, 1, 0.5});  // <A, X> = X01 for the symmetric pair
  inst.a.push_back({r1, d, 0, 0, 1.0});
  inst.free_c[u] = -1.0;
  inst.c.push_back({0, d, 0, 0, 2.0});
  inst.canonicalize();
  // Optimum: d = 0, X01 = 0.5, X00 = 0.5^2 / X11 -> 0 as X11 grows; value -> -1 (not attained).
  const Solution s = solve_interior_point(inst);
  ASSERT_EQ(s.status, SolveStatus::optimal) << s.message;
  EXPECT_NEAR(s.primal_objective, -1.0, 1e-5);
}

TEST(InteriorPoint, DetectsInfeasibility) {
  SdpInstance inst;
  const auto x = inst.add_block(BlockKind::psd, 2);
  const auto r = inst.add_row(-1.0);
  inst.a.push_back({r, x, 0, 0, 1.0});
  inst.a.push_back({r, x, 1, 1, 1.0});
  EXPECT_EQ(solve_interior_point(inst).status, SolveStatus::infeasible);
}

TEST(InteriorPoint, DetectsUnboundedness) {
  SdpInstance inst;
  const auto x = inst.add_block(BlockKind::psd, 1);
  const auto u = inst.add_free(1);
  const auto r = inst.add_row(0.0);
  inst.a.push_back({r, x, 0, 0, 1.0});
  inst.free_a.push_back({r, u, -1.0});
  inst.free_c[u] = -1.0;  // min -u with u = X00 >= 0 unbounded below
  EXPECT_EQ(solve_interior_point(inst).status, SolveStatus::unbounded);
}

SdpInstance two_block_instance() {
  SdpInstance inst;
  const auto a = inst.add_block(BlockKind::psd, 3);
  const auto b = inst.add_block(BlockKind::diagonal, 2);
  const auto u = inst.add_free(2);
  for (int r = 0; r < 4; ++r) inst.add_row(0.25 * (r + 1));
  inst.a = {{0, a, 0, 0, 1.0}, {0, a, 1, 2, -0.5}, {1, a, 2, 2, 3.0}, {1, b, 1, 1, 1.0},
            {2, a, 0, 1, 0.1}, {3, b, 0, 0, 2.0}, {3, a, 1, 1, 1e-3}};
  inst.free_a = {{0, u, 1.0}, {2, u + 1, -2.0}};
  inst.c = {{0, a, 0, 0, 1.0}, {0, a, 2, 2, 1.0}, {0, b, 0, 0, 0.5}};
  inst.free_c = {0.0, 1.0 / 3.0};
  inst.canonicalize();
  return inst;
}

TEST(Sdpa, RoundTripIsIdentity) {
  const SdpInstance inst = two_block_instance();
  const std::string text = write_sdpa(inst);
  std::istringstream in(text);
  const SdpInstance back = read_sdpa(in);
  EXPECT_EQ(back, inst);
  EXPECT_EQ(write_sdpa(back), text);
}

TEST(Sdpa, ReadsForeignLayout) {
  const std::string text =
      "\"a foreign file\"\n2 =mdim\n1 =nblock\n{2}\n{1.0, 2.0}\n"
      "0 1 1 1 -1.0\n1 1 1 1 1.0\n2 1 2 1 1.0\n";
  std::istringstream in(text);
  const SdpInstance inst = read_sdpa(in);
  ASSERT_EQ(inst.rows(), 2u);
  ASSERT_EQ(inst.blocks.size(), 1u);
  EXPECT_EQ(inst.n_free, 0u);
  ASSERT_EQ(inst.a.size(), 2u);
  EXPECT_EQ(inst.a[1].i, 0u);  // lower-triangle entry moved up
  EXPECT_EQ(inst.a[1].j, 1u);
  EXPECT_EQ(inst.c[0].value, 1.0);
}

TEST(Sdpa, RejectsMalformed) {
  std::istringstream a("1\n1\n2\n1.0\n1 1 3 1 1.0\n");
  EXPECT_THROW(read_sdpa(a), FormatError);
  std::istringstream b("1\n1\n2\n");
  EXPECT_THROW(read_sdpa(b), FormatError);
}

TEST(Sdpa, FileExchangeMatchesInProcess) {
  Eigen::MatrixXd c(3, 3);
  c << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  SdpInstance inst = min_eigenvalue_problem(c);
  const auto u = inst.add_free(1);
  const auto r = inst.add_row(0.0);
  inst.a.push_back({r, 0, 0, 0, 1.0});
  inst.free_a.push_back({r, u, -1.0});  // u = X00, reported through the free split
  inst.canonicalize();
  const auto dir = std::filesystem::temp_directory_path() / "reachcert_sdp_test";
  const Solution direct = solve_interior_point(inst);
  const Solution viafile = solve_file_exchange(inst, {dir.string(), "", "p"});
  ASSERT_EQ(viafile.status, SolveStatus::optimal);
  EXPECT_NEAR(viafile.primal_objective, direct.primal_objective, 1e-12);
  EXPECT_NEAR(viafile.dual_objective, direct.dual_objective, 1e-12);
  EXPECT_NEAR(viafile.u[0], direct.x[0](0, 0), 1e-7);
  EXPECT_TRUE(std::filesystem::exists(dir / "p.dat-s"));
  EXPECT_TRUE(std::filesystem::exists(dir / "p.out"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace reachcert::sdp
