// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include "reachcert/sdp.hpp"

namespace reachcert::sdp {

namespace {

constexpr const char* kFreeTag = "*reachcert free-split";

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct SdpaEntry {
  std::size_t mat;
  std::size_t blk;  // 1-based
  std::size_t i;    // 1-based
  std::size_t j;
  double value;
};

bool is_number_char(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == 'e' || c == 'E';
}

// Splits a data section into numeric tokens; braces, parentheses and commas are separators.
std::vector<std::string> numeric_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (is_number_char(c)) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double to_double(const std::string& tok) {
  double v = 0.0;
  const char* b = tok.data();
  if (!tok.empty() && tok[0] == '+') ++b;
  auto res = std::from_chars(b, tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw FormatError("sdpa: malformed number '" + tok + "'");
  }
  return v;
}

long to_long(const std::string& tok) {
  const double v = to_double(tok);
  if (v != std::floor(v)) throw FormatError("sdpa: expected an integer, got '" + tok + "'");
  return static_cast<long>(v);
}

}  // namespace

void write_sdpa(std::ostream& os, const SdpInstance& instance) {
  instance.check();
  const std::size_t p = instance.n_free;
  const std::size_t nblk = instance.blocks.size() + (p > 0 ? 1 : 0);
  const std::size_t free_blk = instance.blocks.size() + 1;

  std::vector<SdpaEntry> entries;
  entries.reserve(instance.a.size() + instance.c.size() + 2 * instance.free_a.size() + 2 * p);
  for (const auto& e : instance.c) {
    entries.push_back({0, e.block + 1, std::min(e.i, e.j) + 1, std::max(e.i, e.j) + 1, -e.value});
  }
  for (std::size_t k = 0; k < p && k < instance.free_c.size(); ++k) {
    const double f = instance.free_c[k];
    if (f == 0.0) continue;
    entries.push_back({0, free_blk, k + 1, k + 1, -f});
    entries.push_back({0, free_blk, p + k + 1, p + k + 1, f});
  }
  for (const auto& e : instance.a) {
    entries.push_back({e.row + 1, e.block + 1, std::min(e.i, e.j) + 1, std::max(e.i, e.j) + 1, e.value});
  }
  for (const auto& e : instance.free_a) {
    entries.push_back({e.row + 1, free_blk, e.var + 1, e.var + 1, e.value});
    entries.push_back({e.row + 1, free_blk, p + e.var + 1, p + e.var + 1, -e.value});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const SdpaEntry& a, const SdpaEntry& b) {
    return std::tie(a.mat, a.blk, a.i, a.j) < std::tie(b.mat, b.blk, b.i, b.j);
  });

  os << "* SDPA sparse format written by reachcert\n";
  if (p > 0) os << kFreeTag << ' ' << p << '\n';
  os << instance.rows() << " = mDIM\n";
  os << nblk << " = nBLOCK\n";
  for (std::size_t k = 0; k < instance.blocks.size(); ++k) {
    const auto& spec = instance.blocks[k];
    if (k) os << ' ';
    if (spec.kind == BlockKind::diagonal) os << '-';
    os << spec.size;
  }
  if (p > 0) os << (instance.blocks.empty() ? "" : " ") << '-' << 2 * p;
  os << " = bLOCKsTRUCT\n";
  for (std::size_t i = 0; i < instance.rows(); ++i) os << (i ? " " : "") << num(instance.rhs[i]);
  os << '\n';
  for (const auto& e : entries) {
    os << e.mat << ' ' << e.blk << ' ' << e.i << ' ' << e.j << ' ' << num(e.value) << '\n';
  }
}

std::string write_sdpa(const SdpInstance& instance) {
  std::ostringstream os;
  write_sdpa(os, instance);
  return os.str();
}

SdpInstance read_sdpa(std::istream& is) {
  std::string line;
  std::string data;
  std::size_t p = 0;
  bool header_done = false;
  while (std::getline(is, line)) {
    if (!header_done && (line.empty() || line[0] == '*' || line[0] == '"')) {
      if (line.rfind(kFreeTag, 0) == 0) {
        p = static_cast<std::size_t>(to_long(numeric_tokens(line.substr(std::string(kFreeTag).size())).at(0)));
      }
      continue;
    }
    header_done = true;
    // "= mDIM" style annotations are comments after the numbers.
    if (const auto eq = line.find('='); eq != std::string::npos) line.resize(eq);
    data += line;
    data += '\n';
  }
  const auto tok = numeric_tokens(data);
  std::size_t pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= tok.size()) throw FormatError("sdpa: unexpected end of file");
    return tok[pos++];
  };
  const long m = to_long(next());
  const long nblk = to_long(next());
  if (m < 0 || nblk <= 0) throw FormatError("sdpa: bad mDIM or nBLOCK");
  std::vector<long> sizes;
  for (long k = 0; k < nblk; ++k) sizes.push_back(to_long(next()));

  SdpInstance inst;
  const std::size_t nkeep = p > 0 ? static_cast<std::size_t>(nblk) - 1 : static_cast<std::size_t>(nblk);
  if (p > 0 && (sizes.back() != -static_cast<long>(2 * p))) {
    throw FormatError("sdpa: free-split block does not match the recorded free count");
  }
  for (std::size_t k = 0; k < nkeep; ++k) {
    if (sizes[k] == 0) throw FormatError("sdpa: zero block size");
    inst.add_block(sizes[k] > 0 ? BlockKind::psd : BlockKind::diagonal, static_cast<std::size_t>(std::labs(sizes[k])));
  }
  if (p > 0) inst.add_free(p);
  for (long i = 0; i < m; ++i) inst.add_row(to_double(next()));

  while (pos < tok.size()) {
    const long mat = to_long(next());
    const long blk = to_long(next());
    const long i = to_long(next());
    const long j = to_long(next());
    const double v = to_double(next());
    if (mat < 0 || mat > m || blk < 1 || blk > nblk || i < 1 || j < 1) {
      throw FormatError("sdpa: entry index out of range");
    }
    const auto bk = static_cast<std::size_t>(blk - 1);
    if (p > 0 && bk == nkeep) {
      if (i != j || i > static_cast<long>(2 * p)) throw FormatError("sdpa: bad entry in the free-split block");
      if (i > static_cast<long>(p)) continue;  // mirror of the u+ column
      const auto var = static_cast<std::size_t>(i - 1);
      if (mat == 0) {
        inst.free_c[var] = -v;
      } else {
        inst.free_a.push_back({static_cast<std::size_t>(mat - 1), var, v});
      }
      continue;
    }
    MatrixEntry e{mat == 0 ? 0 : static_cast<std::size_t>(mat - 1), bk, static_cast<std::size_t>(i - 1),
                  static_cast<std::size_t>(j - 1), mat == 0 ? -v : v};
    (mat == 0 ? inst.c : inst.a).push_back(e);
  }
  inst.canonicalize();
  inst.check();
  return inst;
}

SdpInstance read_sdpa_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("sdpa: cannot open '" + path + "'");
  return read_sdpa(in);
}

// ---------------------------------------------------------------------------
// Solution files

namespace {

void write_block(std::ostream& os, const BlockSpec& spec, const Eigen::MatrixXd& mat) {
  if (spec.kind == BlockKind::diagonal) {
    os << "{";
    for (std::size_t i = 0; i < spec.size; ++i) os << (i ? "," : "") << num(mat(static_cast<Eigen::Index>(i), 0));
    os << "}\n";
    return;
  }
  os << "{\n";
  for (std::size_t i = 0; i < spec.size; ++i) {
    os << "{";
    for (std::size_t j = 0; j < spec.size; ++j) {
      os << (j ? "," : "") << num(mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    os << "}" << (i + 1 < spec.size ? "," : "") << "\n";
  }
  os << "}\n";
}

std::string phase_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal:
      return "pdOPT";
    case SolveStatus::infeasible:
      return "pUNBD";
    case SolveStatus::unbounded:
      return "dUNBD";
    case SolveStatus::numerical_trouble:
      break;
  }
  return "noINFO";
}

SolveStatus phase_status(const std::string& phase) {
  if (phase == "pdOPT") return SolveStatus::optimal;
  // SDPA's primal is the dual of our standard form.
  if (phase == "pUNBD" || phase == "pFEAS_dINF") return SolveStatus::infeasible;
  if (phase == "dUNBD" || phase == "pINF_dFEAS") return SolveStatus::unbounded;
  return SolveStatus::numerical_trouble;
}

std::vector<BlockSpec> sdpa_blocks(const SdpInstance& inst) {
  auto blocks = inst.blocks;
  if (inst.n_free > 0) blocks.push_back({BlockKind::diagonal, 2 * inst.n_free});
  return blocks;
}

// Objectives and relative residuals of a solution, recomputed from the instance data.
void evaluate_solution(const SdpInstance& inst, Solution& sol) {
  const std::size_t m = inst.rows();
  Eigen::VectorXd ax = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  auto xval = [&](const MatrixEntry& e) {
    const auto& x = sol.x[e.block];
    if (inst.blocks[e.block].kind == BlockKind::diagonal) return x(static_cast<Eigen::Index>(e.i), 0);
    const double v = x(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j));
    return e.i == e.j ? v : 2.0 * v;
  };
  for (const auto& e : inst.a) ax[static_cast<Eigen::Index>(e.row)] += e.value * xval(e);
  for (const auto& e : inst.free_a) ax[static_cast<Eigen::Index>(e.row)] += e.value * sol.u[static_cast<Eigen::Index>(e.var)];
  double pobj = 0.0;
  for (const auto& e : inst.c) pobj += e.value * xval(e);
  for (std::size_t k = 0; k < inst.free_c.size(); ++k) pobj += inst.free_c[k] * sol.u[static_cast<Eigen::Index>(k)];
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(inst.rhs.data(), static_cast<Eigen::Index>(m));
  sol.primal_objective = pobj;
  sol.dual_objective = b.dot(sol.y);
  sol.primal_residual = (b - ax).norm() / (1.0 + b.norm());
  sol.gap = std::abs(sol.primal_objective - sol.dual_objective) /
            (1.0 + std::abs(sol.primal_objective) + std::abs(sol.dual_objective));
}

}  // namespace

void write_sdpa_solution(std::ostream& os, const SdpInstance& instance, const Solution& solution) {
  const auto blocks = sdpa_blocks(instance);
  const std::size_t p = instance.n_free;
  os << "phase.value  = " << phase_name(solution.status) << "\n";
  os << "   Iteration = " << solution.iterations << "\n";
  os << "objValPrimal = " << num(-solution.dual_objective) << "\n";
  os << "objValDual   = " << num(-solution.primal_objective) << "\n";
  os << "xVec = \n{";
  for (Eigen::Index i = 0; i < solution.y.size(); ++i) os << (i ? "," : "") << num(-solution.y[i]);
  os << "}\n";
  auto free_block = [&](bool primal) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * p), 1);
    for (std::size_t k = 0; k < p; ++k) {
      const double u = solution.u[static_cast<Eigen::Index>(k)];
      if (primal) {
        d(static_cast<Eigen::Index>(k), 0) = std::max(u, 0.0);
        d(static_cast<Eigen::Index>(p + k), 0) = std::max(-u, 0.0);
      }
    }
    return d;
  };
  os << "xMat = \n{\n";
  for (std::size_t k = 0; k < instance.blocks.size(); ++k) write_block(os, blocks[k], solution.z[k]);
  if (p > 0) write_block(os, blocks.back(), free_block(false));
  os << "}\n";
  os << "yMat = \n{\n";
  for (std::size_t k = 0; k < instance.blocks.size(); ++k) write_block(os, blocks[k], solution.x[k]);
  if (p > 0) write_block(os, blocks.back(), free_block(true));
  os << "}\n";
}

Solution read_sdpa_solution(std::istream& is, const SdpInstance& instance) {
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  Solution sol;

  const auto phase_at = text.find("phase.value");
  if (phase_at != std::string::npos) {
    std::istringstream ps(text.substr(phase_at));
    std::string key, eq, phase;
    ps >> key >> eq >> phase;
    sol.status = phase_status(phase);
  }
  auto section = [&](const std::string& key) {
    const auto at = text.find(key);
    if (at == std::string::npos) throw FormatError("sdpa solution: missing section " + key);
    std::size_t end = text.size();
    for (const char* other : {"xVec", "xMat", "yMat"}) {
      const auto o = text.find(other, at + key.size());
      if (o != std::string::npos) end = std::min(end, o);
    }
    auto body = text.substr(at + key.size(), end - at - key.size());
    // Keep only the brace-delimited payload; trailing SDPA log lines may contain numbers.
    const auto open = body.find('{');
    if (open == std::string::npos) throw FormatError("sdpa solution: empty section " + key);
    int depth = 0;
    std::size_t close = open;
    for (; close < body.size(); ++close) {
      if (body[close] == '{') ++depth;
      if (body[close] == '}' && --depth == 0) break;
    }
    return numeric_tokens(body.substr(open, close - open + 1));
  };

  const std::size_t m = instance.rows();
  const auto xvec = section("xVec");
  if (xvec.size() < m) throw FormatError("sdpa solution: xVec too short");
  sol.y.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) sol.y[static_cast<Eigen::Index>(i)] = -to_double(xvec[i]);

  const auto blocks = sdpa_blocks(instance);
  auto read_blocks = [&](const std::vector<std::string>& toks) {
    std::vector<Eigen::MatrixXd> out;
    std::size_t pos = 0;
    for (const auto& spec : blocks) {
      const auto s = static_cast<Eigen::Index>(spec.size);
      if (spec.kind == BlockKind::diagonal) {
        Eigen::MatrixXd d(s, 1);
        for (Eigen::Index i = 0; i < s; ++i) d(i, 0) = to_double(toks.at(pos++));
        out.push_back(std::move(d));
      } else {
        Eigen::MatrixXd d(s, s);
        for (Eigen::Index i = 0; i < s; ++i) {
          for (Eigen::Index j = 0; j < s; ++j) d(i, j) = to_double(toks.at(pos++));
        }
        out.push_back(0.5 * (d + d.transpose()));
      }
    }
    return out;
  };
  try {
    auto zmats = read_blocks(section("xMat"));
    auto xmats = read_blocks(section("yMat"));
    const std::size_t p = instance.n_free;
    sol.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    if (p > 0) {
      const auto& d = xmats.back();
      for (std::size_t k = 0; k < p; ++k) {
        sol.u[static_cast<Eigen::Index>(k)] = d(static_cast<Eigen::Index>(k), 0) - d(static_cast<Eigen::Index>(p + k), 0);
      }
      xmats.pop_back();
      zmats.pop_back();
    }
    sol.x = std::move(xmats);
    sol.z = std::move(zmats);
  } catch (const std::out_of_range&) {
    throw FormatError("sdpa solution: matrix section too short");
  }
  evaluate_solution(instance, sol);
  sol.message = "parsed SDPA solution file";
  return sol;
}

Solution solve_file_exchange(const SdpInstance& instance, const FileExchangeOptions& files,
                             const SolverOptions& options) {
  namespace fs = std::filesystem;
  fs::create_directories(files.directory);
  const fs::path problem = fs::path(files.directory) / (files.stem + ".dat-s");
  const fs::path solution = fs::path(files.directory) / (files.stem + ".out");
  {
    std::ofstream out(problem);
    if (!out) throw FormatError("sdpa: cannot write '" + problem.string() + "'");
    write_sdpa(out, instance);
  }
  if (files.command.empty()) {
    const SdpInstance reread = read_sdpa_file(problem.string());
    const Solution inner = solve_interior_point(reread, options);
    std::ofstream out(solution);
    if (!out) throw FormatError("sdpa: cannot write '" + solution.string() + "'");
    write_sdpa_solution(out, reread, inner);
  } else {
    const std::string cmd = files.command + " '" + problem.string() + "' '" + solution.string() + "'";
    if (std::system(cmd.c_str()) != 0) {
      Solution failed;
      failed.message = "external solver command failed: " + cmd;
      return failed;
    }
  }
  std::ifstream in(solution);
  if (!in) throw FormatError("sdpa: solver produced no solution file '" + solution.string() + "'");
  return read_sdpa_solution(in, instance);
}

}  // namespace reachcert::sdp
