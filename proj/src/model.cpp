// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include "reachcert/model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace reachcert {

using nlohmann::json;

void SdeModel::check() const {
  if (n == 0) throw ValidationError("model: state dimension n must be positive");
  if (drift.size() != n) {
    throw ValidationError("model: drift has " + std::to_string(drift.size()) + " entries, expected n=" +
                          std::to_string(n));
  }
  if (diffusion.size() != n) {
    throw ValidationError("model: diffusion has " + std::to_string(diffusion.size()) + " rows, expected n=" +
                          std::to_string(n));
  }
  auto check_entry = [&](const Polynomial& p, const std::string& where) {
    if (p.nvars() != n) throw ValidationError("model: " + where + " is not a polynomial in x1..x" + std::to_string(n));
    if (p.depends_on(kTime)) throw ValidationError("model: " + where + " depends on t; dynamics must be autonomous");
  };
  for (std::size_t i = 0; i < n; ++i) {
    check_entry(drift[i], "drift[" + std::to_string(i) + "]");
    if (diffusion[i].size() != k) {
      throw ValidationError("model: diffusion row " + std::to_string(i) + " has " +
                            std::to_string(diffusion[i].size()) + " entries, expected k=" + std::to_string(k));
    }
    for (std::size_t l = 0; l < k; ++l) {
      check_entry(diffusion[i][l], "diffusion[" + std::to_string(i) + "][" + std::to_string(l) + "]");
    }
  }
}

bool SdeModel::deterministic() const {
  for (const auto& row : diffusion) {
    for (const auto& s : row) {
      if (!s.is_zero()) return false;
    }
  }
  return true;
}

SdeModel SdeModel::without_noise() const {
  SdeModel out = *this;
  for (auto& row : out.diffusion) {
    for (auto& s : row) s = Polynomial(n);
  }
  return out;
}

Membership membership(const SemialgebraicSet& set, std::span<const double> point, double boundary_tol) {
  const double g = evaluate(set.g, point);
  if (std::abs(g) <= boundary_tol) return Membership::boundary_tolerant;
  return g > 0 ? Membership::inside : Membership::outside;
}

std::string to_string(QueryKind kind) { return kind == QueryKind::horizon ? "horizon" : "instant"; }

QueryKind query_kind_from_string(const std::string& s) {
  if (s == "horizon") return QueryKind::horizon;
  if (s == "instant") return QueryKind::instant;
  throw ValidationError("unknown query kind '" + s + "' (expected horizon or instant)");
}

void ReachQuery::check(std::size_t n) const {
  if (!(horizon_T > 0.0) || !std::isfinite(horizon_T)) throw ValidationError("query: T must be positive and finite");
  if (x0.size() != n) throw ValidationError("query: x0 has " + std::to_string(x0.size()) + " entries, expected " + std::to_string(n));
  if (domain.g.nvars() != n || target.g.nvars() != n) throw ValidationError("query: set polynomials must be over x1..xn");
  if (domain.g.depends_on(kTime) || target.g.depends_on(kTime)) throw ValidationError("query: sets must not depend on t");
  if (evaluate(domain.g, x0) <= 0.0) throw ValidationError("x0 outside domain: g_X(x0) <= 0");
  if (evaluate(target.g, x0) >= 0.0) throw ValidationError("x0 inside target: g_S(x0) >= 0");
  if (bounding_box.dim() != n) throw ValidationError("query: bounding_box must have n intervals");
  for (const auto& [lo, hi] : bounding_box.bounds) {
    if (!(lo < hi)) throw ValidationError("query: bounding_box intervals need lo < hi");
  }
}

ValidationReport validate(const SdeModel& model, const ReachQuery& query, std::size_t samples,
                          bool lower_bound_requested, std::uint64_t seed) {
  ValidationReport report;
  try {
    model.check();
  } catch (const ValidationError& e) {
    report.errors.emplace_back(e.what());
    return report;
  }
  if (samples == 0) {
    report.errors.emplace_back("validate: at least one sample is required");
    return report;
  }
  try {
    query.check(model.n);
  } catch (const ValidationError& e) {
    report.errors.emplace_back(e.what());
    return report;
  }

  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> axes;
  for (const auto& [lo, hi] : query.bounding_box.bounds) axes.emplace_back(lo, hi);
  const CompiledPolynomial gx(query.domain.g);
  const CompiledPolynomial gs(query.target.g);
  std::vector<double> x(model.n);
  std::size_t counterexamples = 0;
  std::vector<double> first_counterexample;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < model.n; ++i) x[i] = axes[i](rng);
    ++report.samples;
    const double vs = gs(x);
    if (vs < 0.0) continue;
    ++report.target_samples;
    const double vx = gx(x);
    if (vx <= 0.0) {
      if (counterexamples++ == 0) first_counterexample = x;
      continue;
    }
    if (vs > 0.0) ++report.target_interior_samples;
  }
  if (counterexamples > 0) {
    std::ostringstream msg;
    msg << "target not contained in domain: " << counterexamples << " sampled point(s) with g_S >= 0 and g_X <= 0, e.g. (";
    for (std::size_t i = 0; i < first_counterexample.size(); ++i) msg << (i ? ", " : "") << first_counterexample[i];
    msg << ")";
    report.errors.push_back(msg.str());
  }
  if (report.target_samples == 0) {
    report.warnings.emplace_back("empty target: no sampled point of the bounding box satisfies g_S >= 0");
  }
  if (lower_bound_requested && report.target_interior_samples == 0) {
    report.warnings.emplace_back("no sampled interior point of the target (g_S > 0); lower bounds need a target with non-empty interior");
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON model files

namespace {

const std::set<std::string> kModelFields = {"n", "k", "drift", "diffusion", "domain_g", "target_g",
                                            "T", "x0", "kind", "bounding_box"};

Polynomial parse_field(const json& j, std::size_t n, const std::string& where) {
  if (!j.is_string()) throw ValidationError(where + ": expected a polynomial string");
  try {
    return parse_polynomial(j.get<std::string>(), n);
  } catch (const ParseError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

}  // namespace

ProblemSpec problem_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("model file must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kModelFields.contains(key)) throw ValidationError("model file: unknown field '" + key + "'");
  }
  for (const auto& key : kModelFields) {
    if (!doc.contains(key)) throw ValidationError("model file: missing field '" + key + "'");
  }
  try {
    ProblemSpec spec;
    auto& m = spec.model;
    m.n = doc.at("n").get<std::size_t>();
    m.k = doc.at("k").get<std::size_t>();
    const auto& drift = doc.at("drift");
    if (!drift.is_array()) throw ValidationError("drift must be an array");
    for (std::size_t i = 0; i < drift.size(); ++i) {
      m.drift.push_back(parse_field(drift[i], m.n, "drift[" + std::to_string(i) + "]"));
    }
    const auto& diff = doc.at("diffusion");
    if (!diff.is_array()) throw ValidationError("diffusion must be an array of arrays");
    for (std::size_t i = 0; i < diff.size(); ++i) {
      if (!diff[i].is_array()) throw ValidationError("diffusion must be an array of arrays");
      std::vector<Polynomial> row;
      for (std::size_t l = 0; l < diff[i].size(); ++l) {
        row.push_back(parse_field(diff[i][l], m.n, "diffusion[" + std::to_string(i) + "][" + std::to_string(l) + "]"));
      }
      m.diffusion.push_back(std::move(row));
    }
    m.check();

    auto& q = spec.query;
    q.domain = {parse_field(doc.at("domain_g"), m.n, "domain_g"), SetSense::open};
    q.target = {parse_field(doc.at("target_g"), m.n, "target_g"), SetSense::closed};
    q.horizon_T = doc.at("T").get<double>();
    q.x0 = doc.at("x0").get<std::vector<double>>();
    q.kind = query_kind_from_string(doc.at("kind").get<std::string>());
    for (const auto& interval : doc.at("bounding_box")) {
      const auto pair = interval.get<std::vector<double>>();
      if (pair.size() != 2) throw ValidationError("bounding_box entries must be [lo, hi]");
      q.bounding_box.bounds.emplace_back(pair[0], pair[1]);
    }
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return problem_from_json_text(buf.str());
}

std::string problem_to_json_text(const ProblemSpec& spec) {
  json doc;
  doc["n"] = spec.model.n;
  doc["k"] = spec.model.k;
  json drift = json::array();
  for (const auto& p : spec.model.drift) drift.push_back(to_string(p));
  doc["drift"] = drift;
  json diff = json::array();
  for (const auto& row : spec.model.diffusion) {
    json r = json::array();
    for (const auto& p : row) r.push_back(to_string(p));
    diff.push_back(r);
  }
  doc["diffusion"] = diff;
  doc["domain_g"] = to_string(spec.query.domain.g);
  doc["target_g"] = to_string(spec.query.target.g);
  doc["T"] = spec.query.horizon_T;
  doc["x0"] = spec.query.x0;
  doc["kind"] = to_string(spec.query.kind);
  json box = json::array();
  for (const auto& [lo, hi] : spec.query.bounding_box.bounds) box.push_back({lo, hi});
  doc["bounding_box"] = box;
  return doc.dump(2);
}

}  // namespace reachcert
