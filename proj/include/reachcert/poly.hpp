// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace reachcert {

/// Index of a polynomial variable. State variables x1..xn use 0..n-1; the
/// time variable t has its own reserved index and is never counted in nvars.
using VarId = std::uint16_t;
inline constexpr VarId kTime = 0xFFFF;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Product of variable powers in canonical sparse form: factors sorted by
/// variable index, no zero exponent stored.
class Monomial {
 public:
  using Factor = std::pair<VarId, std::uint32_t>;

  Monomial() = default;
  static Monomial variable(VarId var, std::uint32_t power = 1);
  /// Builds from arbitrary (var, exponent) pairs; merges repeats, drops zeros.
  static Monomial from_factors(std::vector<Factor> factors);

  std::uint32_t degree() const noexcept { return degree_; }
  std::uint32_t exponent(VarId var) const noexcept;
  const std::vector<Factor>& factors() const noexcept { return factors_; }
  bool is_one() const noexcept { return factors_.empty(); }
  bool contains(VarId var) const noexcept { return exponent(var) != 0; }

  Monomial operator*(const Monomial& other) const;
  /// Monomial with `var` removed, together with the removed exponent.
  std::pair<Monomial, std::uint32_t> split(VarId var) const;

  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  std::vector<Factor> factors_;
  std::uint32_t degree_ = 0;
};

/// Graded lexicographic order with x1 > x2 > ... > xn > t.
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const noexcept;
};

/// Sparse multivariate polynomial with double coefficients over x1..xn and,
/// when `has_time()`, the time variable t. Exact zeros are pruned; nothing else.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GrlexLess>;

  explicit Polynomial(std::size_t nvars = 0, bool has_time = false)
      : nvars_(nvars), has_time_(has_time) {}

  static Polynomial constant(double c, std::size_t nvars, bool has_time = false);
  static Polynomial variable(VarId var, std::size_t nvars, bool has_time = false);
  static Polynomial monomial(const Monomial& m, double c, std::size_t nvars, bool has_time = false);

  std::size_t nvars() const noexcept { return nvars_; }
  bool has_time() const noexcept { return has_time_; }
  const TermMap& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  void add_term(const Monomial& m, double c);
  double coefficient(const Monomial& m) const;
  std::uint32_t degree() const noexcept;
  std::uint32_t degree_in(VarId var) const noexcept;
  bool depends_on(VarId var) const noexcept { return degree_in(var) > 0; }
  double max_abs_coefficient() const noexcept;

  /// Same terms, placed in a space that includes t.
  Polynomial with_time(bool has_time = true) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(const Polynomial& other);
  Polynomial& operator*=(double s);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  Polynomial operator-() const { return *this * -1.0; }

  Polynomial operator+(double c) const;
  Polynomial operator-(double c) const { return *this + (-c); }

  /// Equality of canonical term maps; the declared space is not compared.
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

 private:
  void check_compatible(const Polynomial& other) const;

  TermMap terms_;
  std::size_t nvars_ = 0;
  bool has_time_ = false;
};

/// Parses the model-file grammar: decimal numbers (optional exponent part),
/// variables x1..xn and t, + - *, ^ with a nonnegative integer, parentheses.
/// The result declares t iff the text mentions it or `force_time` is set.
Polynomial parse_polynomial(std::string_view text, std::size_t nvars, bool force_time = false);

/// Canonical text in ascending graded-lex order; parse_polynomial inverts it exactly.
std::string to_string(const Polynomial& p);
std::string to_string(const Monomial& m);
std::ostream& operator<<(std::ostream& os, const Polynomial& p);

double evaluate(const Polynomial& p, std::span<const double> point,
                std::optional<double> tval = std::nullopt);

Polynomial differentiate(const Polynomial& p, VarId var);

/// Replaces `var` by a constant. Substituting t yields a time-independent polynomial.
Polynomial substitute(const Polynomial& p, VarId var, double value);

/// All monomials over `vars` with total degree <= `max_degree`, in ascending grlex order.
std::vector<Monomial> monomials_up_to(std::span<const VarId> vars, std::uint32_t max_degree);

/// Flattened polynomial for repeated evaluation in inner loops.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);

  double operator()(std::span<const double> x, double t = 0.0) const noexcept;
  std::size_t nvars() const noexcept { return nvars_; }

 private:
  std::size_t nvars_ = 0;
  std::size_t stride_ = 1;
  std::vector<double> coefs_;
  std::vector<std::uint8_t> exps_;
};

}  // namespace reachcert
