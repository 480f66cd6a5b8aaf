// Copyright 2026 The reachcert Authors.
// SPDX-License-Identifier: Apache-2.0

#include "reachcert/poly.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace reachcert {

// ---------------------------------------------------------------------------
// Monomial

Monomial Monomial::variable(VarId var, std::uint32_t power) {
  Monomial m;
  if (power > 0) {
    m.factors_.emplace_back(var, power);
    m.degree_ = power;
  }
  return m;
}

Monomial Monomial::from_factors(std::vector<Factor> factors) {
  std::sort(factors.begin(), factors.end());
  Monomial m;
  for (const auto& [var, e] : factors) {
    if (e == 0) continue;
    if (!m.factors_.empty() && m.factors_.back().first == var) {
      m.factors_.back().second += e;
    } else {
      m.factors_.emplace_back(var, e);
    }
    m.degree_ += e;
  }
  return m;
}

std::uint32_t Monomial::exponent(VarId var) const noexcept {
  for (const auto& [v, e] : factors_) {
    if (v == var) return e;
    if (v > var) break;
  }
  return 0;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  out.factors_.reserve(factors_.size() + other.factors_.size());
  auto a = factors_.begin();
  auto b = other.factors_.begin();
  while (a != factors_.end() || b != other.factors_.end()) {
    if (b == other.factors_.end() || (a != factors_.end() && a->first < b->first)) {
      out.factors_.push_back(*a++);
    } else if (a == factors_.end() || b->first < a->first) {
      out.factors_.push_back(*b++);
    } else {
      out.factors_.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  out.degree_ = degree_ + other.degree_;
  return out;
}

std::pair<Monomial, std::uint32_t> Monomial::split(VarId var) const {
  Monomial rest;
  std::uint32_t removed = 0;
  for (const auto& f : factors_) {
    if (f.first == var) {
      removed = f.second;
    } else {
      rest.factors_.push_back(f);
      rest.degree_ += f.second;
    }
  }
  return {rest, removed};
}

bool GrlexLess::operator()(const Monomial& a, const Monomial& b) const noexcept {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  // Factors are sorted by ascending VarId, which is the x1 > x2 > ... > t
  // priority order; the first variable whose exponents differ decides.
  const auto& fa = a.factors();
  const auto& fb = b.factors();
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < fa.size() || j < fb.size()) {
    const VarId va = i < fa.size() ? fa[i].first : kTime;
    const VarId vb = j < fb.size() ? fb[j].first : kTime;
    const VarId v = std::min(va, vb);
    const std::uint32_t ea = (i < fa.size() && va == v) ? fa[i].second : 0;
    const std::uint32_t eb = (j < fb.size() && vb == v) ? fb[j].second : 0;
    if (ea != eb) return ea < eb;
    if (i < fa.size() && va == v) ++i;
    if (j < fb.size() && vb == v) ++j;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Polynomial

Polynomial Polynomial::constant(double c, std::size_t nvars, bool has_time) {
  Polynomial p(nvars, has_time);
  p.add_term(Monomial{}, c);
  return p;
}

Polynomial Polynomial::variable(VarId var, std::size_t nvars, bool has_time) {
  return monomial(Monomial::variable(var), 1.0, nvars, has_time || var == kTime);
}

Polynomial Polynomial::monomial(const Monomial& m, double c, std::size_t nvars, bool has_time) {
  for (const auto& [v, e] : m.factors()) {
    if (v == kTime) {
      has_time = true;
    } else if (v >= nvars) {
      throw DimensionError("monomial uses x" + std::to_string(v + 1) + " beyond nvars=" +
                           std::to_string(nvars));
    }
  }
  Polynomial p(nvars, has_time);
  p.add_term(m, c);
  return p;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

std::uint32_t Polynomial::degree() const noexcept {
  // Terms are graded, so the last one has maximal degree.
  return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
}

std::uint32_t Polynomial::degree_in(VarId var) const noexcept {
  std::uint32_t d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.exponent(var));
  return d;
}

double Polynomial::max_abs_coefficient() const noexcept {
  double r = 0.0;
  for (const auto& [m, c] : terms_) r = std::max(r, std::abs(c));
  return r;
}

Polynomial Polynomial::with_time(bool has_time) const {
  if (!has_time && depends_on(kTime)) {
    throw DimensionError("cannot drop t from a polynomial that depends on it");
  }
  Polynomial p = *this;
  p.has_time_ = has_time;
  return p;
}

void Polynomial::check_compatible(const Polynomial& other) const {
  if (nvars_ != other.nvars_) {
    throw DimensionError("polynomial nvars mismatch: " + std::to_string(nvars_) + " vs " +
                         std::to_string(other.nvars_));
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  check_compatible(other);
  has_time_ = has_time_ || other.has_time_;
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  check_compatible(other);
  has_time_ = has_time_ || other.has_time_;
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  a.check_compatible(b);
  Polynomial out(a.nvars_, a.has_time_ || b.has_time_);
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) out.add_term(ma * mb, ca * cb);
  }
  return out;
}

Polynomial& Polynomial::operator*=(const Polynomial& other) {
  *this = *this * other;
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= s;
    // Underflow to exact zero is the only way a product can vanish here.
    it = it->second == 0.0 ? terms_.erase(it) : std::next(it);
  }
  return *this;
}

Polynomial Polynomial::operator+(double c) const {
  Polynomial p = *this;
  p.add_term(Monomial{}, c);
  return p;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::size_t nvars) : text_(text), nvars_(nvars) {}

  Polynomial run() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("empty expression", pos_);
    Polynomial p = expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_);
    if (saw_time_) p = p.with_time(true);
    return p;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  Polynomial expr() {
    Polynomial acc = term();
    while (true) {
      if (peek('+')) {
        ++pos_;
        acc += term();
      } else if (peek('-')) {
        ++pos_;
        acc -= term();
      } else {
        return acc;
      }
    }
  }

  Polynomial term() {
    Polynomial acc = unary();
    while (peek('*')) {
      ++pos_;
      acc *= unary();
    }
    return acc;
  }

  Polynomial unary() {
    if (peek('-')) {
      ++pos_;
      return -unary();
    }
    if (peek('+')) {
      ++pos_;
      return unary();
    }
    return power();
  }

  Polynomial power() {
    Polynomial base = primary();
    if (!peek('^')) return base;
    ++pos_;
    skip_ws();
    const std::size_t start = pos_;
    unsigned long e = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      e = e * 10 + static_cast<unsigned long>(text_[pos_] - '0');
      if (e > 1000) throw ParseError("exponent too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError("expected nonnegative integer exponent", start);
    Polynomial out = Polynomial::constant(1.0, nvars_);
    for (unsigned long i = 0; i < e; ++i) out *= base;
    return out;
  }

  Polynomial primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial inner = expr();
      if (!peek(')')) throw ParseError("expected ')'", pos_);
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  Polynomial number() {
    const std::size_t start = pos_;
    auto is_digit = [&](std::size_t i) {
      return i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]));
    };
    while (is_digit(pos_)) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (is_digit(pos_)) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (!is_digit(q)) throw ParseError("malformed exponent in number", pos_);
      pos_ = q;
      while (is_digit(pos_)) ++pos_;
    }
    double value = 0.0;
    const auto* first = text_.data() + start;
    const auto* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) throw ParseError("malformed number", start);
    return Polynomial::constant(value, nvars_);
  }

  Polynomial identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "t") {
      saw_time_ = true;
      return Polynomial::variable(kTime, nvars_, true);
    }
    if (name.size() >= 2 && name[0] == 'x' && name[1] != '0') {
      std::size_t index = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec == std::errc{} && ptr == name.data() + name.size() && index >= 1 && index <= nvars_) {
        return Polynomial::variable(static_cast<VarId>(index - 1), nvars_);
      }
    }
    throw ParseError("unknown variable '" + std::string(name) + "'", start);
  }

  std::string_view text_;
  std::size_t nvars_;
  std::size_t pos_ = 0;
  bool saw_time_ = false;
};

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Polynomial parse_polynomial(std::string_view text, std::size_t nvars, bool force_time) {
  Polynomial p = Parser(text, nvars).run();
  return force_time ? p.with_time(true) : p;
}

std::string to_string(const Monomial& m) {
  std::string out;
  for (const auto& [v, e] : m.factors()) {
    if (!out.empty()) out += '*';
    out += v == kTime ? std::string("t") : "x" + std::to_string(v + 1);
    if (e > 1) out += "^" + std::to_string(e);
  }
  return out.empty() ? "1" : out;
}

std::string to_string(const Polynomial& p) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    const double mag = std::abs(c);
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    if (m.is_one()) {
      out += format_double(mag);
    } else if (mag == 1.0) {
      out += to_string(m);
    } else {
      out += format_double(mag) + "*" + to_string(m);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation and calculus

std::ostream& operator<<(std::ostream& os, const Polynomial& p) { return os << to_string(p); }

double evaluate(const Polynomial& p, std::span<const double> point, std::optional<double> tval) {
  if (point.size() != p.nvars()) {
    throw DimensionError("evaluate: point has " + std::to_string(point.size()) + " entries, polynomial has nvars=" +
                         std::to_string(p.nvars()));
  }
  if (p.has_time() != tval.has_value()) {
    throw DimensionError(p.has_time() ? "evaluate: polynomial depends on t but no time value was given"
                                      : "evaluate: time value given for a time-independent polynomial");
  }
  double sum = 0.0;
  for (const auto& [m, c] : p.terms()) {
    double term = c;
    for (const auto& [v, e] : m.factors()) {
      const double base = v == kTime ? *tval : point[v];
      for (std::uint32_t i = 0; i < e; ++i) term *= base;
    }
    sum += term;
  }
  return sum;
}

Polynomial differentiate(const Polynomial& p, VarId var) {
  if (var != kTime && var >= p.nvars()) {
    throw DimensionError("differentiate: x" + std::to_string(var + 1) + " beyond nvars");
  }
  Polynomial out(p.nvars(), p.has_time());
  for (const auto& [m, c] : p.terms()) {
    auto [rest, e] = m.split(var);
    if (e == 0) continue;
    out.add_term(rest * Monomial::variable(var, e - 1), c * static_cast<double>(e));
  }
  return out;
}

Polynomial substitute(const Polynomial& p, VarId var, double value) {
  Polynomial out(p.nvars(), p.has_time() && var != kTime);
  for (const auto& [m, c] : p.terms()) {
    auto [rest, e] = m.split(var);
    double scale = 1.0;
    for (std::uint32_t i = 0; i < e; ++i) scale *= value;
    out.add_term(rest, c * scale);
  }
  return out;
}

std::vector<Monomial> monomials_up_to(std::span<const VarId> vars, std::uint32_t max_degree) {
  std::vector<Monomial> out{Monomial{}};
  // Grow by multiplying with each variable in turn; dedupe via ordering.
  std::vector<Monomial> frontier{Monomial{}};
  for (std::uint32_t d = 1; d <= max_degree; ++d) {
    std::vector<Monomial> next;
    for (const auto& m : frontier) {
      for (VarId v : vars) next.push_back(m * Monomial::variable(v));
    }
    std::sort(next.begin(), next.end(), GrlexLess{});
    next.erase(std::unique(next.begin(), next.end()), next.end());
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CompiledPolynomial

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) : nvars_(p.nvars()), stride_(p.nvars() + 1) {
  coefs_.reserve(p.size());
  exps_.reserve(p.size() * stride_);
  for (const auto& [m, c] : p.terms()) {
    coefs_.push_back(c);
    for (std::size_t v = 0; v < nvars_; ++v) {
      exps_.push_back(static_cast<std::uint8_t>(m.exponent(static_cast<VarId>(v))));
    }
    exps_.push_back(static_cast<std::uint8_t>(m.exponent(kTime)));
    if (m.degree() > std::numeric_limits<std::uint8_t>::max()) {
      throw DimensionError("CompiledPolynomial supports exponents up to 255");
    }
  }
}

double CompiledPolynomial::operator()(std::span<const double> x, double t) const noexcept {
  double sum = 0.0;
  const std::uint8_t* e = exps_.data();
  for (double c : coefs_) {
    double term = c;
    for (std::size_t v = 0; v < nvars_; ++v) {
      for (std::uint8_t k = 0; k < e[v]; ++k) term *= x[v];
    }
    for (std::uint8_t k = 0; k < e[nvars_]; ++k) term *= t;
    sum += term;
    e += stride_;
  }
  return sum;
}

}  // namespace reachcert
