#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdyn/cyclo.hpp"
#include "pdyn/errors.hpp"
#include "pdyn/rational.hpp"

namespace pdyn {

inline const Rational kDefaultPrecision = Rational(24);

// Valuation o(s): the least exponent, or +infinity for the exact zero.
struct Valuation {
  bool infinite = false;
  Rational v;

  static Valuation inf() { return Valuation{true, Rational(0)}; }
  static Valuation of(Rational q) { return Valuation{false, std::move(q)}; }

  bool is_finite() const { return !infinite; }
  const Rational& value() const {
    if (infinite) throw Error("Internal", "value() of infinite valuation");
    return v;
  }
  friend bool operator==(const Valuation& a, const Valuation& b) {
    return a.infinite == b.infinite && (a.infinite || a.v == b.v);
  }
  friend bool operator<(const Valuation& a, const Valuation& b) {
    if (a.infinite) return false;
    if (b.infinite) return true;
    return a.v < b.v;
  }
  // o >= q holds for +infinity.
  bool at_least(const Rational& q) const { return infinite || v >= q; }
  bool above(const Rational& q) const { return infinite || v > q; }
};

// Truncated Puiseux series: finitely many exact terms below an optional
// precision cutoff P (exponents >= P are unknown). No cutoff = exact series.
class PuiseuxSeries {
 public:
  PuiseuxSeries() = default;
  PuiseuxSeries(const Cyclo& c) { set(Rational(0), c); normalize(); }
  PuiseuxSeries(long c) : PuiseuxSeries(Cyclo(c)) {}

  static PuiseuxSeries monomial(const Rational& exp, const Cyclo& coeff) {
    PuiseuxSeries s;
    s.set(exp, coeff);
    s.normalize();
    return s;
  }
  static PuiseuxSeries t_power(const Rational& exp) { return monomial(exp, Cyclo(1)); }

  const std::map<Rational, Cyclo>& terms() const { return terms_; }
  const std::optional<Rational>& precision() const { return prec_; }
  bool is_exact() const { return !prec_.has_value(); }
  bool is_exact_zero() const { return is_exact() && terms_.empty(); }

  // Smallest ramification index: lcm of the exponent denominators.
  long ramification() const {
    Integer m = 1;
    for (const auto& [e, c] : terms_) mpz_lcm(m.get_mpz_t(), m.get_mpz_t(), e.get_den().get_mpz_t());
    return to_long(m);
  }

  Valuation valuation() const {
    if (!terms_.empty()) return Valuation::of(terms_.begin()->first);
    if (is_exact()) return Valuation::inf();
    throw IndeterminateValuation("series is zero to precision O(t^(" +
                                 to_string(*prec_) + "))");
  }

  Cyclo coeff(const Rational& exp) const {
    auto it = terms_.find(exp);
    return it == terms_.end() ? Cyclo(0) : it->second;
  }

  void set(const Rational& exp, const Cyclo& c) {
    if (c.is_zero()) terms_.erase(exp);
    else terms_[exp] = c;
  }
  void set_precision(std::optional<Rational> p) {
    prec_ = std::move(p);
    normalize();
  }

  PuiseuxSeries truncated(const Rational& P) const {
    PuiseuxSeries r = *this;
    if (!r.prec_ || *r.prec_ > P) r.prec_ = P;
    r.normalize();
    return r;
  }

  friend PuiseuxSeries operator-(const PuiseuxSeries& a) {
    PuiseuxSeries r = a;
    for (auto& [e, c] : r.terms_) c = -c;
    return r;
  }
  friend PuiseuxSeries operator+(const PuiseuxSeries& a, const PuiseuxSeries& b) {
    PuiseuxSeries r = a;
    r.prec_ = min_prec(a.prec_, b.prec_);
    for (const auto& [e, c] : b.terms_) {
      auto it = r.terms_.find(e);
      if (it == r.terms_.end()) r.terms_[e] = c;
      else {
        it->second = it->second + c;
        if (it->second.is_zero()) r.terms_.erase(it);
      }
    }
    r.normalize();
    return r;
  }
  friend PuiseuxSeries operator-(const PuiseuxSeries& a, const PuiseuxSeries& b) {
    return a + (-b);
  }
  friend PuiseuxSeries operator*(const PuiseuxSeries& a, const PuiseuxSeries& b) {
    // Exact zero absorbs; otherwise both valuations must be determinate so
    // the output precision P = min(P_a + o(b), P_b + o(a)) is well defined.
    if (a.is_exact_zero() || b.is_exact_zero()) return PuiseuxSeries();
    std::optional<Rational> prec;
    if (a.prec_ || b.prec_) {
      // lower bounds on the valuations suffice (zero-to-precision operands
      // have o >= P, which only tightens the output precision soundly)
      Rational oa = a.terms_.empty() ? *a.prec_ : a.terms_.begin()->first;
      Rational ob = b.terms_.empty() ? *b.prec_ : b.terms_.begin()->first;
      if (a.prec_) prec = Rational(*a.prec_ + ob);
      if (b.prec_) {
        Rational pb = *b.prec_ + oa;
        prec = prec ? std::min(*prec, pb) : pb;
      }
    }
    PuiseuxSeries r;
    r.prec_ = prec;
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        Rational e = ea + eb;
        if (prec && e >= *prec) continue;
        Cyclo prod = ca * cb;
        auto it = r.terms_.find(e);
        if (it == r.terms_.end()) { if (!prod.is_zero()) r.terms_[e] = prod; }
        else {
          it->second = it->second + prod;
          if (it->second.is_zero()) r.terms_.erase(it);
        }
      }
    }
    r.normalize();
    return r;
  }

  PuiseuxSeries scaled(const Cyclo& c) const {
    if (c.is_zero()) return PuiseuxSeries();
    PuiseuxSeries r = *this;
    for (auto& [e, co] : r.terms_) co = co * c;
    r.normalize();
    return r;
  }

  friend bool operator==(const PuiseuxSeries& a, const PuiseuxSeries& b) {
    return a.prec_ == b.prec_ && a.terms_ == b.terms_;
  }
  friend bool operator!=(const PuiseuxSeries& a, const PuiseuxSeries& b) { return !(a == b); }

 private:
  static std::optional<Rational> min_prec(const std::optional<Rational>& a,
                                          const std::optional<Rational>& b) {
    if (!a) return b;
    if (!b) return a;
    return std::min(*a, *b);
  }
  void normalize() {
    if (!prec_) return;
    auto it = terms_.lower_bound(*prec_);
    terms_.erase(it, terms_.end());
  }

  std::map<Rational, Cyclo> terms_;
  std::optional<Rational> prec_;
};

inline Valuation valuation(const PuiseuxSeries& s) { return s.valuation(); }

// o(a-b), the ultrametric distance exponent.
inline Valuation dist_valuation(const PuiseuxSeries& a, const PuiseuxSeries& b) {
  return (a - b).valuation();
}

// Multiplicative inverse. Exact monomials invert exactly; otherwise the
// result is truncated at target_P (defaults to P_u - 2 o(u) for truncated
// input, valuation + default window for exact input).
inline PuiseuxSeries series_invert(const PuiseuxSeries& u,
                                   std::optional<Rational> target_P = std::nullopt) {
  if (u.is_exact_zero()) throw DivisionByZero("inverse of zero series");
  Rational v = u.valuation().value();
  const Cyclo lead = u.terms().begin()->second;
  if (u.is_exact() && u.terms().size() == 1 && !target_P)
    return PuiseuxSeries::monomial(-v, lead.inverse());
  Rational P;
  if (target_P) P = *target_P;
  else if (u.precision()) P = *u.precision() - 2 * v;
  else P = kDefaultPrecision - v;
  // u = c t^v (1 + w), o(w) > 0: geometric series in -w.
  PuiseuxSeries w = (u.scaled(lead.inverse()) * PuiseuxSeries::t_power(-v) -
                     PuiseuxSeries(1)).truncated(P + v);
  PuiseuxSeries acc(1), term(1);
  if (!w.terms().empty()) {
    Rational ow = w.valuation().value();
    if (ow <= 0) throw Error("Internal", "invert: unit part not 1+o(1)");
    long steps = 1 + to_long(rational_floor((P + v) / ow));
    for (long k = 0; k < steps; ++k) {
      term = (term * (-w)).truncated(P + v);
      if (term.terms().empty()) break;
      acc = acc + term;
    }
  }
  return (acc.scaled(lead.inverse()) * PuiseuxSeries::t_power(-v)).truncated(P);
}

inline PuiseuxSeries series_div(const PuiseuxSeries& a, const PuiseuxSeries& b,
                                std::optional<Rational> target_P = std::nullopt) {
  return a * series_invert(b, target_P);
}

// Galois action: the coefficient of t^(p/q) picks up e^{2 pi i k p / q}.
inline PuiseuxSeries sigma_action(const PuiseuxSeries& s, long k) {
  PuiseuxSeries r;
  r.set_precision(s.precision());
  for (const auto& [e, c] : s.terms()) {
    long q = to_long(e.get_den());
    Integer num_mod = e.get_num() % q;
    long p = (num_mod.get_si() * (k % q)) % q;
    if (p < 0) p += q;
    r.set(e, c * Cyclo::zeta((int)q, p));
  }
  return r;
}

inline PuiseuxSeries series_pow(const PuiseuxSeries& s, long k) {
  if (k < 0) return series_invert(series_pow(s, -k));
  PuiseuxSeries r(1), base = s;
  while (k) {
    if (k & 1) r = r * base;
    base = k > 1 ? base * base : base;
    k >>= 1;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Text grammar: `term (+ term)* [+ O(t^(p/q))]`,
// term = coeff `*` t-part | coeff | t-part, t-part = t | t^int | t^(p/q).

namespace detail {

struct SeriesParser {
  const std::string& s;
  size_t pos = 0;
  explicit SeriesParser(const std::string& str) : s(str) {}

  void skip_ws() { while (pos < s.size() && std::isspace((unsigned char)s[pos])) ++pos; }
  [[noreturn]] void fail(const std::string& msg) {
    throw Error("ParseError", msg + " at position " + std::to_string(pos) + " in '" + s + "'");
  }

  bool at_t_token() const {
    if (pos >= s.size() || s[pos] != 't') return false;
    size_t nxt = pos + 1;
    return nxt >= s.size() || !std::isalnum((unsigned char)s[nxt]);
  }

  Rational parse_exponent() {
    // after 't': optional ^int or ^(p/q)
    if (pos < s.size() && s[pos] == '^') {
      ++pos;
      skip_ws();
      if (pos < s.size() && s[pos] == '(') {
        ++pos;
        size_t close = s.find(')', pos);
        if (close == std::string::npos) fail("expected ')' in exponent");
        Rational e = parse_rational(s.substr(pos, close - pos));
        pos = close + 1;
        return e;
      }
      size_t start = pos;
      if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) ++pos;
      while (pos < s.size() && std::isdigit((unsigned char)s[pos])) ++pos;
      if (pos == start) fail("expected exponent");
      return parse_rational(s.substr(start, pos - start));
    }
    return Rational(1);
  }

  // One product of cyclo-factors and at most one t-power.
  PuiseuxSeries parse_term() {
    skip_ws();
    bool neg = false;
    while (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) {
      if (s[pos] == '-') neg = !neg;
      ++pos;
      skip_ws();
    }
    Cyclo coeff(1);
    Rational exp(0);
    bool saw_t = false, first = true;
    for (;;) {
      skip_ws();
      if (at_t_token()) {
        if (saw_t) fail("two t-powers in one term");
        ++pos;
        exp = parse_exponent();
        saw_t = true;
      } else {
        CycloParser cp(s);
        cp.pos = pos;
        Cyclo f = cp.parse_factor();
        pos = cp.pos;
        coeff = coeff * f;
      }
      first = false;
      skip_ws();
      if (pos < s.size() && s[pos] == '*') { ++pos; continue; }
      break;
    }
    (void)first;
    if (neg) coeff = -coeff;
    return PuiseuxSeries::monomial(exp, coeff);
  }

  PuiseuxSeries parse_series() {
    skip_ws();
    PuiseuxSeries r;
    std::optional<Rational> prec;
    if (pos >= s.size()) fail("empty series");
    // allow literal "0"
    for (;;) {
      skip_ws();
      if (pos < s.size() && s[pos] == '+') {
        // peek past the '+' for a trailing O-term
        size_t save = pos;
        ++pos;
        skip_ws();
        if (s.compare(pos, 2, "O(") != 0) pos = save;
      }
      if (s.compare(pos, 2, "O(") == 0) {
        pos += 2;
        skip_ws();
        if (!at_t_token()) fail("expected t in O(...)");
        ++pos;
        prec = parse_exponent();
        skip_ws();
        if (pos >= s.size() || s[pos] != ')') fail("expected ')' after O-term");
        ++pos;
        break;
      }
      r = r + parse_term();
      skip_ws();
      if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) continue;
      break;
    }
    skip_ws();
    if (pos != s.size()) fail("trailing input");
    r.set_precision(prec);
    return r;
  }
};

}  // namespace detail

inline PuiseuxSeries parse_series(const std::string& text) {
  detail::SeriesParser p(text);
  return p.parse_series();
}

inline std::string exponent_to_string(const Rational& e) {
  return "t^(" + to_string(e) + ")";
}

inline std::string series_to_string(const PuiseuxSeries& s) {
  std::string out;
  for (const auto& [e, c] : s.terms()) {
    Cyclo cc = c;
    std::string cs = cyclo_to_string(cc);
    bool negative_simple = !cs.empty() && cs[0] == '-' && cs.find(' ') == std::string::npos;
    if (out.empty()) {
      if (negative_simple) { out += "-"; cs = cs.substr(1); }
    } else {
      out += negative_simple ? " - " : " + ";
      if (negative_simple) cs = cs.substr(1);
    }
    bool compound = cs.find(' ') != std::string::npos;
    if (e == 0) {
      out += compound ? "(" + cs + ")" : cs;
      continue;
    }
    if (cs == "1") {}
    else if (compound) out += "(" + cs + ")*";
    else out += cs + "*";
    out += e == 1 ? "t" : exponent_to_string(e);
  }
  if (s.precision()) {
    if (!out.empty()) out += " + ";
    out += "O(" + exponent_to_string(*s.precision()) + ")";
  }
  return out.empty() ? "0" : out;
}

}  // namespace pdyn
