#pragma once

#include <mpfr.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pdyn/errors.hpp"
#include "pdyn/rational.hpp"

namespace pdyn {

namespace detail {

inline int euler_phi(int n) {
  int result = n, m = n;
  for (int p = 2; p * p <= m; ++p) {
    if (m % p == 0) {
      result -= result / p;
      while (m % p == 0) m /= p;
    }
  }
  if (m > 1) result -= result / m;
  return result;
}

inline std::vector<int> divisors_of(int n) {
  std::vector<int> d;
  for (int i = 1; i * i <= n; ++i) {
    if (n % i == 0) {
      d.push_back(i);
      if (i != n / i) d.push_back(n / i);
    }
  }
  std::sort(d.begin(), d.end());
  return d;
}

// Exact division of integer polynomials, used only where the remainder is
// known to vanish (building cyclotomic polynomials).
inline std::vector<Integer> zpoly_divexact(std::vector<Integer> num,
                                           const std::vector<Integer>& den) {
  std::vector<Integer> q(num.size() - den.size() + 1, Integer(0));
  for (int i = (int)q.size() - 1; i >= 0; --i) {
    Integer c = num[i + den.size() - 1] / den.back();
    q[i] = c;
    if (c != 0)
      for (size_t j = 0; j < den.size(); ++j) num[i + j] -= c * den[j];
  }
  return q;
}

// n-th cyclotomic polynomial (monic, integer coefficients, low to high).
inline const std::vector<Integer>& cyclotomic_poly(int n) {
  static std::map<int, std::vector<Integer>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  // x^n - 1 divided by the product of Phi_d over proper divisors d of n.
  std::function<std::vector<Integer>(int)> build = [&](int m) -> std::vector<Integer> {
    auto found = cache.find(m);
    if (found != cache.end()) return found->second;
    std::vector<Integer> num(m + 1, Integer(0));
    num[0] = -1;
    num[m] = 1;
    for (int d : divisors_of(m)) {
      if (d == m) continue;
      num = zpoly_divexact(num, build(d));
    }
    cache[m] = num;
    return num;
  };
  build(n);
  return cache[n];
}

inline void qpoly_trim(std::vector<Rational>& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

// Reduce a rational polynomial in x modulo Phi_n (x stands for zeta_n).
// Returns exactly phi(n) coordinates.
inline std::vector<Rational> qpoly_mod_phi(std::vector<Rational> p, int n) {
  const auto& phi = cyclotomic_poly(n);
  const int deg = (int)phi.size() - 1;  // = euler_phi(n), phi is monic
  for (int i = (int)p.size() - 1; i >= deg; --i) {
    if (p[i] == 0) continue;
    Rational c = p[i];
    for (int j = 0; j <= deg; ++j) {
      Rational term = c * Rational(phi[j]);
      p[i - deg + j] -= term;
    }
  }
  p.resize(deg, Rational(0));
  return p;
}

// Remainder-producing division by a (not necessarily monic) divisor; used by
// the extended Euclid below. Returns {quotient, remainder}.
inline std::pair<std::vector<Rational>, std::vector<Rational>> qpoly_divmod(
    std::vector<Rational> num, const std::vector<Rational>& den) {
  std::vector<Rational> q;
  if (num.size() >= den.size()) q.assign(num.size() - den.size() + 1, Rational(0));
  for (int i = (int)num.size() - (int)den.size(); i >= 0; --i) {
    Rational c = num[i + den.size() - 1] / den.back();
    q[i] = c;
    if (c != 0)
      for (size_t j = 0; j < den.size(); ++j) num[i + j] -= c * den[j];
  }
  qpoly_trim(num);
  return {q, num};
}

inline std::vector<Rational> qpoly_mul(const std::vector<Rational>& a,
                                       const std::vector<Rational>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<Rational> r(a.size() + b.size() - 1, Rational(0));
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (size_t j = 0; j < b.size(); ++j)
      if (b[j] != 0) r[i + j] += a[i] * b[j];
  }
  return r;
}

inline std::vector<Rational> qpoly_sub(std::vector<Rational> a,
                                       const std::vector<Rational>& b) {
  if (a.size() < b.size()) a.resize(b.size(), Rational(0));
  for (size_t i = 0; i < b.size(); ++i) a[i] -= b[i];
  qpoly_trim(a);
  return a;
}

}  // namespace detail

// Exact element of Q(zeta_n), stored as rational coordinates over the power
// basis 1, zeta_n, ..., zeta_n^{phi(n)-1}. Rationals keep order 1 so the
// common case stays a single mpq.
class CycloCore {
 public:
  CycloCore() : n_(1), c_(1, Rational(0)) {}
  CycloCore(const Rational& q) : n_(1), c_(1, q) {}
  CycloCore(long v) : n_(1), c_(1, Rational(v)) {}

  static CycloCore zeta(int n, long k = 1) {
    if (n < 1) throw Error("ParseError", "root-of-unity order must be >= 1");
    k %= n;
    if (k < 0) k += n;
    std::vector<Rational> p(k + 1, Rational(0));
    p[k] = 1;
    CycloCore z;
    z.n_ = n;
    z.c_ = detail::qpoly_mod_phi(std::move(p), n);
    z.shrink();
    return z;
  }

  int order() const { return n_; }
  const std::vector<Rational>& coords() const { return c_; }

  bool is_zero() const {
    for (const auto& q : c_)
      if (q != 0) return false;
    return true;
  }
  bool is_rational() const {
    for (size_t i = 1; i < c_.size(); ++i)
      if (c_[i] != 0) return false;
    return true;
  }
  // Only valid when is_rational().
  Rational rational_value() const {
    if (!is_rational()) throw Error("Internal", "rational_value on non-rational");
    return c_[0];
  }

  friend CycloCore operator-(const CycloCore& a) {
    CycloCore r = a;
    for (auto& q : r.c_) q = -q;
    return r;
  }
  friend CycloCore operator+(const CycloCore& a, const CycloCore& b) {
    if (a.n_ == b.n_) {
      CycloCore r = a;
      for (size_t i = 0; i < r.c_.size(); ++i) r.c_[i] += b.c_[i];
      r.shrink();
      return r;
    }
    int L = std::lcm(a.n_, b.n_);
    auto pa = a.lift(L), pb = b.lift(L);
    for (size_t i = 0; i < pa.size(); ++i) pa[i] += pb[i];
    return from_coords(L, std::move(pa));
  }
  friend CycloCore operator-(const CycloCore& a, const CycloCore& b) { return a + (-b); }
  friend CycloCore operator*(const CycloCore& a, const CycloCore& b) {
    if (a.n_ == 1 && b.n_ == 1) return CycloCore(a.c_[0] * b.c_[0]);
    if (a.n_ == 1) {  // scalar times element
      CycloCore r = b;
      for (auto& q : r.c_) q *= a.c_[0];
      return r;
    }
    if (b.n_ == 1) return b * a;
    int L = std::lcm(a.n_, b.n_);
    auto pa = a.lift(L), pb = b.lift(L);
    auto prod = detail::qpoly_mul(pa, pb);
    return from_coords(L, detail::qpoly_mod_phi(std::move(prod), L));
  }
  CycloCore inverse() const {
    if (is_zero()) throw DivisionByZero("cyclotomic inverse of zero");
    if (n_ == 1) return CycloCore(Rational(1) / c_[0]);
    // Extended Euclid: u*self + v*Phi_n = 1 in Q[x].
    std::vector<Rational> a(c_);
    detail::qpoly_trim(a);
    const auto& phiz = detail::cyclotomic_poly(n_);
    std::vector<Rational> b(phiz.size());
    for (size_t i = 0; i < phiz.size(); ++i) b[i] = Rational(phiz[i]);
    std::vector<Rational> u0{Rational(1)}, u1;  // cofactors of `a`
    std::vector<Rational> r0 = a, r1 = b;
    while (!r1.empty()) {
      auto [q, r2] = detail::qpoly_divmod(r0, r1);
      auto u2 = detail::qpoly_sub(u0, detail::qpoly_mul(q, u1));
      r0 = std::move(r1); r1 = std::move(r2);
      u0 = std::move(u1); u1 = std::move(u2);
    }
    if (r0.size() != 1)
      throw Error("Internal", "cyclotomic gcd not a unit");  // unreachable
    Rational lead = r0[0];
    for (auto& q : u0) q /= lead;
    return from_coords(n_, detail::qpoly_mod_phi(std::move(u0), n_));
  }
  friend CycloCore operator/(const CycloCore& a, const CycloCore& b) { return a * b.inverse(); }

  CycloCore pow(long k) const {
    if (k < 0) return inverse().pow(-k);
    CycloCore r(1), base = *this;
    while (k) {
      if (k & 1) r = r * base;
      base = base * base;
      k >>= 1;
    }
    return r;
  }

  friend bool operator==(const CycloCore& a, const CycloCore& b) {
    if (a.n_ == b.n_) return a.c_ == b.c_;
    int L = std::lcm(a.n_, b.n_);
    return a.lift(L) == b.lift(L);
  }
  friend bool operator!=(const CycloCore& a, const CycloCore& b) { return !(a == b); }

  // Rewrites the element over the smallest cyclotomic order that contains it.
  CycloCore& canonicalize() {
    if (n_ == 1) return *this;
    shrink();
    if (n_ == 1) return *this;
    for (int d : detail::divisors_of(n_)) {
      if (d == n_) break;
      std::vector<Rational> sol;
      if (try_express(d, sol)) {
        n_ = d;
        c_ = std::move(sol);
        return *this;
      }
    }
    return *this;
  }

 private:
  static CycloCore from_coords(int n, std::vector<Rational> c) {
    CycloCore r;
    r.n_ = n;
    r.c_ = std::move(c);
    r.c_.resize(detail::euler_phi(n), Rational(0));
    r.shrink();
    return r;
  }

  // Cheap normalization: collapse to order 1 when the value is rational.
  void shrink() {
    if (n_ == 1) return;
    if (is_rational()) {
      Rational q = c_[0];
      n_ = 1;
      c_.assign(1, q);
    }
  }

  // Coordinates over the basis of Q(zeta_N), N a multiple of order().
  std::vector<Rational> lift(int N) const {
    if (N == n_) return c_;
    std::vector<Rational> p((size_t)N, Rational(0));
    long step = N / n_;
    for (size_t i = 0; i < c_.size(); ++i)
      if (c_[i] != 0) p[i * step] += c_[i];
    return detail::qpoly_mod_phi(std::move(p), N);
  }

  // Attempts to solve for coordinates over Q(zeta_d), d | order().
  bool try_express(int d, std::vector<Rational>& sol) const {
    int rows = (int)c_.size(), cols = detail::euler_phi(d);
    if (cols > rows) return false;
    // Columns: zeta_d^j expressed in the zeta_n basis.
    std::vector<std::vector<Rational>> A(rows, std::vector<Rational>(cols + 1, Rational(0)));
    for (int j = 0; j < cols; ++j) {
      auto col = CycloCore::zeta(n_, (long)j * (n_ / d)).lift(n_);
      for (int i = 0; i < rows; ++i) A[i][j] = col[i];
    }
    for (int i = 0; i < rows; ++i) A[i][cols] = c_[i];
    // Gaussian elimination; the columns are linearly independent.
    std::vector<int> pivot_row(cols, -1);
    int r = 0;
    for (int j = 0; j < cols && r < rows; ++j) {
      int pr = -1;
      for (int i = r; i < rows; ++i)
        if (A[i][j] != 0) { pr = i; break; }
      if (pr < 0) continue;
      std::swap(A[pr], A[r]);
      Rational inv = Rational(1) / A[r][j];
      for (int k = j; k <= cols; ++k) A[r][k] *= inv;
      for (int i = 0; i < rows; ++i) {
        if (i == r || A[i][j] == 0) continue;
        Rational f = A[i][j];
        for (int k = j; k <= cols; ++k) A[i][k] -= f * A[r][k];
      }
      pivot_row[j] = r;
      ++r;
    }
    for (int i = r; i < rows; ++i)
      if (A[i][cols] != 0) return false;  // inconsistent: not in Q(zeta_d)
    sol.assign(cols, Rational(0));
    for (int j = 0; j < cols; ++j)
      if (pivot_row[j] >= 0) sol[j] = A[pivot_row[j]][cols];
    return true;
  }

  int n_;
  std::vector<Rational> c_;
};

namespace detail {

// sqrt of a positive square-free integer, realized inside the cyclotomic
// tower via quadratic Gauss sums (so no quadratic layer is ever stored).
inline CycloCore core_sqrt_squarefree(const Integer& d) {
  CycloCore result(1);
  Integer m = d;
  if (m % 2 == 0) {
    result = CycloCore::zeta(8, 1) + CycloCore::zeta(8, 7);  // 2cos(pi/4) = sqrt 2
    m /= 2;
  }
  for (Integer p = 3; p * p <= m; p += 2) {
    if (m % p != 0) continue;
    m /= p;
    long pl = to_long(p);
    CycloCore g(0);  // Gauss sum over F_p
    for (long k = 0; k < pl; ++k) g = g + CycloCore::zeta(pl, (k * k) % pl);
    // g = sqrt(p) when p = 1 mod 4, i*sqrt(p) when p = 3 mod 4
    result = result * (pl % 4 == 1 ? g : g * CycloCore::zeta(4, 3));
  }
  if (m > 1) {
    if (!m.fits_slong_p() || m > 100000)
      throw UnsupportedExtension("sqrt of rational with prime factor too large");
    long pl = to_long(m);
    CycloCore g(0);
    for (long k = 0; k < pl; ++k) g = g + CycloCore::zeta(pl, (k * k) % pl);
    result = result * (pl % 4 == 1 ? g : g * CycloCore::zeta(4, 3));
  }
  return result;
}

// Exact square root of a rational (any sign).
inline CycloCore core_sqrt_rational(const Rational& q) {
  if (q == 0) return CycloCore(0);
  if (q < 0) return CycloCore::zeta(4, 1) * core_sqrt_rational(-q);
  // sqrt(p/r) = sqrt(p*r)/r; split p*r into square part f^2 times square-free d.
  Integer m = q.get_num() * q.get_den();
  Integer f = 1, d = 1;
  Integer rem = m;
  for (Integer p = 2; p * p <= rem; ++p) {
    if (rem % p != 0) continue;
    int e = 0;
    while (rem % p == 0) { rem /= p; ++e; }
    for (int i = 0; i < e / 2; ++i) f *= p;
    if (e % 2) d *= p;
    if (p > 1000000) break;  // give up on huge factors below
  }
  if (rem > 1) {
    if (mpz_perfect_square_p(rem.get_mpz_t())) {
      Integer s;
      mpz_sqrt(s.get_mpz_t(), rem.get_mpz_t());
      f *= s;
    } else {
      d *= rem;
    }
  }
  Rational scale(f, q.get_den());
  scale.canonicalize();
  if (d == 1) return CycloCore(scale);
  return CycloCore(scale) * core_sqrt_squarefree(d);
}

// prime factorization with signed exponents (numerator minus denominator)
inline std::vector<std::pair<Integer, long>> factor_rational(const Rational& q) {
  std::vector<std::pair<Integer, long>> fac;
  auto add = [&fac](const Integer& p, long e) {
    for (auto& [fp, fe] : fac)
      if (fp == p) { fe += e; return; }
    fac.emplace_back(p, e);
  };
  auto split = [&add](Integer m, long sign) {
    for (Integer p = 2; p * p <= m; ++p) {
      if (m % p != 0) continue;
      long e = 0;
      while (m % p == 0) { m /= p; ++e; }
      add(p, sign * e);
      if (p > 1000000)
        throw UnsupportedExtension("radical of rational with prime factor too large");
    }
    if (m > 1) {
      if (!m.fits_slong_p() || m > 1000000)
        throw UnsupportedExtension("radical of rational with prime factor too large");
      add(m, sign);
    }
  };
  split(q.get_num() < 0 ? Integer(-q.get_num()) : q.get_num(), 1);
  split(q.get_den(), -1);
  return fac;
}

}  // namespace detail

// Canonical real radical: a product of primes p^{e_p} with each exponent in
// (0, 1/2) and 2-power denominator >= 4. Exponent parts with denominator 1
// or 2 are absorbed into the cyclotomic factor (integers and Gauss-sum square
// roots), which makes the representation of a coefficient unique.
struct Radical {
  std::map<Integer, Rational> e;

  bool trivial() const { return e.empty(); }
  friend bool operator==(const Radical& a, const Radical& b) { return a.e == b.e; }
  friend bool operator<(const Radical& a, const Radical& b) { return a.e < b.e; }
};

namespace detail {

// (r_out, absorb) with a * b = absorb * r_out, absorb cyclotomic.
inline void mul_radicals(const Radical& a, const Radical& b, Radical& out,
                         CycloCore& absorb) {
  out.e.clear();
  absorb = CycloCore(1);
  out.e = a.e;
  for (const auto& [p, ev] : b.e) {
    auto it = out.e.find(p);
    if (it == out.e.end()) out.e.emplace(p, ev);
    else it->second += ev;
  }
  for (auto it = out.e.begin(); it != out.e.end();) {
    // both inputs lie in (0, 1/2), so the sum lies in (0, 1)
    if (it->second >= Rational(1, 2)) {
      absorb = absorb * core_sqrt_squarefree(it->first);
      it->second -= Rational(1, 2);
    }
    if (it->second == 0) it = out.e.erase(it);
    else ++it;
  }
}

}  // namespace detail

class Cyclo;
inline Cyclo rational_power(const Rational& q, const Rational& e);

// Exact coefficient: a finite sum of canonical real radicals with cyclotomic
// coefficients. Closed under ring operations and the square roots taken by
// the Newton-Puiseux expansions (2-power radicals of rationals).
class Cyclo {
 public:
  Cyclo() = default;
  Cyclo(const Rational& q) {
    if (q != 0) parts_.emplace(Radical{}, CycloCore(q));
  }
  Cyclo(long v) : Cyclo(Rational(v)) {}
  Cyclo(const CycloCore& c) {
    if (!c.is_zero()) parts_.emplace(Radical{}, c);
  }

  static Cyclo zeta(int n, long k = 1) { return Cyclo(CycloCore::zeta(n, k)); }

  // p^e with e in the canonical range (0, 1/2), 2-power denominator >= 4
  static Cyclo radical_monomial(const Integer& p, const Rational& e) {
    if (!(e > 0 && e < Rational(1, 2)))
      throw Error("Internal", "radical exponent outside canonical range");
    Cyclo r;
    Radical rad;
    rad.e.emplace(p, e);
    r.parts_.emplace(std::move(rad), CycloCore(1));
    return r;
  }
  static Cyclo radical_term(const Radical& r, const CycloCore& c) {
    Cyclo out;
    if (!c.is_zero()) out.parts_.emplace(r, c);
    return out;
  }

  const std::map<Radical, CycloCore>& parts() const { return parts_; }

  bool is_zero() const { return parts_.empty(); }
  // true when the value lies in the plain cyclotomic field
  bool is_core() const {
    return parts_.empty() ||
           (parts_.size() == 1 && parts_.begin()->first.trivial());
  }
  CycloCore core() const {
    if (!is_core()) throw Error("Internal", "core() of a radical-bearing coefficient");
    return parts_.empty() ? CycloCore(0) : parts_.begin()->second;
  }
  bool is_rational() const { return is_core() && core().is_rational(); }
  Rational rational_value() const { return core().rational_value(); }
  int order() const { return core().order(); }

  Cyclo& canonicalize() {
    for (auto& [r, c] : parts_) c.canonicalize();
    return *this;
  }

  friend Cyclo operator-(const Cyclo& a) {
    Cyclo r = a;
    for (auto& [rad, c] : r.parts_) c = -c;
    return r;
  }
  friend Cyclo operator+(const Cyclo& a, const Cyclo& b) {
    Cyclo r = a;
    for (const auto& [rad, c] : b.parts_) {
      auto it = r.parts_.find(rad);
      if (it == r.parts_.end()) r.parts_.emplace(rad, c);
      else {
        it->second = it->second + c;
        if (it->second.is_zero()) r.parts_.erase(it);
      }
    }
    return r;
  }
  friend Cyclo operator-(const Cyclo& a, const Cyclo& b) { return a + (-b); }
  friend Cyclo operator*(const Cyclo& a, const Cyclo& b) {
    Cyclo r;
    for (const auto& [ra, ca] : a.parts_) {
      for (const auto& [rb, cb] : b.parts_) {
        Radical s;
        CycloCore absorb(1);
        detail::mul_radicals(ra, rb, s, absorb);
        CycloCore prod = ca * cb * absorb;
        if (prod.is_zero()) continue;
        auto it = r.parts_.find(s);
        if (it == r.parts_.end()) r.parts_.emplace(std::move(s), prod);
        else {
          it->second = it->second + prod;
          if (it->second.is_zero()) r.parts_.erase(it);
        }
      }
    }
    return r;
  }
  Cyclo inverse() const;
  friend Cyclo operator/(const Cyclo& a, const Cyclo& b) { return a * b.inverse(); }

  Cyclo pow(long k) const {
    if (k < 0) return inverse().pow(-k);
    Cyclo r(1), base = *this;
    while (k) {
      if (k & 1) r = r * base;
      base = base * base;
      k >>= 1;
    }
    return r;
  }

  friend bool operator==(const Cyclo& a, const Cyclo& b) { return a.parts_ == b.parts_; }
  friend bool operator!=(const Cyclo& a, const Cyclo& b) { return !(a == b); }

 private:
  std::map<Radical, CycloCore> parts_;  // no zero coefficients stored
};

// q^e for rational q and an exponent with 2-power denominator. Integer and
// half-integer exponent parts collapse into the cyclotomic factor; the rest
// stays as a canonical radical.
inline Cyclo rational_power(const Rational& q, const Rational& e) {
  if (q == 0) {
    if (e <= 0) throw DivisionByZero("0 raised to a non-positive power");
    return Cyclo(0);
  }
  Integer den = e.get_den();
  {
    Integer d = den;
    while (d % 2 == 0) d /= 2;
    if (d != 1)
      throw UnsupportedExtension("only 2-power radical exponents are supported");
  }
  if (e.get_den() == 1) {
    long k = to_long(e.get_num());
    Rational r(1);
    Rational base = q;
    long n = k < 0 ? -k : k;
    for (long i = 0; i < n; ++i) r *= base;
    if (k < 0) r = Rational(1) / r;
    return Cyclo(r);
  }
  if (q < 0) {
    // (-1)^{m / 2^k} = zeta_{2^{k+1}}^m
    long dl = to_long(den);
    Integer m2 = e.get_num() % (2 * den);
    long m = to_long(m2 < 0 ? m2 + 2 * den : m2);
    return rational_power(-q, e) * Cyclo::zeta((int)(2 * dl), m);
  }
  Cyclo out(1);
  Rational scale(1);
  for (const auto& [p, a] : detail::factor_rational(q)) {
    Rational E = Rational(a) * e;
    Integer fl = rational_floor(E);
    Rational frac = E - Rational(fl);
    // p^fl into the rational scale
    long n = to_long(fl < 0 ? Integer(-fl) : fl);
    Rational ppow(1);
    for (long i = 0; i < n; ++i) ppow *= Rational(p);
    scale *= fl < 0 ? Rational(1) / ppow : ppow;
    if (frac == 0) continue;
    if (frac >= Rational(1, 2)) {
      out = out * Cyclo(detail::core_sqrt_squarefree(p));
      frac -= Rational(1, 2);
    }
    if (frac != 0) out = out * Cyclo::radical_monomial(p, frac);
  }
  return out * Cyclo(scale);
}

inline Cyclo Cyclo::inverse() const {
  if (parts_.empty()) throw DivisionByZero("inverse of zero coefficient");
  if (parts_.size() == 1) {
    const auto& [r, c] = *parts_.begin();
    Cyclo out(c.inverse());
    for (const auto& [p, ev] : r.e)
      out = out * rational_power(Rational(p), -ev);
    return out;
  }
  // Solve x * v = 1 in the finite-dimensional algebra spanned by the
  // multiplicative closure of the radicals present in x.
  std::vector<Radical> basis{Radical{}};
  std::set<Radical> seen{Radical{}};
  for (size_t i = 0; i < basis.size(); ++i) {
    for (const auto& [g, cg] : parts_) {
      Radical s;
      CycloCore absorb(1);
      detail::mul_radicals(basis[i], g, s, absorb);
      if (seen.insert(s).second) basis.push_back(s);
      if (basis.size() > 1024)
        throw UnsupportedExtension("radical closure too large for inversion");
    }
  }
  size_t n = basis.size();
  std::map<Radical, size_t> idx;
  for (size_t i = 0; i < n; ++i) idx.emplace(basis[i], i);
  std::vector<std::vector<CycloCore>> M(n, std::vector<CycloCore>(n + 1, CycloCore(0)));
  for (size_t j = 0; j < n; ++j) {
    for (const auto& [g, cg] : parts_) {
      Radical s;
      CycloCore absorb(1);
      detail::mul_radicals(basis[j], g, s, absorb);
      size_t i = idx.at(s);
      M[i][j] = M[i][j] + cg * absorb;
    }
  }
  M[0][n] = CycloCore(1);  // basis[0] is the trivial radical
  std::vector<long> pivot_of_col(n, -1);
  size_t row = 0;
  for (size_t col = 0; col < n && row < n; ++col) {
    size_t pr = row;
    while (pr < n && M[pr][col].is_zero()) ++pr;
    if (pr == n) continue;
    std::swap(M[pr], M[row]);
    CycloCore inv = M[row][col].inverse();
    for (size_t k = col; k <= n; ++k) M[row][k] = M[row][k] * inv;
    for (size_t i = 0; i < n; ++i) {
      if (i == row || M[i][col].is_zero()) continue;
      CycloCore f = M[i][col];
      for (size_t k = col; k <= n; ++k) M[i][k] = M[i][k] - f * M[row][k];
    }
    pivot_of_col[col] = (long)row;
    ++row;
  }
  for (size_t i = row; i < n; ++i)
    if (!M[i][n].is_zero())
      throw DivisionByZero("coefficient is not invertible in the radical span");
  Cyclo out;
  for (size_t col = 0; col < n; ++col)
    if (pivot_of_col[col] >= 0)
      out = out + radical_term(basis[col], M[(size_t)pivot_of_col[col]][n]);
  return out;
}

namespace detail {

// Square root of a cyclotomic number of monomial shape q * sqrt(d) * zeta_n^j
// (detected through its square); may leave the cyclotomic field into a
// 2-power radical.
inline Cyclo core_monomial_sqrt(CycloCore c) {
  c.canonicalize();
  if (c.is_rational()) return Cyclo(core_sqrt_rational(c.rational_value()));
  int n = c.order();
  for (long j = 1; j < n; ++j) {
    CycloCore u = c * CycloCore::zeta(n, n - j);
    if (u.is_rational())
      return Cyclo(core_sqrt_rational(u.rational_value()) * CycloCore::zeta(2 * n, j));
  }
  CycloCore c2 = c * c;
  c2.canonicalize();
  int n2 = c2.is_rational() ? 1 : c2.order();
  for (long j = 0; j < n2; ++j) {
    CycloCore u = c2 * CycloCore::zeta(n2, (n2 - j) % n2);
    if (!u.is_rational()) continue;
    Rational q = u.rational_value();  // c^2 = q * zeta_{n2}^j
    CycloCore s0 = core_sqrt_rational(q) * CycloCore::zeta(2 * n2, j);
    Cyclo S = rational_power(q, Rational(1, 4)) * Cyclo::zeta(4 * n2, j);
    if (c == s0) return S;
    if (c == -s0) return S * Cyclo::zeta(4, 1);
  }
  throw UnsupportedExtension("sqrt of a non-monomial cyclotomic number");
}

}  // namespace detail

// Exact square root of a rational (any sign), inside the cyclotomic field.
inline Cyclo cyclo_sqrt_rational(const Rational& q) {
  return Cyclo(detail::core_sqrt_rational(q));
}

// Square root of a coefficient. Supported shapes: single-radical terms whose
// cyclotomic factor is a rational multiple of a root of unity times a
// quadratic Gauss sum. Anything else raises UnsupportedExtension.
inline Cyclo cyclo_sqrt(Cyclo a) {
  a.canonicalize();
  if (a.is_zero()) return a;
  if (a.parts().size() != 1)
    throw UnsupportedExtension("sqrt of a non-monomial coefficient");
  const auto& [rad, c0] = *a.parts().begin();
  Cyclo s = detail::core_monomial_sqrt(c0);
  for (const auto& [p, ev] : rad.e)
    s = s * Cyclo::radical_monomial(p, ev / 2);
  return s;
}

// ---------------------------------------------------------------------------
// High-precision complex embedding zeta_n -> e^{2 pi i / n} (MPFR-backed).

class BigFloat {
 public:
  explicit BigFloat(mpfr_prec_t prec = 64) { mpfr_init2(x_, prec); mpfr_set_zero(x_, 1); }
  BigFloat(const BigFloat& o) { mpfr_init2(x_, mpfr_get_prec(o.x_)); mpfr_set(x_, o.x_, MPFR_RNDN); }
  BigFloat(BigFloat&& o) noexcept { mpfr_init2(x_, mpfr_get_prec(o.x_)); mpfr_swap(x_, o.x_); }
  BigFloat& operator=(BigFloat o) { mpfr_swap(x_, o.x_); return *this; }
  ~BigFloat() { mpfr_clear(x_); }
  mpfr_ptr get() { return x_; }
  mpfr_srcptr get() const { return x_; }
  double to_double() const { return mpfr_get_d(x_, MPFR_RNDN); }
 private:
  mpfr_t x_;
};

struct EmbedValue {
  BigFloat re, im;   // value at working precision
  double err;        // absolute error bound per component (conservative)
  double re_d() const { return re.to_double(); }
  double im_d() const { return im.to_double(); }
};

namespace detail {

inline void core_embed_acc(const CycloCore& a, mpfr_prec_t w, mpfr_ptr out_re,
                           mpfr_ptr out_im, double scale_abs, double& err) {
  BigFloat two_pi(w), theta(w), c(w), s(w), coef(w), tmp(w);
  mpfr_const_pi(two_pi.get(), MPFR_RNDN);
  mpfr_mul_ui(two_pi.get(), two_pi.get(), 2, MPFR_RNDN);
  double sum_abs = 0;
  int n = a.order();
  const auto& coords = a.coords();
  for (size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] == 0) continue;
    mpfr_set_q(coef.get(), coords[i].get_mpq_t(), MPFR_RNDN);
    sum_abs += std::abs(coords[i].get_d());
    mpfr_mul_ui(theta.get(), two_pi.get(), (unsigned long)i, MPFR_RNDN);
    mpfr_div_ui(theta.get(), theta.get(), (unsigned long)n, MPFR_RNDN);
    mpfr_cos(c.get(), theta.get(), MPFR_RNDN);
    mpfr_sin(s.get(), theta.get(), MPFR_RNDN);
    mpfr_mul(tmp.get(), coef.get(), c.get(), MPFR_RNDN);
    mpfr_mul_d(tmp.get(), tmp.get(), scale_abs, MPFR_RNDN);
    mpfr_add(out_re, out_re, tmp.get(), MPFR_RNDN);
    mpfr_mul(tmp.get(), coef.get(), s.get(), MPFR_RNDN);
    mpfr_mul_d(tmp.get(), tmp.get(), scale_abs, MPFR_RNDN);
    mpfr_add(out_im, out_im, tmp.get(), MPFR_RNDN);
  }
  // Each term costs a handful of correctly-rounded operations; bound the
  // accumulated rounding by (#terms + 8) ulps of the magnitude sum.
  err += (sum_abs * scale_abs + 1.0) * (double)(coords.size() + 8) *
         std::ldexp(4.0, (int)-w);
}

}  // namespace detail

inline EmbedValue cyclo_embed(const Cyclo& a, long precision_bits) {
  if (precision_bits < 32) throw Error("ParseError", "precision_bits must be >= 32");
  mpfr_prec_t w = precision_bits + 32;
  EmbedValue out{BigFloat(w), BigFloat(w), 0.0};
  BigFloat rv(w), base(w), ex(w);
  for (const auto& [rad, core] : a.parts()) {
    // real value of the radical factor
    mpfr_set_ui(rv.get(), 1, MPFR_RNDN);
    for (const auto& [p, e] : rad.e) {
      mpfr_set_z(base.get(), p.get_mpz_t(), MPFR_RNDN);
      mpfr_set_q(ex.get(), e.get_mpq_t(), MPFR_RNDN);
      mpfr_pow(base.get(), base.get(), ex.get(), MPFR_RNDN);
      mpfr_mul(rv.get(), rv.get(), base.get(), MPFR_RNDN);
    }
    double scale = mpfr_get_d(rv.get(), MPFR_RNDU);
    detail::core_embed_acc(core, w, out.re.get(), out.im.get(), scale, out.err);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text grammar: rationals `p/q`, roots of unity `z<n>^k`, `sqrt(<expr>)`,
// rational powers `p^(m/2^k)`, sums/products with parentheses.

namespace detail {

struct CycloParser {
  const std::string& s;
  size_t pos = 0;

  explicit CycloParser(const std::string& str) : s(str) {}

  void skip_ws() { while (pos < s.size() && std::isspace((unsigned char)s[pos])) ++pos; }
  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) { ++pos; return true; }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw Error("ParseError", msg + " at position " + std::to_string(pos) + " in '" + s + "'");
  }

  long parse_int() {
    skip_ws();
    size_t start = pos;
    if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) ++pos;
    while (pos < s.size() && std::isdigit((unsigned char)s[pos])) ++pos;
    if (pos == start || (pos == start + 1 && !std::isdigit((unsigned char)s[start])))
      fail("expected integer");
    return std::stol(s.substr(start, pos - start));
  }

  Cyclo parse_expr() {
    Cyclo v = parse_term();
    for (;;) {
      skip_ws();
      if (eat('+')) v = v + parse_term();
      else if (pos < s.size() && s[pos] == '-') v = v + parse_term();  // term eats sign
      else return v;
    }
  }

  Cyclo parse_term() {
    Cyclo v = parse_factor();
    while (eat('*')) v = v * parse_factor();
    return v;
  }

  Cyclo parse_factor() {
    skip_ws();
    if (eat('-')) return -parse_factor();
    Cyclo base = parse_base();
    skip_ws();
    if (eat('^')) {
      skip_ws();
      if (pos < s.size() && s[pos] == '(') {
        ++pos;
        long num = parse_int();
        long den = 1;
        skip_ws();
        if (eat('/')) den = parse_int();
        if (!eat(')')) fail("expected ')' in exponent");
        if (den == 1) return base.pow(num);
        if (!base.is_rational()) fail("fractional power needs a rational base");
        return rational_power(base.rational_value(), make_rational(num, den));
      }
      return base.pow(parse_int());
    }
    return base;
  }

  Cyclo parse_base() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end of input");
    if (eat('(')) {
      Cyclo v = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return v;
    }
    if (s.compare(pos, 5, "sqrt(") == 0) {
      pos += 5;
      Cyclo v = parse_expr();
      if (!eat(')')) fail("expected ')' after sqrt");
      return cyclo_sqrt(v);
    }
    if (s[pos] == 'z') {
      ++pos;
      long n = parse_int();
      if (n < 1) fail("root-of-unity order must be positive");
      return Cyclo::zeta((int)n, 1);
    }
    // rational p or p/q
    long num = parse_int();
    skip_ws();
    if (pos < s.size() && s[pos] == '/') {
      ++pos;
      long den = parse_int();
      return Cyclo(make_rational(num, den));
    }
    return Cyclo(Rational(num));
  }
};

}  // namespace detail

inline Cyclo parse_cyclo(const std::string& text) {
  detail::CycloParser p(text);
  Cyclo v = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return v;
}

namespace detail {

inline std::string core_to_string(CycloCore a) {
  a.canonicalize();
  if (a.is_rational()) return to_string(a.rational_value());
  std::string out;
  int n = a.order();
  const auto& c = a.coords();
  for (size_t k = 0; k < c.size(); ++k) {
    if (c[k] == 0) continue;
    Rational q = c[k];
    if (out.empty()) {
      if (q < 0) { out += "-"; q = -q; }
    } else {
      out += q < 0 ? " - " : " + ";
      if (q < 0) q = -q;
    }
    if (k == 0) { out += to_string(q); continue; }
    if (q != 1) out += to_string(q) + "*";
    out += "z" + std::to_string(n);
    if (k > 1) out += "^" + std::to_string(k);
  }
  return out.empty() ? "0" : out;
}

}  // namespace detail

// Canonical exact-form printing; round-trips through parse_cyclo.
inline std::string cyclo_to_string(Cyclo a) {
  a.canonicalize();
  if (a.is_zero()) return "0";
  std::string out;
  for (const auto& [rad, core] : a.parts()) {
    std::string cs = detail::core_to_string(core);
    std::string piece;
    if (rad.trivial()) {
      piece = cs;
    } else {
      std::string rs;
      for (const auto& [p, e] : rad.e) {
        if (!rs.empty()) rs += "*";
        rs += p.get_str() + "^(" + to_string(e) + ")";
      }
      if (cs == "1") piece = rs;
      else if (cs == "-1") piece = "-" + rs;
      else {
        bool compound = cs.find(' ') != std::string::npos;
        piece = (compound ? "(" + cs + ")" : cs) + "*" + rs;
      }
    }
    bool neg = !piece.empty() && piece[0] == '-' && piece.find(' ') == std::string::npos;
    if (out.empty()) out = piece;
    else if (neg) out += " - " + piece.substr(1);
    else out += " + " + piece;
  }
  return out;
}

}  // namespace pdyn
