#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <numeric>
#include <string>

#include "pdyn/errors.hpp"

namespace pdyn {

// Exact rationals. mpq_class already keeps the canonical form we need
// (reduced, positive denominator) as long as canonicalize() runs after any
// raw numerator/denominator surgery; all constructors below do that.
using Rational = mpq_class;
using Integer = mpz_class;

inline Rational make_rational(long num, long den = 1) {
  if (den == 0) throw DivisionByZero("rational with zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

// Parses "p", "-p", "p/q". Throws on malformed input.
inline Rational parse_rational(const std::string& s) {
  if (s.empty()) throw Error("ParseError", "empty rational");
  Rational q;
  if (q.set_str(s, 10) != 0)
    throw Error("ParseError", "bad rational: " + s);
  if (q.get_den() == 0) throw DivisionByZero("rational with zero denominator");
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline bool is_integer(const Rational& q) { return q.get_den() == 1; }

inline long to_long(const Integer& z) {
  if (!z.fits_slong_p()) throw Error("Overflow", "integer out of long range");
  return z.get_si();
}

// floor(p/q) as an Integer.
inline Integer rational_floor(const Rational& q) {
  Integer f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
  return f;
}

inline Rational rational_abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

// Smallest s >= 1 with s*q integral: the reduced denominator.
inline Integer denominator_of(const Rational& q) { return q.get_den(); }

// 2^-e as an exact rational (e >= 0).
inline Rational pow2_neg(unsigned long e) {
  Integer d;
  mpz_ui_pow_ui(d.get_mpz_t(), 2, e);
  Rational q(1, d);
  q.canonicalize();
  return q;
}

}  // namespace pdyn
