#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "pdyn/cyclo.hpp"

using namespace pdyn;

namespace {

// Deterministic sample pool for property tests.
std::vector<Cyclo> sample_pool() {
  std::vector<Cyclo> v;
  v.push_back(Cyclo(Rational(3, 7)));
  v.push_back(Cyclo(-2));
  v.push_back(Cyclo::zeta(4));
  v.push_back(Cyclo::zeta(3));
  v.push_back(Cyclo::zeta(8, 3) + Cyclo(Rational(1, 2)));
  v.push_back(Cyclo::zeta(12, 5) - Cyclo::zeta(3, 2));
  v.push_back(cyclo_sqrt_rational(Rational(2)));
  v.push_back(cyclo_sqrt_rational(Rational(-3, 4)));
  v.push_back(Cyclo::zeta(5) + Cyclo::zeta(5, 4));
  return v;
}

double embed_dist(const Cyclo& a, double re, double im) {
  auto e = cyclo_embed(a, 64);
  return std::hypot(e.re_d() - re, e.im_d() - im);
}

}  // namespace

TEST_CASE("basic root-of-unity arithmetic") {
  CHECK(Cyclo::zeta(4) * Cyclo::zeta(4) == Cyclo(-1));
  CHECK(Cyclo::zeta(3) + Cyclo::zeta(3, 2) == Cyclo(-1));
  Cyclo inv = Cyclo(1) / (Cyclo(1) + Cyclo::zeta(4));
  CHECK(inv * (Cyclo(1) + Cyclo::zeta(4)) == Cyclo(1));
  // (1 - zeta_4)/2 is the known closed form.
  CHECK(inv == (Cyclo(1) - Cyclo::zeta(4)) * Cyclo(Rational(1, 2)));
  CHECK_THROWS_AS(Cyclo(3) / Cyclo(0), DivisionByZero);
}

TEST_CASE("field axioms on samples") {
  auto pool = sample_pool();
  for (size_t i = 0; i < pool.size(); ++i)
    for (size_t j = 0; j < pool.size(); ++j) {
      const Cyclo &a = pool[i], &b = pool[j];
      const Cyclo& c = pool[(i + j) % pool.size()];
      CHECK((a + b) + c == a + (b + c));
      CHECK(a * (b + c) == a * b + a * c);
      CHECK(a * b == b * a);
      if (!a.is_zero()) CHECK(a * a.inverse() == Cyclo(1));
    }
}

TEST_CASE("embedding accuracy and homomorphism") {
  // embed(zeta_3) = -1/2 + sqrt(3)/2 i, certified to 2^-60 at 64 bits.
  auto e3 = cyclo_embed(Cyclo::zeta(3), 64);
  CHECK(e3.err <= std::ldexp(1.0, -60));
  BigFloat ref(128), half(128);
  mpfr_sqrt_ui(ref.get(), 3, MPFR_RNDN);
  mpfr_div_ui(ref.get(), ref.get(), 2, MPFR_RNDN);
  mpfr_sub(ref.get(), ref.get(), e3.im.get(), MPFR_RNDN);
  mpfr_abs(ref.get(), ref.get(), MPFR_RNDN);
  CHECK(ref.to_double() <= std::ldexp(1.0, -60));
  CHECK(std::abs(e3.re_d() + 0.5) < 1e-15);

  CHECK(embed_dist(Cyclo(-1), -1.0, 0.0) == 0.0);

  // zeta_8 + zeta_8^-1 = sqrt(2)
  auto r2 = cyclo_embed(Cyclo::zeta(8) + Cyclo::zeta(8, 7), 64);
  CHECK(std::abs(r2.re_d() - std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs(r2.im_d()) < 1e-14);

  // homomorphism within bounds
  auto pool = sample_pool();
  for (size_t i = 0; i + 1 < pool.size(); ++i) {
    auto ea = cyclo_embed(pool[i], 64);
    auto eb = cyclo_embed(pool[i + 1], 64);
    auto eab = cyclo_embed(pool[i] * pool[i + 1], 64);
    double re = ea.re_d() * eb.re_d() - ea.im_d() * eb.im_d();
    double im = ea.re_d() * eb.im_d() + ea.im_d() * eb.re_d();
    CHECK(std::hypot(eab.re_d() - re, eab.im_d() - im) < 1e-12);
  }
}

TEST_CASE("gauss-sum square roots") {
  for (long d : {2L, 3L, 5L, 6L, 7L, 10L, 15L}) {
    Cyclo s = cyclo_sqrt_rational(Rational(d));
    CHECK(s * s == Cyclo(Rational(d)));
    auto e = cyclo_embed(s, 64);
    CHECK(e.re_d() > 0);  // positive branch
    CHECK(std::abs(e.re_d() - std::sqrt((double)d)) < 1e-12);
    CHECK(std::abs(e.im_d()) < 1e-12);
  }
  Cyclo third = cyclo_sqrt_rational(Rational(1, 3));
  CHECK(third * third == Cyclo(Rational(1, 3)));
  Cyclo neg = cyclo_sqrt_rational(Rational(-4));
  CHECK(neg * neg == Cyclo(-4));
  // sqrt of a monomial: sqrt(zeta_3) = zeta_6 branch, squares back.
  Cyclo z = cyclo_sqrt(Cyclo::zeta(3));
  CHECK(z * z == Cyclo::zeta(3));
  CHECK_THROWS_AS(cyclo_sqrt(Cyclo(1) + Cyclo::zeta(5)), UnsupportedExtension);
}

TEST_CASE("parse/print round-trip") {
  for (const char* text : {"3/4", "-2", "z4", "z8^3", "1/2 + 1/2*z4",
                           "sqrt(2)", "sqrt(3) * z12^5", "(1 + z4)^2",
                           "2*z5 - z5^3", "sqrt(1/3)"}) {
    Cyclo a = parse_cyclo(text);
    Cyclo b = parse_cyclo(cyclo_to_string(a));
    CHECK(a == b);
  }
  CHECK(parse_cyclo("z4^2") == Cyclo(-1));
  CHECK(parse_cyclo("z3 + z3^2") == Cyclo(-1));
  CHECK(parse_cyclo("sqrt(2)") * parse_cyclo("sqrt(2)") == Cyclo(2));
  CHECK_THROWS(parse_cyclo("3//4"));
  CHECK_THROWS(parse_cyclo(""));
}

TEST_CASE("2-power radicals of rationals") {
  // oracle: (3^(1/4))^4 = 3 and the embedding is the real positive branch
  Cyclo q = rational_power(Rational(3), Rational(1, 4));
  CHECK(q.pow(4) == Cyclo(3));
  CHECK(q * q == cyclo_sqrt_rational(Rational(3)));
  auto e = cyclo_embed(q, 64);
  CHECK(std::abs(e.re_d() - std::pow(3.0, 0.25)) < 1e-12);
  CHECK(std::abs(e.im_d()) < 1e-12);

  // iterated square roots stay in the ring
  Cyclo r = cyclo_sqrt(cyclo_sqrt(cyclo_sqrt(Cyclo(5))));
  CHECK(r.pow(8) == Cyclo(5));

  // half-integer exponent parts collapse into the cyclotomic field
  CHECK(rational_power(Rational(3), Rational(3, 4)) ==
        cyclo_sqrt_rational(Rational(3)) * q);
  CHECK(rational_power(Rational(2), Rational(1, 2)).is_core());
  CHECK(rational_power(Rational(1, 3), Rational(1, 4)) * q == Cyclo(1));

  // negative base picks up a root of unity with the right square
  Cyclo n = rational_power(Rational(-3), Rational(1, 4));
  CHECK(n.pow(4) == Cyclo(-3));

  // sums with radicals: ring ops and inversion
  Cyclo s = Cyclo(1) + q;
  CHECK(s * s == Cyclo(1) + Cyclo(2) * q + cyclo_sqrt_rational(Rational(3)));
  CHECK(s * s.inverse() == Cyclo(1));
  Cyclo m = Cyclo::zeta(8, 3) * rational_power(Rational(2), Rational(1, 8)) -
            Cyclo(Rational(1, 2));
  CHECK(m * m.inverse() == Cyclo(1));

  // cube roots of 2-power radicals are outside the ring
  CHECK_THROWS_AS(rational_power(Rational(2), Rational(1, 3)),
                  UnsupportedExtension);

  // round-trip through the text grammar
  for (const char* text : {"3^(1/4)", "-1/3*3^(1/4)", "sqrt(sqrt(2))",
                           "z16*2^(1/8) + 1/2", "(z24 + z24^5)*3^(3/8)"}) {
    Cyclo a = parse_cyclo(text);
    CHECK(parse_cyclo(cyclo_to_string(a)) == a);
  }
}

TEST_CASE("canonicalization finds least order") {
  Cyclo a = Cyclo::zeta(12, 4);  // = zeta_3
  a.canonicalize();
  CHECK(a.order() == 3);
  Cyclo b = Cyclo::zeta(8) * Cyclo::zeta(8, 7);  // = 1
  CHECK(b.is_rational());
  CHECK(b.rational_value() == 1);
}
