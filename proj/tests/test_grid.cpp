#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pdyn/grid.hpp"

using namespace pdyn;

namespace {

// Critical grid of a period-2 critical orbit: even columns fully marked,
// odd columns marked in row 0 only.
MarkedGrid period2(int depth) {
  MarkedGrid g(depth);
  for (int l = 0; l <= depth; ++l)
    for (int k = 0; l + k <= depth; ++k)
      g.set(l, k, (l == 0 || k % 2 == 0) ? 1 : 0);
  g.period = 2;
  return g;
}

// Row 0 and column 0 marked, three extra marks in column 5; admissible for
// the first three rules, rejected by the fourth.
MarkedGrid md_counterexample(int depth = 10) {
  MarkedGrid g(depth);
  for (int k = 0; k <= depth; ++k) g.set(0, k, 1);
  for (int l = 0; l <= depth; ++l) g.set(l, 0, 1);
  g.set(1, 5, 1);
  g.set(2, 5, 1);
  g.set(3, 5, 1);
  return g;
}

}  // namespace

TEST_CASE("admissible grids pass") {
  CHECK(!check_admissible(MarkedGrid::full(8)).has_value());
  CHECK(!check_admissible(period2(9)).has_value());
  MarkedGrid trivial(6);
  for (int k = 0; k <= 6; ++k) trivial.set(0, k, 1);
  for (int l = 0; l <= 6; ++l) trivial.set(l, 0, 1);
  CHECK(!check_admissible(trivial).has_value());
  CHECK_NOTHROW(require_admissible(period2(7)));
}

TEST_CASE("rule Ma: columns are downward closed") {
  MarkedGrid g = period2(6);
  g.period.reset();
  g.set(3, 2, 0);  // hole below the mark at (4,2)
  auto v = check_admissible(g);
  REQUIRE(v.has_value());
  CHECK(v->rule == "Ma");
  CHECK(v->l == 3);
  CHECK(v->k == 2);
}

TEST_CASE("rule Mb: marked cells copy the critical diagonal") {
  MarkedGrid g = period2(4);
  g.period.reset();
  g.set(1, 3, 1);  // contradicts M_{2,2} marked with M_{1,1} unmarked
  auto v = check_admissible(g);
  REQUIRE(v.has_value());
  CHECK(v->rule == "Mb");
  CHECK(v->l == 1);
  CHECK(v->k == 3);
}

TEST_CASE("rule Mc violation") {
  MarkedGrid g(8);
  for (int k = 0; k <= 8; ++k) g.set(0, k, 1);
  for (int l = 0; l <= 8; ++l) g.set(l, 0, 1);
  g.set(1, 2, 1);
  g.set(2, 2, 1);
  g.set(1, 4, 1);  // forbidden: (l,k,m) = (2,2,2) forces M_{1,4} = 0
  auto v = check_admissible(g);
  REQUIRE(v.has_value());
  CHECK(v->rule == "Mc");
  CHECK(v->l == 1);
  CHECK(v->k == 4);
}

TEST_CASE("rule Md golden counterexample") {
  auto v = check_admissible(md_counterexample());
  REQUIRE(v.has_value());
  CHECK(v->rule == "Md");
  CHECK(v->l == 1);
  CHECK(v->k == 8);
  CHECK_THROWS_AS(require_admissible(md_counterexample()), Violation);
  try {
    require_admissible(md_counterexample());
  } catch (const Violation& e) {
    CHECK(e.rule == "Md");
  }
}

TEST_CASE("moduli of the fully marked grid") {
  GridModuli m = grid_moduli(MarkedGrid::full(6));
  for (long l = 0; l <= 6; ++l)
    CHECK(m.moduli[(size_t)l] == Rational(2) * pow2_neg((unsigned long)l));
  // log r_1 = 2 - (2 + 1) = -1
  CHECK(m.log_r[1] == Rational(-1));
  CHECK(m.log_r[0] == Rational(0));
}

TEST_CASE("moduli of a non-critical branch") {
  // column 0 marked at row 0 only: S_1 = 0, mod A_1 = 2, log r_1 = -2
  MarkedGrid g(4);
  for (int k = 0; k <= 4; ++k) g.set(0, k, 1);
  GridModuli m = grid_moduli(g);
  CHECK(m.moduli[1] == Rational(2));
  CHECK(m.log_r[1] == Rational(-2));
}

TEST_CASE("moduli of the period-2 grid") {
  GridModuli m = grid_moduli(period2(8));
  std::vector<Rational> expect = {Rational(2), Rational(1), Rational(1),
                                  Rational(1, 2), Rational(1, 2)};
  for (size_t l = 0; l < expect.size(); ++l) CHECK(m.moduli[l] == expect[l]);
  // each period halves the moduli: sum over all levels = 2+1+1+1/2+1/2+... = 6
  for (size_t l = 1; l + 2 < m.moduli.size(); ++l)
    CHECK(m.moduli[l + 2] == m.moduli[l] / 2);
}

TEST_CASE("periodic column lookup") {
  MarkedGrid g = period2(6);
  CHECK(g.at(3, 8) == g.at(3, 0));
  CHECK(g.at(2, 7) == g.at(2, 1));
  CHECK_THROWS(MarkedGrid(4).at(3, 3));
}
