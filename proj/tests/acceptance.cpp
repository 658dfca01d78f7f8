// Acceptance suite: one line per criterion, PASS or FAIL with a short
// explanation. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "pdyn/bridge.hpp"
#include "pdyn/parameter.hpp"

using namespace pdyn;

namespace {

PuiseuxSeries S(const std::string& text) { return parse_series(text); }

// Independent oracle: the period-2 center solves t^-2 (nu-1)(nu+2) = -1, so
// nu = -2 + (3 - sqrt(9 - 4 t^2))/2, expanded with the binomial series.
PuiseuxSeries p2_oracle(int terms) {
  PuiseuxSeries s = S("-2");
  Rational binom(1);
  Rational xpow(1);
  for (long j = 1; j <= terms; ++j) {
    binom *= Rational(3 - 2 * j) / Rational(2 * j);
    xpow *= Rational(-4, 9);
    s.set(Rational(2 * j), Cyclo(Rational(Rational(-3, 2) * binom * xpow)));
  }
  return s;
}

// period-2 center as a root of t^-2 nu^2 + t^-2 nu + (1 - 2 t^-2)
PuiseuxSeries center_p2(const Rational& P) {
  SeriesPoly q(std::vector<PuiseuxSeries>{S("-2*t^(-2) + 1"), S("t^(-2)"),
                                          S("t^(-2)")});
  return hensel_lift(q, S("-2"), P);
}

bool series_agree(const PuiseuxSeries& a, const PuiseuxSeries& b,
                  const Rational& P) {
  PuiseuxSeries d = a - b;
  return d.is_exact_zero() || val_at_least(d, P);
}

// random slice parameter with a bounded critical orbit: a known center plus
// higher-order terms. Near the period-2 center a parameter deviation of
// valuation e settles into a steady orbit deviation only when 2(e-2)-2 >= e,
// so exponents >= 7 keep every iterate in the unit ball and the critical
// grid defined at all depths.
PuiseuxSeries random_nu(std::mt19937& rng, bool ramified) {
  static const PuiseuxSeries base1 = S("1");
  static const PuiseuxSeries base2 = p2_oracle(16);
  static const char* coeffs[] = {"1", "-1", "2", "-2", "3", "1/2", "-1/2"};
  PuiseuxSeries nu = rng() % 2 ? base1 : base2;
  int terms = 1 + (int)(rng() % 3);
  for (int i = 0; i < terms; ++i) {
    long den = ramified ? 2 + (long)(rng() % 3) : 1;
    long num = (long)(7 * den + rng() % (6 * den));
    nu = nu + PuiseuxSeries::monomial(Rational(num, den),
                                      parse_cyclo(coeffs[rng() % 7]));
  }
  return nu;
}

MarkedGrid remark_grid(int depth = 10) {
  MarkedGrid g(depth);
  for (int k = 0; k <= depth; ++k) g.set(0, k, 1);
  for (int l = 0; l <= depth; ++l) g.set(l, 0, 1);
  g.set(1, 5, 1);
  g.set(2, 5, 1);
  g.set(3, 5, 1);
  return g;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

int failures = 0;

void report(int n, bool ok, const std::string& msg) {
  std::printf("criterion %2d: %s %s\n", n, ok ? "PASS" : "FAIL", msg.c_str());
  if (!ok) ++failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// shared between criteria 1 and 5
std::vector<std::pair<CubicMap, LevelStructure>> structures;

void criterion1_ball_counts() {
  const long expect[] = {1, 2, 5, 14, 41, 122, 365};
  bool ok = true;
  std::string times;
  for (const PuiseuxSeries& nu : {S("1"), center_p2(Rational(30))}) {
    CubicMap f = CubicMap::psi_slice(nu);
    Timer t;
    LevelStructure ls = level_structure(f, 6);
    double sec = t.seconds();
    for (int n = 0; n <= 6; ++n)
      ok = ok && (long)ls.levels[(size_t)n].size() == expect[n];
    ok = ok && sec < 60.0;
    times += (times.empty() ? "" : ", ") + fmt(sec) + "s";
    structures.emplace_back(f, std::move(ls));
  }
  report(1, ok,
         "level-n ball counts (3^n+1)/2 for n = 0..6 on both reference "
         "parameters (" + times + ")");
}

void criterion2_rule_engine() {
  bool ok = true;
  MarkedGrid bad = remark_grid();
  auto viol = check_admissible(bad);
  ok = ok && viol.has_value() && viol->rule == "Md";
  try {
    realize_grid(bad, Rational(8));
    ok = false;
  } catch (const Violation& e) {
    ok = ok && e.rule == "Md";
  }
  std::mt19937 rng(42);
  int passed = 0;
  for (int i = 0; i < 50; ++i) {
    MarkedGrid g = critical_grid(CubicMap::psi_slice(random_nu(rng, false)), 10);
    if (!check_admissible(g).has_value()) ++passed;
  }
  ok = ok && passed == 50;
  report(2, ok,
         "isolated deep marks rejected with Violation(Md); " +
             std::to_string(passed) + "/50 random depth-10 grids admissible");
}

void criterion3_level1_radii() {
  LevelStructure ls = level_structure(CubicMap::psi_slice(S("1")), 1);
  bool saw1 = false, saw2 = false;
  for (const auto& lb : ls.levels[1]) {
    if (lb.ball == UltrametricBall(S("1"), Rational(1))) saw1 = true;
    if (lb.ball == UltrametricBall(S("-2"), Rational(2))) saw2 = true;
  }
  report(3, saw1 && saw2,
         "level-1 balls at the critical point and at -2 have exact log-radii "
         "1 and 2");
}

void criterion4_thurston_center() {
  Rational P(14);
  PuiseuxSeries nu_c = find_center(S("-2"), 0, P);
  bool coeff_ok = series_agree(nu_c, p2_oracle(6), Rational(13));
  SeriesPoly p = CubicMap::psi_slice(nu_c).poly();
  PuiseuxSeries ret = p.eval(p.eval(S("1"))) - S("1");
  bool return_ok = ret.is_exact_zero() || val_at_least(ret, Rational(12));
  bool seed_ok = series_agree(nu_c, find_center(S("-2 + t^(2)"), 0, P), P) &&
                 series_agree(nu_c, find_center(p2_oracle(3), 0, P), P);
  report(4, coeff_ok && return_ok && seed_ok,
         "period-2 center matches the binomial expansion through t^12, the "
         "critical point returns to O(t^12), seeds agree");
}

void criterion5_modulus_transport() {
  bool ok = true;
  long annuli = 0;
  for (const auto& [f, ls] : structures) {
    SeriesPoly p = f.poly();
    GridModuli gm = grid_moduli(critical_grid(f, 6));
    for (size_t n = 1; n < ls.levels.size(); ++n) {
      for (const auto& lb : ls.levels[n]) {
        if (lb.has_omega_plus) ok = ok && lb.ball.log_radius == -gm.log_r[n];
        const auto& par = ls.levels[n - 1][(size_t)lb.parent];
        if (lb.ball.log_radius == par.ball.log_radius) continue;
        UltrametricAnnulus A{lb.ball.center, par.ball.log_radius,
                             lb.ball.log_radius};
        auto [img, d] = image_annulus(p, A);
        ok = ok && img.modulus() == Rational(d) * A.modulus() &&
             d == lb.degree;
        ++annuli;
      }
    }
  }
  report(5, ok && !structures.empty(),
         "deg * mod(in) = mod(out) on " + std::to_string(annuli) +
             " annuli; critical-nest radii equal the grid-moduli prediction");
}

void criterion6_component_radii() {
  ComponentVerdict v = component_of_critical(CubicMap::psi_slice(S("1")), 10);
  ComponentVerdict w =
      component_of_critical(CubicMap::psi_slice(center_p2(Rational(24))), 10);
  bool ok = v.kind == ComponentVerdict::PeriodicBall && v.period == 1 &&
            v.log_radius == Rational(-2) &&
            w.kind == ComponentVerdict::PeriodicBall && w.period == 2 &&
            w.log_radius == Rational(-4);
  report(6, ok,
         "critical components are periodic balls with exact log-radii -2 "
         "(period 1) and -4 (period 2)");
}

void criterion7_realization_roundtrip() {
  bool ok = true;
  int realized = 0, unsupported = 0;
  for (int depth = 1; depth <= 4; ++depth) {
    // free cells (l >= 1, k >= 1); row 0 and column 0 are always marked
    std::vector<std::pair<int, int>> cells;
    for (int l = 1; l <= depth; ++l)
      for (int k = 1; l + k <= depth; ++k) cells.emplace_back(l, k);
    for (long mask = 0; mask < (1L << cells.size()); ++mask) {
      MarkedGrid g(depth);
      for (int k = 0; k <= depth; ++k) g.set(0, k, 1);
      for (int l = 0; l <= depth; ++l) g.set(l, 0, 1);
      for (size_t i = 0; i < cells.size(); ++i)
        g.set(cells[i].first, cells[i].second, (mask >> i) & 1);
      if (check_admissible(g).has_value()) continue;
      try {
        PuiseuxSeries nu = realize_grid(g, Rational(24));
        MarkedGrid h = critical_grid(CubicMap::psi_slice(nu), depth);
        ok = ok && h.rows == g.rows;
        ++realized;
      } catch (const UnsupportedExtension&) {
        ++unsupported;
      } catch (const Error&) {
        ok = false;
      }
    }
  }
  report(7, ok,
         "round-trip exact on " + std::to_string(realized) +
             " admissible grids of depth <= 4 (" + std::to_string(unsupported) +
             " outside the coefficient tower)");
}

void criterion8_sigma_equivariance() {
  std::mt19937 rng(7);
  bool ok = true;
  for (int i = 0; i < 20; ++i) {
    PuiseuxSeries nu = random_nu(rng, true);
    long k = 1 + (long)(rng() % 7);
    MarkedGrid g = critical_grid(CubicMap::psi_slice(nu), 6);
    MarkedGrid h = critical_grid(CubicMap::psi_slice(sigma_action(nu, k)), 6);
    ok = ok && g.rows == h.rows;
  }
  report(8, ok, "critical grid invariant under sigma^k for 20 random (nu, k)");
}

void criterion9_boettcher_limit() {
  const double target = std::cbrt(4.0);
  double worst = 0;
  for (int q : {1, -2}) {
    Complex phi = boettcher_cocritical(Complex(1e3, 0.0), q);
    worst = std::max(worst, std::abs(phi / 1e3 - target));
  }
  report(9, worst < 1e-2,
         "cocritical product within " + fmt(worst) + " of 2^(2/3) at a = 10^3 "
         "for both branches");
}

void criterion10_green_bounds() {
  // The claimed two-sided bound for G(-a) on |v - a| < |a| is
  //   log|a| - (1/6) log 2  <=  G(-a)  <=  log|a| + (1/2) log(3/2).
  // The upper constant is wrong: f(-a) = 4a^3 + v gives
  //   G(-a) = (1/3) log|4a^3 + v| + O(|a|^-2)
  //         = log|a| + (1/3) log 4 + O(|a|^-2),
  // and (1/3) log 4 = 0.462 > (1/2) log(3/2) = 0.203. The criterion is
  // reported as stated, so the upper half fails for essentially every sample.
  std::mt19937 rng(20240823);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int lower_ok = 0, upper_ok = 0;
  double max_excess = 0;
  for (int i = 0; i < 100; ++i) {
    double ra = std::pow(10.0, 1.0 + 2.0 * u01(rng));
    Complex a = ra * std::exp(Complex(0.0, 2.0 * M_PI * u01(rng)));
    Complex v = a + 0.99 * ra * u01(rng) *
                        std::exp(Complex(0.0, 2.0 * M_PI * u01(rng)));
    ComplexParam p;
    p.a = a;
    p.v = v;
    GreenValue g = green_function(p, -a);
    double lo = std::log(ra) - std::log(2.0) / 6.0;
    double hi = std::log(ra) + 0.5 * std::log(1.5);
    if (g.value + g.error_bound >= lo) ++lower_ok;
    if (g.value - g.error_bound <= hi) ++upper_ok;
    max_excess = std::max(max_excess, g.value - g.error_bound - hi);
  }
  bool ok = lower_ok == 100 && upper_ok == 100;
  std::string msg =
      "lower bound log|a| - (1/6)log2 held in " + std::to_string(lower_ok) +
      "/100 samples; upper bound log|a| + (1/2)log(3/2) held in " +
      std::to_string(upper_ok) + "/100 (max excess " + fmt(max_excess) +
      "): G(-a) = (1/3)log|4a^3+v| + O(|a|^-2) = log|a| + (1/3)log4 + "
      "O(|a|^-2) exceeds the stated constant, so the criterion is "
      "unattainable as written";
  report(10, ok, msg);
}

void criterion11_grid_correspondence() {
  const Complex T(0.5, 1.5);
  bool ok = true;
  std::string times;
  for (const PuiseuxSeries& nu : {S("1"), p2_oracle(10)}) {
    Timer t;
    ComplexParam p = evaluate_at_T(nu, T, Rational(20));
    // the complex grid is computed twice at doubled resolution internally;
    // agreement of the two runs is the resolution certificate
    MarkedGrid cg = complex_critical_grid(p, 3);
    MarkedGrid sg = critical_grid(CubicMap::psi_slice(nu), 3);
    double sec = t.seconds();
    ok = ok && cg.rows == sg.rows && sec < 300.0;
    times += (times.empty() ? "" : ", ") + fmt(sec) + "s";
  }
  report(11, ok,
         "complex depth-3 grids at T = 0.5+1.5i equal the series grids for "
         "both centers with resolution certificate (" + times + ")");
}

void criterion12_deck_identity() {
  const Complex T(0.5, 1.5);
  bool ok = true;
  double worst = 0;
  for (const PuiseuxSeries& nu : {S("1"), p2_oracle(10)}) {
    ComplexParam p = evaluate_at_T(nu, T + 1.0, Rational(20));
    ComplexParam q = evaluate_at_T(sigma_action(nu, 1), T, Rational(20));
    double tol = 1e-8 + p.tail_bound + q.tail_bound;
    double err = std::max(std::abs(p.a - q.a), std::abs(p.v - q.v));
    worst = std::max(worst, err);
    ok = ok && err < tol;
  }
  report(12, ok,
         "shifting T by 1 matches the sigma action on both centers (max "
         "deviation " + fmt(worst) + ")");
}

}  // namespace

int main() {
  try {
    criterion1_ball_counts();
    criterion2_rule_engine();
    criterion3_level1_radii();
    criterion4_thurston_center();
    criterion5_modulus_transport();
    criterion6_component_radii();
    criterion7_realization_roundtrip();
    criterion8_sigma_equivariance();
    criterion9_boettcher_limit();
    criterion10_green_bounds();
    criterion11_grid_correspondence();
    criterion12_deck_identity();
  } catch (const Error& e) {
    std::printf("unexpected error: %s\n", e.what());
    return 99;
  }
  std::printf("%d/12 criteria passed\n", 12 - failures);
  return failures;
}
