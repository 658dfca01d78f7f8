#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "pdyn/puiseux.hpp"

namespace pdyn {

// Polynomial over the Puiseux field, coefficients c[0] + c[1] x + ... + c[d] x^d.
struct SeriesPoly {
  std::vector<PuiseuxSeries> c;

  SeriesPoly() = default;
  explicit SeriesPoly(std::vector<PuiseuxSeries> coeffs) : c(std::move(coeffs)) { trim(); }

  void trim() {
    while (c.size() > 1 && c.back().is_exact_zero()) c.pop_back();
  }
  int degree() const { return (int)c.size() - 1; }

  PuiseuxSeries eval(const PuiseuxSeries& x) const {
    PuiseuxSeries acc;
    for (int i = degree(); i >= 0; --i) acc = acc * x + c[i];
    return acc;
  }

  SeriesPoly derivative() const {
    std::vector<PuiseuxSeries> d;
    for (size_t i = 1; i < c.size(); ++i)
      d.push_back(c[i].scaled(Cyclo((long)i)));
    if (d.empty()) d.push_back(PuiseuxSeries());
    return SeriesPoly(std::move(d));
  }

  // f(center + u) as a polynomial in u (binomial expansion; degrees are tiny).
  SeriesPoly shifted(const PuiseuxSeries& center) const {
    int d = degree();
    std::vector<PuiseuxSeries> g(d + 1);
    std::vector<PuiseuxSeries> cpow(d + 1);
    cpow[0] = PuiseuxSeries(1);
    for (int i = 1; i <= d; ++i) cpow[i] = cpow[i - 1] * center;
    for (int j = 0; j <= d; ++j) {
      PuiseuxSeries acc;
      Integer binom = 1;  // C(i, j), updated along i
      for (int i = j; i <= d; ++i) {
        if (i > j) binom = binom * i / (i - j);
        acc = acc + c[i] * cpow[i - j].scaled(Cyclo(Rational(binom)));
      }
      g[j] = acc;
    }
    return SeriesPoly(std::move(g));
  }

  // Exact synthetic division by (x - root); remainder must vanish.
  SeriesPoly deflated(const PuiseuxSeries& root) const {
    int d = degree();
    std::vector<PuiseuxSeries> q(d);
    PuiseuxSeries carry = c[d];
    for (int i = d - 1; i >= 0; --i) {
      q[i] = carry;
      carry = carry * root + c[i];
    }
    return SeriesPoly(std::move(q));
  }
};

// helper: "o(s) >= P" decidable for truncated series
inline bool val_at_least(const PuiseuxSeries& s, const Rational& P) {
  if (!s.terms().empty()) return s.terms().begin()->first >= P;
  if (s.is_exact()) return true;
  if (*s.precision() >= P) return true;
  throw PrecisionInsufficient("cannot certify valuation >= " + to_string(P) +
                              " at precision O(t^(" + to_string(*s.precision()) + "))");
}

// Procedure: val_above
// Strict variant: certify o(s) > P or throw when undecidable.
inline bool val_above(const PuiseuxSeries& s, const Rational& P) {
  if (!s.terms().empty()) return s.terms().begin()->first > P;
  if (s.is_exact()) return true;
  if (*s.precision() > P) return true;
  throw PrecisionInsufficient("cannot certify valuation > " + to_string(P) +
                              " at precision O(t^(" + to_string(*s.precision()) + "))");
}

// ---------------------------------------------------------------------------
// Newton polygon

struct NewtonPolygon {
  long zero_multiplicity = 0;                       // roots exactly 0
  std::vector<std::pair<Rational, long>> segments;  // (root valuation, count)
};

inline NewtonPolygon newton_polygon(const SeriesPoly& f) {
  int d = f.degree();
  if (d < 1 || f.c[d].is_exact_zero())
    throw Error("ParseError", "newton_polygon needs degree >= 1 with nonzero lead");
  std::vector<std::pair<long, Rational>> pts;  // (i, o(c_i)), skipping exact zeros
  long lowest = -1;
  for (int i = 0; i <= d; ++i) {
    if (f.c[i].is_exact_zero()) continue;
    pts.emplace_back(i, f.c[i].valuation().value());  // throws if indeterminate
    if (lowest < 0) lowest = i;
  }
  NewtonPolygon np;
  np.zero_multiplicity = lowest;
  // lower convex hull, left to right (slopes strictly increasing)
  std::vector<std::pair<long, Rational>> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull[hull.size() - 1];
      // keep b only if it is strictly below segment a..p
      if ((b.second - a.second) * (p.first - a.first) <
          (p.second - a.second) * (b.first - a.first))
        break;
      hull.pop_back();
    }
    hull.push_back(p);
  }
  for (size_t k = 0; k + 1 < hull.size(); ++k) {
    Rational slope = (hull[k + 1].second - hull[k].second) /
                     Rational(hull[k + 1].first - hull[k].first);
    np.segments.emplace_back(-slope, hull[k + 1].first - hull[k].first);
  }
  return np;
}

// ---------------------------------------------------------------------------
// Residue equations over the coefficient field (degree <= 3 solver)

namespace detail {

inline std::vector<std::pair<Cyclo, int>> solve_quadratic(const Cyclo& b, const Cyclo& c) {
  // monic x^2 + b x + c
  Cyclo disc = b * b - Cyclo(4) * c;
  Cyclo half(Rational(1, 2));
  if (disc.is_zero()) return {{-b * half, 2}};
  Cyclo s = cyclo_sqrt(disc);
  return {{(-b + s) * half, 1}, {(-b - s) * half, 1}};
}

inline std::vector<Integer> integer_divisors(Integer n, size_t cap = 4096) {
  if (n < 0) n = -n;
  std::vector<Integer> divs;
  for (Integer i = 1; i * i <= n; ++i) {
    if (n % i == 0) {
      divs.push_back(i);
      divs.push_back(n / i);
      if (divs.size() > cap) throw UnsupportedExtension("too many divisors in rational root search");
    }
  }
  return divs;
}

inline std::optional<Cyclo> cyclo_cbrt(Cyclo a) {
  a.canonicalize();
  // 2-power radicals admit no cube roots in the coefficient ring
  if (!a.is_core()) return std::nullopt;
  auto rational_cbrt = [](const Rational& q) -> std::optional<Rational> {
    Integer num = q.get_num(), den = q.get_den();
    bool neg = num < 0;
    if (neg) num = -num;
    Integer rn, rd;
    if (!mpz_root(rn.get_mpz_t(), num.get_mpz_t(), 3)) return std::nullopt;
    if (!mpz_root(rd.get_mpz_t(), den.get_mpz_t(), 3)) return std::nullopt;
    Rational r(neg ? -rn : rn, rd);
    r.canonicalize();
    return r;
  };
  if (a.is_rational()) {
    auto r = rational_cbrt(a.rational_value());
    if (!r) return std::nullopt;
    return Cyclo(*r);
  }
  int n = a.order();
  for (long j = 1; j < n; ++j) {
    Cyclo u = a * Cyclo::zeta(n, n - j);
    if (u.is_rational()) {
      auto r = rational_cbrt(u.rational_value());
      if (!r) return std::nullopt;
      return Cyclo(*r) * Cyclo::zeta(3 * n, j);
    }
  }
  return std::nullopt;
}

}  // namespace detail

// All roots (with multiplicity) of a polynomial over the cyclotomic tower,
// degree <= 3. Raises UnsupportedExtension when a root lies outside the tower.
inline std::vector<std::pair<Cyclo, int>> solve_cyclo_poly(std::vector<Cyclo> p) {
  while (!p.empty() && p.back().is_zero()) p.pop_back();
  if (p.size() <= 1) return {};
  std::vector<std::pair<Cyclo, int>> roots;
  // zero roots
  size_t z = 0;
  while (z < p.size() && p[z].is_zero()) ++z;
  if (z > 0) {
    roots.push_back({Cyclo(0), (int)z});
    p.erase(p.begin(), p.begin() + z);
  }
  int d = (int)p.size() - 1;
  auto merge = [&roots](const Cyclo& r, int m) {
    for (auto& [root, mult] : roots)
      if (root == r) { mult += m; return; }
    roots.push_back({r, m});
  };
  if (d == 0) return roots;
  if (d == 1) {
    merge(-p[0] / p[1], 1);
    return roots;
  }
  if (d == 2) {
    for (auto& [r, m] : detail::solve_quadratic(p[1] / p[2], p[0] / p[2])) merge(r, m);
    return roots;
  }
  if (d != 3) throw UnsupportedExtension("residue polynomial degree > 3");
  Cyclo A = p[2] / p[3], B = p[1] / p[3], C = p[0] / p[3];  // monic x^3+Ax^2+Bx+C
  // rational-root search when everything is rational
  if (A.is_rational() && B.is_rational() && C.is_rational()) {
    Rational ra = A.rational_value(), rb = B.rational_value(), rc = C.rational_value();
    Integer L = 1;
    mpz_lcm(L.get_mpz_t(), ra.get_den().get_mpz_t(), rb.get_den().get_mpz_t());
    mpz_lcm(L.get_mpz_t(), L.get_mpz_t(), rc.get_den().get_mpz_t());
    // integer poly: L x^3 + (L ra) x^2 + (L rb) x + (L rc) — lead L, tail L*rc
    Integer a3 = L;
    Rational tail = rc * Rational(L);
    Integer a0 = tail.get_num();
    auto eval = [&](const Rational& x) -> Rational {
      return Rational(((x + ra) * x + rb) * x + rc);
    };
    bool found = false;
    Rational root;
    if (a0 == 0) { root = 0; found = true; }
    else {
      for (const Integer& pn : detail::integer_divisors(a0)) {
        for (const Integer& qd : detail::integer_divisors(a3)) {
          Rational cand(pn, qd);
          cand.canonicalize();
          if (eval(cand) == 0) { root = cand; found = true; break; }
          cand = -cand;
          if (eval(cand) == 0) { root = cand; found = true; break; }
        }
        if (found) break;
      }
    }
    if (found) {
      merge(Cyclo(root), 1);
      // deflate by (x - root): quotient x^2 + (A+root)x + (B + root(A+root))
      Cyclo r0(root);
      Cyclo q1 = A + r0, q0 = B + r0 * q1;
      for (auto& [r, m] : detail::solve_quadratic(q1, q0)) merge(r, m);
      return roots;
    }
  }
  if (A.is_zero() && B.is_zero()) {  // pure cube x^3 = -C
    auto r = detail::cyclo_cbrt(-C);
    if (r) {
      merge(*r, 1);
      merge(*r * Cyclo::zeta(3, 1), 1);
      merge(*r * Cyclo::zeta(3, 2), 1);
      return roots;
    }
  }
  throw UnsupportedExtension("cubic residue equation has no root in the supported tower");
}

// ---------------------------------------------------------------------------
// Hensel lifting (ultrametric Newton iteration)

inline PuiseuxSeries hensel_lift(const SeriesPoly& f, const PuiseuxSeries& x0,
                                 const Rational& target_P) {
  SeriesPoly fp = f.derivative();
  if (f.eval(x0).is_exact_zero()) return x0.is_exact() ? x0 : x0.truncated(target_P);
  // working margin grows on demand: evaluation loses precision where the
  // coefficients have negative valuation, so retry with a wider window when
  // the convergence certificate cannot be decided
  for (Rational margin(1);; margin *= 2) {
    Rational W = target_P + margin;
    PuiseuxSeries x = x0.truncated(W);
    PuiseuxSeries fx = f.eval(x);
    PuiseuxSeries fpx = fp.eval(x);
    if (fpx.terms().empty())
      throw NoConvergence("hensel_lift precondition o(f(x0)) > 2 o(f'(x0)) fails");
    Rational ofp = fpx.valuation().value();
    // lower bound suffices: a zero-to-precision f(x0) has o >= P
    Rational ofx_lb = fx.terms().empty() ? *fx.precision() : fx.terms().begin()->first;
    if (!(ofx_lb > 2 * ofp))
      throw NoConvergence("hensel_lift precondition o(f(x0)) > 2 o(f'(x0)) fails");
    // stop once the implied root error o(x - x*) = o(f(x)) - o(f'(x))
    // reaches target_P, i.e. o(f(x)) >= target_P + o(f'(x))
    Rational goal = target_P + ofp;
    bool done = false;
    try {
      for (int iter = 0; iter < 64 && !done; ++iter) {
        done = fx.is_exact_zero() || val_at_least(fx, goal);
        if (done) break;
        PuiseuxSeries delta = series_div(fx, fpx, W);
        x = (x - delta).truncated(W);
        fx = f.eval(x);
        fpx = fp.eval(x);
      }
      if (done) return x.truncated(target_P);
    } catch (const PrecisionInsufficient&) {
      // fall through to a wider margin
    }
    if (margin >= 16) throw NoConvergence("hensel_lift did not converge in 64 steps");
  }
}

// ---------------------------------------------------------------------------
// Newton-Puiseux root finding, exact branches, degree <= 3 residue equations.
// Returns (root, multiplicity); roots are exact when the algebra terminates,
// truncated at target_P otherwise.

namespace detail {

inline void puiseux_roots_rec(const SeriesPoly& f, const Rational& target_P,
                              int depth,
                              std::vector<std::pair<PuiseuxSeries, int>>& out) {
  if (depth <= 0) throw NoConvergence("root clustering did not resolve (depth exhausted)");
  NewtonPolygon np = newton_polygon(f);
  SeriesPoly g = f;
  if (np.zero_multiplicity > 0) {
    out.push_back({PuiseuxSeries(), (int)np.zero_multiplicity});
    g.c.erase(g.c.begin(), g.c.begin() + np.zero_multiplicity);
  }
  for (const auto& [rho, count] : np.segments) {
    // residue polynomial along this segment
    long i1 = -1;
    Rational y1;
    // find segment start: smallest i with o(c_i) on the hull line of slope -rho
    // reconstruct from the hull data: the segment spans indices where
    // o(c_i) + i*rho is minimal.
    Rational best;
    bool have = false;
    for (size_t i = 0; i < g.c.size(); ++i) {
      if (g.c[i].is_exact_zero()) continue;
      Rational key = g.c[i].valuation().value() + Rational((long)i) * rho;
      if (!have || key < best) { best = key; have = true; }
    }
    std::vector<long> on_line;
    for (size_t i = 0; i < g.c.size(); ++i) {
      if (g.c[i].is_exact_zero()) continue;
      if (g.c[i].valuation().value() + Rational((long)i) * rho == best) on_line.push_back((long)i);
    }
    i1 = on_line.front();
    (void)y1;
    long i2 = on_line.back();
    std::vector<Cyclo> res(i2 - i1 + 1, Cyclo(0));
    for (long i : on_line) {
      const auto& s = g.c[i];
      res[i - i1] = s.terms().begin()->second;  // leading coefficient
    }
    std::vector<std::pair<Cyclo, int>> rr;
    bool in_tower = true;
    try {
      rr = solve_cyclo_poly(res);
    } catch (const UnsupportedExtension&) {
      in_tower = false;
    }
    if (!in_tower) {
      // the residue roots leave the coefficient tower; all segment roots form
      // one cluster around the current expansion point
      out.push_back({PuiseuxSeries(), (int)(i2 - i1)});
      continue;
    }
    for (const auto& [r, mult] : rr) {
      if (r.is_zero()) continue;  // belongs to a different segment
      PuiseuxSeries x0 = PuiseuxSeries::monomial(rho, r);
      if (mult == 1) {
        out.push_back({hensel_lift(f, x0, target_P), 1});
        continue;
      }
      // clustered roots: recenter and recurse, keeping only the cluster
      SeriesPoly h = f.shifted(x0);
      std::vector<std::pair<PuiseuxSeries, int>> sub;
      bool resolved = true;
      try {
        puiseux_roots_rec(h, target_P, depth - 1, sub);
      } catch (const PrecisionInsufficient&) {
        resolved = false;
      } catch (const IndeterminateValuation&) {
        resolved = false;
      } catch (const UnsupportedExtension&) {
        resolved = false;
      }
      if (!resolved) {
        // the cluster cannot be split at this precision: report the center
        // with the cluster multiplicity, truncated at the cluster radius
        out.push_back({x0, mult});
        continue;
      }
      for (auto& [u, m] : sub) {
        if (!u.valuation().above(rho)) continue;  // other segments' roots
        out.push_back({x0 + u, m});
      }
    }
  }
}

}  // namespace detail

inline std::vector<std::pair<PuiseuxSeries, int>> puiseux_roots(
    const SeriesPoly& f, const Rational& target_P) {
  std::vector<std::pair<PuiseuxSeries, int>> out;
  detail::puiseux_roots_rec(f, target_P, 64, out);
  return out;
}

}  // namespace pdyn
