#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "pdyn/dynamics.hpp"

namespace pdyn {

// Level-n parameter ball of the psi slice around a parameter nu: the set of
// parameters whose critical orbit stays in D0 through step n+1 and share the
// level-(n+1) critical grid. It coincides with the level-n dynamical ball
// around the critical value, so its radius is exact.
struct ParameterBall {
  int level = 0;
  UltrametricBall ball;
  MarkedGrid grid;  // level n+1, constant on the ball
  std::optional<PuiseuxSeries> center;
  int center_period = 0;
};

namespace detail {

// deterministic branch order: smaller exponents first, then coefficient text
inline bool series_lex_less(const PuiseuxSeries& a, const PuiseuxSeries& b) {
  auto ia = a.terms().begin(), ib = b.terms().begin();
  for (; ia != a.terms().end() && ib != b.terms().end(); ++ia, ++ib) {
    if (ia->first != ib->first) return ia->first < ib->first;
    if (!(ia->second == ib->second))
      return cyclo_to_string(ia->second) < cyclo_to_string(ib->second);
  }
  return ia == a.terms().end() && ib != b.terms().end();
}

// Procedure: ball_around
// Level-l dynamical ball containing x: pull D0 back along the orbit of x,
// keeping the component that contains the matching orbit point.
inline UltrametricBall ball_around(const SeriesPoly& p, const UltrametricBall& D0,
                                   const PuiseuxSeries& x, int level,
                                   const Rational& work_P) {
  Rational margin = pullback_margin(p, D0.log_radius);
  std::vector<PuiseuxSeries> xs{x.truncated(work_P)};
  for (int j = 1; j < level; ++j) xs.push_back(p.eval(xs.back()).truncated(work_P));
  UltrametricBall B = D0;
  for (int j = level - 1; j >= 0; --j) {
    bool found = false;
    for (auto& [b, d] : preimage_balls(p, B, D0, Rational(B.log_radius + margin)))
      if (b.contains(xs[(size_t)j])) {
        B = b;
        found = true;
        break;
      }
    if (!found)
      throw NotALevelNPoint("no level ball around the point at depth " +
                            std::to_string(level - j));
  }
  return B;
}

}  // namespace detail

// Procedure: find_center
// Thurston fixed-point iteration. Given a seed nu_hat whose critical orbit
// stays in D0 through step n+1, and a level-(n+1) branch point zeta_1 inside
// the level-n ball around the critical value (default: the critical value
// itself), produce the unique nu' near zeta_1 whose critical point is
// periodic of period p_hat = min{k >= 1 : w+ lies in the level-(n+2-k) ball
// around the k-th orbit point of zeta_1}. Each sweep pulls the tuple
// (zeta_1, ..., zeta_{p_hat} = w+) back through p_hat - 1 injective branches
// of psi_{zeta_1}; the slot radii contract the sweeps geometrically. Stops
// when the first-coordinate increment has valuation >= target_P + 1.
inline PuiseuxSeries find_center(const PuiseuxSeries& nu_hat, int n,
                                 const Rational& target_P,
                                 std::optional<PuiseuxSeries> branch = {}) {
  // the center depends only on the parameter ball of the seed, so a truncated
  // seed may be replaced by its zero-tail representative once the precision
  // pins down the ball; this keeps every later evaluation fully certified
  PuiseuxSeries seed = nu_hat;
  if (!seed.is_exact()) {
    if (*seed.precision() < Rational(4 * (n + 2)))
      throw PrecisionInsufficient(
          "find_center: seed precision O(t^(" + to_string(*seed.precision()) +
          ")) does not pin down the level " + std::to_string(n) + " ball");
    seed.set_precision(std::nullopt);
  }
  CubicMap f = CubicMap::psi_slice(seed);
  SeriesPoly p = f.poly();
  PuiseuxSeries w = f.omega_plus();
  MarkedGrid g;
  try {
    g = critical_grid(f, n + 1);
  } catch (const NotALevelNPoint& e) {
    throw NoConvergence(std::string("find_center: ") + e.what());
  }
  GridModuli gm = grid_moduli(g);

  Rational W = target_P + 2;
  Rational orbit_P = W + Rational(2 * (n + 3));
  PuiseuxSeries z1 = branch ? *branch : seed;
  if (!z1.is_exact()) {
    if (*z1.precision() < Rational(4 * (n + 2)))
      throw PrecisionInsufficient(
          "find_center: branch precision O(t^(" + to_string(*z1.precision()) +
          ")) does not pin down the level " + std::to_string(n + 1) + " point");
    z1.set_precision(std::nullopt);
  }

  // radius of the level-n ball around the critical value: the critical nest
  // ball of level n+1 maps onto it
  Rational lr1 =
      image_ball(p, UltrametricBall(w, Rational(-gm.log_r[(size_t)n + 1])))
          .first.log_radius;
  {
    PuiseuxSeries d = z1 - seed;
    if (!d.is_exact_zero() && !val_at_least(d, lr1))
      throw NoConvergence("find_center: branch point outside the critical value ball");
  }

  // orbit of the branch point and the period p_hat
  std::vector<PuiseuxSeries> zh{PuiseuxSeries(), z1.truncated(orbit_P)};
  int p_hat = 0;
  for (int k = 1; k <= n + 2; ++k) {
    PuiseuxSeries d = zh[(size_t)k] - w;
    Rational rho(-gm.log_r[(size_t)(n + 2 - k)]);
    if (d.is_exact_zero() || val_at_least(d, rho)) {
      p_hat = k;
      break;
    }
    zh.push_back(p.eval(zh.back()).truncated(orbit_P));
  }
  if (p_hat == 0)
    throw NoConvergence("find_center: branch point is not a level n+1 point");
  if (p_hat == 1) return w;  // the critical value itself must be fixed

  // slot log-radii rho_k and the contraction check: slot 1 carries the
  // smallest radius, so every later slot must be strictly larger
  std::vector<Rational> lr{Rational(0), lr1};
  for (int k = 2; k < p_hat; ++k) {
    Rational ov = dist_valuation(zh[(size_t)k - 1], w).value();
    lr.push_back(Rational(lr[(size_t)k - 1] + ov - 2));
    if (!(lr[(size_t)k] < lr[1]))
      throw NoConvergence("find_center: contraction factor is not < 1");
  }

  // the sweep map contracts the tuple inside fixed slot balls, so each slot
  // value may be replaced by its zero-tail representative: the fixed point is
  // unchanged and the perturbation has valuation >= W > target_P + 1. With
  // exact tuples every lift below is certified regardless of the derivative
  // valuation at the slot.
  std::vector<PuiseuxSeries> cur((size_t)p_hat + 1);
  for (int k = 1; k < p_hat; ++k) {
    cur[(size_t)k] = zh[(size_t)k].truncated(W);
    cur[(size_t)k].set_precision(std::nullopt);
  }
  cur[(size_t)p_hat] = w;
  // independent stop certificate: the center is a simple root of
  // G(nu) = psi_nu^{p_hat-1}(nu) - w, so o(nu - nu*) = o(G) - o(G') by the
  // Newton bound; a candidate is accepted only when that reaches target_P + 1
  auto certify = [&](const PuiseuxSeries& cand) -> std::optional<PuiseuxSeries> {
    // working precision: room for the derivative valuation and the t^-2
    // losses along the orbit; precision markers keep o(G) a sound lower bound
    Rational Q = target_P + 1 + Rational(6 * (n + 3));
    SeriesPoly q = CubicMap::psi_slice(cand).poly();
    SeriesPoly qp = q.derivative();
    PuiseuxSeries z = cand, dz(1);  // z = psi^j(nu), dz = dz/dnu
    for (int j = 1; j < p_hat; ++j) {
      dz = (qp.eval(z) * dz + PuiseuxSeries(1)).truncated(Q);
      z = q.eval(z).truncated(Q);
    }
    PuiseuxSeries G = z - w;
    if (G.is_exact_zero()) return cand;
    if (dz.is_exact_zero() || dz.terms().empty()) return std::nullopt;
    Rational odz = dz.terms().begin()->first;
    Rational oG = G.terms().empty() ? *G.precision() : G.terms().begin()->first;
    if (oG > 2 * odz && oG - odz >= target_P + 1)
      return cand.truncated(target_P);
    return std::nullopt;
  };

  // the sweep gain is amortized over one period: increments may stall or even
  // dip, but the running maximum must rise within every couple of periods
  std::optional<Rational> best_v;
  int since_best = 0;
  for (int sweep = 0; sweep < 256; ++sweep) {
    SeriesPoly q = CubicMap::psi_slice(cur[1]).poly();
    std::vector<PuiseuxSeries> nxt = cur;
    for (int k = p_hat - 1; k >= 1; --k) {
      SeriesPoly h = q;
      h.c[0] = h.c[0] - cur[(size_t)k + 1];
      nxt[(size_t)k] = hensel_lift(h, cur[(size_t)k], W);
    }
    // slot constraint: strictly inside the ball around the seed orbit
    for (int k = 1; k < p_hat; ++k) {
      PuiseuxSeries d = nxt[(size_t)k] - zh[(size_t)k];
      if (!d.is_exact_zero() && !val_above(d, lr[(size_t)k]))
        throw NoConvergence("find_center: iterate left its slot");
    }
    PuiseuxSeries inc = nxt[1] - cur[1];
    cur = std::move(nxt);
    for (int k = 1; k < p_hat; ++k)
      if (!cur[(size_t)k].is_exact()) cur[(size_t)k].set_precision(std::nullopt);
    if (inc.is_exact_zero() || inc.terms().empty() ||
        inc.terms().begin()->first >= target_P + 1)
      if (auto res = certify(cur[1])) return *res;
    Rational v = inc.is_exact_zero() ? target_P + 1
                 : inc.terms().empty() ? *inc.precision()
                                       : inc.terms().begin()->first;
    if (!best_v || v > *best_v) {
      best_v = v;
      since_best = 0;
    } else if (++since_best > 2 * p_hat + 2) {
      throw NoConvergence("find_center: iteration is not contracting");
    }
  }
  throw NoConvergence("find_center: no convergence in 256 sweeps");
}

// Procedure: parameter_ball
// The ball is the image of the level-(n+1) critical nest ball (hence exactly
// the level-n dynamical ball around the critical value); the period of the
// unique center is read off the grid diagonal; the center itself comes from
// the default Thurston branch one level down.
inline ParameterBall parameter_ball(const PuiseuxSeries& nu, int n,
                                    std::optional<Rational> center_P = {}) {
  CubicMap f = CubicMap::psi_slice(nu);
  ParameterBall out;
  out.level = n;
  out.grid = critical_grid(f, n + 1);  // NotALevelNPoint when outside E_n
  require_admissible(out.grid);
  GridModuli gm = grid_moduli(out.grid);
  SeriesPoly p = f.poly();
  out.ball =
      image_ball(p, UltrametricBall(f.omega_plus(),
                                    Rational(-gm.log_r[(size_t)n + 1])))
          .first;
  for (int k = 1; k <= n + 1; ++k)
    if (out.grid.at(n + 1 - k, k)) {
      out.center_period = k;
      break;
    }
  Rational P = center_P ? *center_P : kDefaultPrecision;
  out.center = (n == 0) ? f.omega_plus() : find_center(nu, n - 1, P);
  return out;
}

// Procedure: realize_grid
// Induction over the depth: given a center realizing the grid to depth d,
// pull the deepest marked critical nest ball on the new diagonal back along
// the critical orbit, always branching into a component that avoids the
// critical point (ties broken by lexicographic center order), and hand the
// resulting level-d branch point to find_center. The special diagonal
// position p = d+1 pulls back from the level-0 ball, which forces the
// critical-point-free level-1 ball first.
inline PuiseuxSeries realize_grid(const MarkedGrid& g, const Rational& precision) {
  require_admissible(g);  // Violation carries the failing rule
  for (int k = 0; k <= g.depth; ++k)
    if (!g.at(0, k)) throw Violation("critical", 0, k);
  for (int l = 0; l <= g.depth; ++l)
    if (!g.at(l, 0)) throw Violation("critical", l, 0);

  PuiseuxSeries nu(1);
  if (g.depth <= 1) return nu;  // depth-1 grids are all forced

  Rational P = precision;
  Rational floor_P(4 * (g.depth + 2));
  if (P < floor_P) P = floor_P;
  Rational work_P = P + Rational(2 * (g.depth + 2));

  for (int d = 1; d < g.depth; ++d) {
    const int L = d, n = d - 1;
    CubicMap f = CubicMap::psi_slice(nu);
    SeriesPoly p = f.poly();
    PuiseuxSeries w = f.omega_plus();
    UltrametricBall D0 = level0_ball(f);
    GridModuli gm = grid_moduli(critical_grid(f, L));
    Rational margin = detail::pullback_margin(p, D0.log_radius);

    int pp = 0;
    for (int k = 1; k <= L + 1; ++k)
      if (g.at(L + 1 - k, k)) {
        pp = k;
        break;
      }

    UltrametricBall T =
        (pp == L + 1)
            ? D0
            : UltrametricBall(w, Rational(-gm.log_r[(size_t)(L + 1 - pp)]));
    std::vector<PuiseuxSeries> orbit{w};  // orbit[s] = psi^s(w+)
    for (int s = 1; s < pp; ++s)
      orbit.push_back(p.eval(orbit.back()).truncated(work_P));
    for (int s = pp - 1; s >= 1; --s) {
      UltrametricBall Bs =
          detail::ball_around(p, D0, orbit[(size_t)s], L - s, work_P);
      std::optional<UltrametricBall> pick;
      try {
        for (auto& [b, deg] :
             preimage_balls(p, T, Bs, Rational(T.log_radius + margin))) {
          if (b.contains(w)) continue;  // the branch must avoid w+
          if (!pick || detail::series_lex_less(b.center, pick->center))
            pick = b;
        }
      } catch (const UnsupportedExtension& e) {
        throw UnsupportedExtension("realize_grid: branch at level " +
                                   std::to_string(L - s + 1) +
                                   " leaves the coefficient tower: " + e.what());
      }
      if (!pick)
        throw UnsupportedExtension(
            "realize_grid: no critical-point-free branch at level " +
            std::to_string(L - s + 1));
      T = *pick;
    }
    nu = find_center(nu, n, P, T.center);
  }

  // the construction is only done when the grid is reproduced exactly
  MarkedGrid got = critical_grid(CubicMap::psi_slice(nu), g.depth);
  if (got.rows != g.rows)
    throw NoConvergence("realize_grid: realized center does not reproduce the grid");
  return nu.is_exact() ? nu : nu.truncated(precision);
}

// Procedure: algebraic_degree
// history holds (level-k center, log-radius of the level-k parameter ball).
// s_k is the reduced denominator of |log r_k|; whenever consecutive centers
// differ (decided at valuation |log r_{k+1}| + 1, PrecisionInsufficient when
// undecidable) the degree jumps to max(s_k, current).
inline long algebraic_degree(
    const std::vector<std::pair<PuiseuxSeries, Rational>>& history) {
  long delta = 1;
  for (size_t k = 0; k + 1 < history.size(); ++k) {
    Rational V = rational_abs(history[k + 1].second) + 1;
    PuiseuxSeries d = history[k + 1].first - history[k].first;
    if (d.is_exact_zero() || val_at_least(d, V)) continue;
    long s = to_long(denominator_of(history[k].second));
    if (s > delta) delta = s;
  }
  return delta;
}

}  // namespace pdyn
