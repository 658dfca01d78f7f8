#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "pdyn/balls.hpp"
#include "pdyn/grid.hpp"

namespace pdyn {

// Cubic map in one of two coordinate systems:
//   Phi form: phi(z) = z^3 - 3 alpha^2 z + beta, critical points +-alpha
//   Psi form: psi(z) = alpha^2 (z-1)^2 (z+2) + nu, critical points +-1
// The forms are conjugate via z -> alpha z with beta = alpha nu + 2 alpha^3.
struct CubicMap {
  bool is_psi = false;
  PuiseuxSeries alpha;
  PuiseuxSeries second;  // beta (phi form) or nu (psi form)

  static CubicMap phi(PuiseuxSeries a, PuiseuxSeries beta) {
    return CubicMap{false, std::move(a), std::move(beta)};
  }
  static CubicMap psi(PuiseuxSeries a, PuiseuxSeries nu) {
    return CubicMap{true, std::move(a), std::move(nu)};
  }
  // standard slice alpha = t^-1
  static CubicMap psi_slice(PuiseuxSeries nu) {
    return psi(PuiseuxSeries::t_power(Rational(-1)), std::move(nu));
  }

  SeriesPoly poly() const {
    PuiseuxSeries one = PuiseuxSeries::monomial(Rational(0), Cyclo(1));
    if (!is_psi) {
      PuiseuxSeries a2 = alpha * alpha;
      std::vector<PuiseuxSeries> c(4);
      c[0] = second;
      c[1] = PuiseuxSeries() - (a2 + a2 + a2);
      c[3] = one;
      return SeriesPoly(std::move(c));
    }
    // alpha^2 (z^3 - 3z + 2) + nu
    PuiseuxSeries a2 = alpha * alpha;
    std::vector<PuiseuxSeries> c(4);
    c[0] = a2 * PuiseuxSeries::monomial(Rational(0), Cyclo(2)) + second;
    c[1] = PuiseuxSeries() - (a2 + a2 + a2);
    c[3] = a2;
    return SeriesPoly(std::move(c));
  }

  PuiseuxSeries omega_plus() const {
    return is_psi ? PuiseuxSeries::monomial(Rational(0), Cyclo(1)) : alpha;
  }
  PuiseuxSeries omega_minus() const { return PuiseuxSeries() - omega_plus(); }
  PuiseuxSeries cocritical() const {
    PuiseuxSeries w = omega_plus();
    return PuiseuxSeries() - (w + w);
  }

  CubicMap to_phi() const {
    if (!is_psi) return *this;
    PuiseuxSeries a3 = alpha * alpha * alpha;
    return phi(alpha, alpha * second + a3 + a3);
  }
};

// Procedure: capture_radius
// log R for the escape ball: for f = sum a_i z^i of degree d,
// log R = max( (o(a_d) - o(a_i)) / (d - i), o(a_d) / (d - 1) ).
// Orbits leaving {o(z) >= -log R} escape to infinity.
inline Rational capture_radius(const CubicMap& f) {
  SeriesPoly p = f.poly();
  int d = p.degree();
  Rational od = p.c[(size_t)d].valuation().value();
  Rational best = od / Rational(d - 1);
  for (int i = 0; i < d; ++i) {
    if (p.c[(size_t)i].is_exact_zero()) continue;
    Rational cand =
        (od - p.c[(size_t)i].valuation().value()) / Rational(d - i);
    if (cand > best) best = cand;
  }
  return best;
}

inline UltrametricBall level0_ball(const CubicMap& f) {
  return UltrametricBall(PuiseuxSeries(), Rational(-capture_radius(f)),
                         BallKind::closed);
}

enum class Locus { C3, S3, Eplus, Eminus, EUnresolved };

struct Classification {
  Locus locus = Locus::EUnresolved;
  int depth_used = 0;
  // step at which each critical orbit left the level-0 ball; -1 = no escape
  int escape_plus = -1, escape_minus = -1;
};

namespace detail {

// Procedure: pullback_margin
// A fiber component's log-radius exceeds its image's by at most
// B = -min_{i>=1} o(g_i), bounded from the coefficient valuations (adjusted
// when the level-0 ball has negative log-radius).
inline Rational pullback_margin(const SeriesPoly& p, const Rational& rho0) {
  Rational B(0);
  for (size_t i = 1; i < p.c.size(); ++i) {
    if (p.c[i].is_exact_zero()) continue;
    Rational lo = p.c[i].terms().empty() ? *p.c[i].precision()
                                         : p.c[i].terms().begin()->first;
    if (rho0 < 0) lo += Rational((long)(p.c.size() - 1 - i)) * rho0;
    if (-lo > B) B = -lo;
  }
  return B;
}

// first step 1..budget at which the orbit of z leaves D0, else -1
inline int escape_step(const SeriesPoly& p, PuiseuxSeries z,
                       const UltrametricBall& D0, int budget,
                       const Rational& work_P) {
  for (int k = 1; k <= budget; ++k) {
    z = p.eval(z).truncated(work_P);
    if (!D0.contains(z)) return k;
  }
  return -1;
}

}  // namespace detail

// Procedure: classify
// C3 iff both critical orbits are bounded (valuation test on (alpha, beta));
// S3 when both critical orbits escape within budget; E+/E- when exactly the
// negative/positive critical orbit escapes; otherwise unresolved at budget.
inline Classification classify(const CubicMap& f, int depth_budget,
                               const Rational& work_P = Rational(64)) {
  CubicMap g = f.to_phi();
  bool a_small = g.alpha.is_exact_zero() ||
                 g.alpha.valuation().value() >= 0;
  bool b_small = g.second.is_exact_zero() ||
                 g.second.valuation().value() >= 0;
  if (a_small && b_small) return {Locus::C3, 0, -1, -1};

  SeriesPoly p = f.poly();
  UltrametricBall D0 = level0_ball(f);
  int ep = detail::escape_step(p, f.omega_plus(), D0, depth_budget, work_P);
  int em = detail::escape_step(p, f.omega_minus(), D0, depth_budget, work_P);
  Classification out;
  out.depth_used = depth_budget;
  out.escape_plus = ep;
  out.escape_minus = em;
  if (ep >= 0 && em >= 0) out.locus = Locus::S3;
  else if (em >= 0) out.locus = Locus::Eplus;
  else if (ep >= 0) out.locus = Locus::Eminus;
  else out.locus = Locus::EUnresolved;
  return out;
}

struct LevelBall {
  UltrametricBall ball;
  long degree = 1;             // mapping degree onto its image ball
  std::vector<int> labels;     // subset of {1,2,3}
  int parent = -1;             // index in the previous level (containment)
  int image = -1;              // index in the previous level (f(ball))
  bool has_omega_plus = false;
  bool has_omega_minus = false;
};

struct LevelStructure {
  std::vector<std::vector<LevelBall>> levels;
};

// Procedure: level_structure
// Level n balls are the components of f^{-n}(D0); each level is computed as
// the fiber of the previous one. Labels subdivide the parent's label set
// among siblings with a common image, |labels| = degree.
inline LevelStructure level_structure(const CubicMap& f, int n,
                                      std::optional<Rational> precision = {}) {
  SeriesPoly p = f.poly();
  // bound the fiber log-radius growth once, so each pullback can run at the
  // smallest sufficient root precision
  Rational B = detail::pullback_margin(p, level0_ball(f).log_radius);
  PuiseuxSeries wp = f.omega_plus(), wm = f.omega_minus();
  LevelStructure out;
  LevelBall root;
  root.ball = level0_ball(f);
  root.degree = degree_on_ball(p, root.ball);
  root.labels = {1, 2, 3};
  root.has_omega_plus = root.ball.contains(wp);
  root.has_omega_minus = root.ball.contains(wm);
  out.levels.push_back({root});

  for (int lev = 1; lev <= n; ++lev) {
    const auto& prev = out.levels.back();
    std::vector<LevelBall> cur;
    for (size_t t = 0; t < prev.size(); ++t) {
      Rational P = precision ? *precision
                             : Rational(prev[t].ball.log_radius + B);
      for (auto& [b, d] : preimage_balls(p, prev[t].ball, root.ball, P)) {
        LevelBall lb;
        lb.ball = b;
        lb.degree = d;
        lb.image = (int)t;
        lb.has_omega_plus = b.contains(wp);
        lb.has_omega_minus = b.contains(wm);
        cur.push_back(std::move(lb));
      }
    }
    // parents by containment
    for (auto& lb : cur) {
      for (size_t t = 0; t < prev.size(); ++t)
        if (prev[t].ball.contains_ball(lb.ball)) {
          lb.parent = (int)t;
          break;
        }
      if (lb.parent < 0) throw NoConvergence("level ball without a parent");
    }
    // labels: per parent, per common image, consume the parent's labels
    for (size_t t = 0; t < prev.size(); ++t) {
      for (size_t img = 0; img < prev.size(); ++img) {
        size_t used = 0;
        for (auto& lb : cur) {
          if (lb.parent != (int)t || lb.image != (int)img) continue;
          for (long j = 0; j < lb.degree; ++j)
            lb.labels.push_back(prev[t].labels[used++]);
        }
        if (used != 0 && used != prev[t].labels.size())
          throw NoConvergence("fiber degrees do not exhaust the parent label set");
      }
    }
    out.levels.push_back(std::move(cur));
  }
  return out;
}

// Procedure: critical_grid
// M_{l,k} = 1 iff f^k(w+) lies in the level-l ball of the critical nest.
// The nest radii are recovered from the rows already computed, so the grid
// is built top row first. Throws NotALevelNPoint if the critical orbit
// leaves D0 within depth.
inline MarkedGrid critical_grid(const CubicMap& f, int depth,
                                const Rational& work_P = Rational(48),
                                const Rational& mod_A0 = Rational(2),
                                const Rational& log_rhat = Rational(2)) {
  SeriesPoly p = f.poly();
  PuiseuxSeries w = f.omega_plus();
  UltrametricBall D0 = level0_ball(f);
  std::vector<PuiseuxSeries> orbit{w};  // orbit[k] = f^k(w)
  for (int k = 1; k <= depth; ++k) {
    PuiseuxSeries z = p.eval(orbit.back()).truncated(work_P);
    if (!D0.contains(z))
      throw NotALevelNPoint("critical orbit leaves the level-0 ball at step " +
                            std::to_string(k));
    orbit.push_back(std::move(z));
  }

  MarkedGrid g(depth);
  for (int k = 0; k <= depth; ++k) g.set(0, k, 1);
  for (int l = 1; l <= depth; ++l) {
    // rho_l from the rows above: S_l = sum_{i<l} M_{l-i,i}, with column 0
    // marked at every row of the critical grid
    Rational acc = log_rhat;
    Rational rho;
    for (int j = 0; j <= l; ++j) {
      long S = 0;
      for (int i = 1; i < j; ++i) S += g.at(j - i, i);
      S += (j >= 1) ? 1 : 0;  // M_{j,0} = 1
      acc -= mod_A0 * pow2_neg((unsigned long)S);
      rho = Rational(-acc);
    }
    g.set(l, 0, 1);
    for (int k = 1; l + k <= depth; ++k) {
      PuiseuxSeries d = orbit[(size_t)k] - w;
      g.set(l, k, (d.is_exact_zero() || val_at_least(d, rho)) ? 1 : 0);
    }
  }
  return g;
}

struct ComponentVerdict {
  enum Kind { Singleton, PeriodicBall, Unresolved } kind = Unresolved;
  int period = 0;             // PeriodicBall
  Rational log_radius;        // PeriodicBall: exact log r of the component
  std::vector<Rational> radii;  // Singleton evidence: log r_l per level
  int depth = 0;
};

// Procedure: component_of_critical
// Periodic critical grid -> the component of w+ is a closed ball whose exact
// log-radius is log r_hat minus the full (geometrically summable) moduli
// series; aperiodic to depth with small radii -> singleton evidence.
inline ComponentVerdict component_of_critical(
    const CubicMap& f, int depth_budget,
    const Rational& singleton_threshold = Rational(-8),
    const Rational& mod_A0 = Rational(2), const Rational& log_rhat = Rational(2)) {
  MarkedGrid g = critical_grid(f, depth_budget);
  GridModuli m = grid_moduli(g, mod_A0, log_rhat);

  // exact periodicity of the critical orbit
  SeriesPoly p = f.poly();
  PuiseuxSeries w = f.omega_plus();
  std::optional<int> period;
  {
    PuiseuxSeries z = w;
    for (int k = 1; k <= depth_budget; ++k) {
      z = p.eval(z);
      if (z == w) {
        period = k;
        break;
      }
      if ((long)z.terms().size() > 4096) break;  // aperiodic orbits blow up
    }
  }
  // fallback certificate: a fully marked column at the period
  if (!period) {
    for (int k = 1; 2 * k <= depth_budget; ++k) {
      bool full = true;
      for (int l = 1; l + k <= depth_budget && full; ++l)
        if (!g.at(l, k)) full = false;
      if (full) {
        period = k;
        break;
      }
    }
  }

  ComponentVerdict out;
  out.depth = depth_budget;
  if (period) {
    int pp = *period;
    // per-column marked depth within one period (column 0 is fully marked)
    std::vector<long> col_depth((size_t)pp, 0);
    for (int j = 1; j < pp; ++j) {
      long dmax = 0;
      for (int k = j; k <= depth_budget; k += pp)
        for (int l = 1; l + k <= depth_budget; ++l)
          if (g.at(l, k)) dmax = std::max(dmax, (long)l);
      col_depth[(size_t)j] = dmax;
    }
    auto S_of = [&](long l) {
      long S = 0;
      for (long i = 0; i < l; ++i) {
        long j = i % pp;
        if (j == 0 || l - i <= col_depth[(size_t)j]) ++S;
      }
      return S;
    };
    // stabilization level: beyond it each period adds one mark to S_l
    long Lstar = 1;
    for (int j = 1; j < pp; ++j) Lstar = std::max(Lstar, col_depth[(size_t)j] + j + 1);
    for (long l = Lstar; l <= Lstar + 2 * pp; ++l)
      if (S_of(l + pp) != S_of(l) + 1)
        throw NoConvergence("periodic tail of the moduli did not stabilize");
    Rational total;  // sum over all levels of mod A_l
    for (long l = 0; l < Lstar; ++l)
      total += mod_A0 * pow2_neg((unsigned long)S_of(l));
    for (long j = 0; j < pp; ++j)
      total += Rational(2) * mod_A0 * pow2_neg((unsigned long)S_of(Lstar + j));
    out.kind = ComponentVerdict::PeriodicBall;
    out.period = pp;
    out.log_radius = Rational(log_rhat - total);
    return out;
  }

  out.radii = m.log_r;
  if (m.log_r.back() <= singleton_threshold) {
    out.kind = ComponentVerdict::Singleton;
  } else {
    out.kind = ComponentVerdict::Unresolved;
  }
  return out;
}

// Procedure: itinerary
// For a map with both critical orbits escaping by level N (level-N balls are
// critical point free), the symbol at step k is the singleton label of the
// level-N ball containing f^k(z).
inline std::vector<int> itinerary(const CubicMap& f, const PuiseuxSeries& z,
                                  int depth,
                                  const Rational& work_P = Rational(48)) {
  Classification cls = classify(f, 32);
  if (cls.locus != Locus::S3)
    throw NotALevelNPoint("itineraries require both critical orbits to escape");
  int N = std::max(cls.escape_plus, cls.escape_minus);
  LevelStructure ls = level_structure(f, N);
  const auto& ballsN = ls.levels[(size_t)N];
  SeriesPoly p = f.poly();
  PuiseuxSeries zk = z;
  std::vector<int> out;
  for (int k = 0; k < depth; ++k) {
    int sym = -1;
    for (const auto& lb : ballsN)
      if (lb.ball.contains(zk)) {
        sym = lb.labels.at(0);
        break;
      }
    if (sym < 0)
      throw NotALevelNPoint("orbit point is not inside any level-N ball at step " +
                            std::to_string(k));
    out.push_back(sym);
    zk = p.eval(zk).truncated(work_P);
  }
  return out;
}

}  // namespace pdyn
