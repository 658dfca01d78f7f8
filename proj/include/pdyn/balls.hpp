#pragma once

#include <utility>
#include <vector>

#include "pdyn/series_poly.hpp"

namespace pdyn {

enum class BallKind { closed, open };

// Ball in the series field. log_radius rho encodes radius r = e^{-rho}:
// membership is o(z - center) >= rho (closed) resp. > rho (open).
struct UltrametricBall {
  PuiseuxSeries center;
  Rational log_radius;
  BallKind kind = BallKind::closed;

  UltrametricBall() = default;
  UltrametricBall(PuiseuxSeries c, Rational rho, BallKind k = BallKind::closed)
      : center(std::move(c)), log_radius(std::move(rho)), kind(k) {}

  bool contains(const PuiseuxSeries& z) const {
    PuiseuxSeries d = z - center;
    if (d.is_exact_zero()) return true;
    return kind == BallKind::closed ? val_at_least(d, log_radius)
                                    : val_above(d, log_radius);
  }

  // B' subset of B: every member of B' belongs to B (centers of equal or
  // smaller balls suffice in an ultrametric field).
  bool contains_ball(const UltrametricBall& b) const {
    if (b.log_radius < log_radius) return false;
    if (b.log_radius == log_radius && kind == BallKind::open &&
        b.kind == BallKind::closed)
      return false;
    return contains(b.center);
  }

  bool operator==(const UltrametricBall& o) const {
    return kind == o.kind && log_radius == o.log_radius && contains(o.center);
  }
  bool operator!=(const UltrametricBall& o) const { return !(*this == o); }
};

// Annulus rho_out < -log|z - center| < rho_in; modulus = rho_in - rho_out.
struct UltrametricAnnulus {
  PuiseuxSeries center;
  Rational rho_out, rho_in;

  Rational modulus() const { return Rational(rho_in - rho_out); }
};

namespace detail {

struct ValBound {
  bool exact_zero;
  bool determinate;
  Rational v;  // valuation if determinate, else a lower bound
};

inline ValBound val_bound(const PuiseuxSeries& s) {
  if (!s.terms().empty()) return {false, true, s.terms().begin()->first};
  if (s.is_exact()) return {true, true, Rational(0)};
  return {false, false, *s.precision()};
}

}  // namespace detail

// Procedure: image_ball
// g(u) = f(center + u); the image ball has log-radius
// min_{i>=1} (o(g_i) + i rho) and the mapping degree is the largest index
// attaining that minimum.
inline std::pair<UltrametricBall, long> image_ball(const SeriesPoly& f,
                                                   const UltrametricBall& B) {
  SeriesPoly g = f.shifted(B.center);
  bool have = false;
  Rational best;
  long deg = 0;
  std::vector<Rational> pending;  // lower bounds from zero-to-precision coeffs
  for (size_t i = 1; i < g.c.size(); ++i) {
    detail::ValBound vb = detail::val_bound(g.c[i]);
    if (vb.exact_zero) continue;
    Rational key = vb.v + Rational((long)i) * B.log_radius;
    if (!vb.determinate) {
      pending.push_back(key);
      continue;
    }
    if (!have || key < best) {
      best = key;
      deg = (long)i;
      have = true;
    } else if (key == best && (long)i > deg) {
      deg = (long)i;
    }
  }
  if (!have)
    throw IndeterminateValuation("image_ball: no nonconstant term with determinate valuation");
  for (const Rational& lb : pending)
    if (!(lb > best))
      throw IndeterminateValuation("image_ball: coefficient precision insufficient to locate the dominant term");
  return {UltrametricBall(g.c[0], best, B.kind), deg};
}

// Procedure: count_roots_in_ball
// Newton-polygon count of roots of f inside B, with multiplicity.
inline long count_roots_in_ball(const SeriesPoly& f, const UltrametricBall& B) {
  NewtonPolygon np = newton_polygon(f.shifted(B.center));
  long n = np.zero_multiplicity;
  for (const auto& [v, cnt] : np.segments)
    if (B.kind == BallKind::closed ? v >= B.log_radius : v > B.log_radius)
      n += cnt;
  return n;
}

// Procedure: degree_on_ball
// deg_B(f) = 1 + number of critical points of f in B, with multiplicity.
inline long degree_on_ball(const SeriesPoly& f, const UltrametricBall& B) {
  SeriesPoly fp = f.derivative();
  if (fp.degree() == 0) return 1;
  return 1 + count_roots_in_ball(fp, B);
}

// Procedure: preimage_balls
// Components of f^{-1}(target) inside `within`: one ball per fiber point of
// the target's center, with its mapping degree. Each component's log-radius
// is the smallest rho with image log-radius equal to the target's, i.e.
// max_{i>=1} (rho_target - o(g_i)) / i for g = f(root + u).
inline std::vector<std::pair<UltrametricBall, long>> preimage_balls(
    const SeriesPoly& f, const UltrametricBall& target,
    const UltrametricBall& within,
    const Rational& target_P = Rational(kDefaultPrecision)) {
  SeriesPoly h = f;
  h.c[0] = h.c[0] - target.center;
  std::vector<std::pair<UltrametricBall, long>> out;
  for (const auto& [x, mult] : puiseux_roots(h, target_P)) {
    if (!within.contains(x)) continue;
    SeriesPoly g = f.shifted(x);
    bool have = false;
    Rational rho;
    std::vector<Rational> pending;
    for (size_t i = 1; i < g.c.size(); ++i) {
      detail::ValBound vb = detail::val_bound(g.c[i]);
      if (vb.exact_zero) continue;
      Rational cand = (target.log_radius - vb.v) / Rational((long)i);
      if (!vb.determinate) {
        pending.push_back(cand);  // an upper bound on the candidate
        continue;
      }
      if (!have || cand > rho) {
        rho = cand;
        have = true;
      }
    }
    if (!have) throw IndeterminateValuation("preimage_balls: degenerate local expansion");
    for (const Rational& ub : pending)
      if (ub > rho)
        throw IndeterminateValuation("preimage_balls: coefficient precision insufficient for the component radius");
    // any member serves as the center: keep only the exponents that matter
    if (x.precision() && (*x.precision() < rho ||
                          (target.kind == BallKind::open && *x.precision() == rho)))
      throw PrecisionInsufficient("preimage_balls: root precision below the component radius");
    PuiseuxSeries c0;
    for (const auto& [e, co] : x.terms()) {
      if (e < rho || (target.kind == BallKind::open && e == rho))
        c0.set(e, co);
      if (e >= rho) break;
    }
    UltrametricBall bx(c0, rho, target.kind);
    // the ball must be a full fiber component (this certifies cluster
    // centers whose exact roots leave the coefficient tower)
    auto [img, deg] = image_ball(f, bx);
    if (!(img == target))
      throw UnsupportedExtension("preimage_balls: cannot certify a fiber component around an unresolved root cluster");
    bool dup = false;
    for (const auto& [b, d] : out)
      if (b == bx) {
        dup = true;
        break;
      }
    if (dup) continue;
    out.push_back({bx, deg});
  }
  return out;
}

// Procedure: reduce_map
// Residue polynomial of f: B0 -> B1 (both closed) on the affine partitions:
// coefficient i is the coefficient of g_i at exponent rho1 - i*rho0, where
// g(u) = f(center0 + u) - center1.
inline std::vector<Cyclo> reduce_map(const SeriesPoly& f,
                                     const UltrametricBall& B0,
                                     const UltrametricBall& B1) {
  SeriesPoly g = f.shifted(B0.center);
  g.c[0] = g.c[0] - B1.center;
  std::vector<Cyclo> r(g.c.size());
  for (size_t i = 0; i < g.c.size(); ++i) {
    Rational e = B1.log_radius - Rational((long)i) * B0.log_radius;
    if (!g.c[i].is_exact_zero() && !val_at_least(g.c[i], e))
      throw IndeterminateValuation("reduce_map: image of B0 is not B1");
    r[i] = g.c[i].coeff(e);
  }
  while (r.size() > 1 && r.back().is_zero()) r.pop_back();
  return r;
}

// Procedure: residue_class
// Label of the partition class of z inside the closed ball B: the residue of
// (z - center) scaled to the boundary exponent.
inline Cyclo residue_class(const UltrametricBall& B, const PuiseuxSeries& z) {
  PuiseuxSeries d = z - B.center;
  if (d.is_exact_zero()) return Cyclo(0);
  if (!val_at_least(d, B.log_radius))
    throw IndeterminateValuation("residue_class: point outside the ball");
  return d.coeff(B.log_radius);
}

// Procedure: image_annulus
// An annulus maps by a single dominant monomial; degree d multiplies the
// modulus: mod(image) = d * mod(A).
inline std::pair<UltrametricAnnulus, long> image_annulus(
    const SeriesPoly& f, const UltrametricAnnulus& A) {
  SeriesPoly g = f.shifted(A.center);
  Rational mid = (A.rho_out + A.rho_in) / 2;
  bool have = false;
  Rational best;
  long deg = 0;
  bool unique = true;
  for (size_t i = 1; i < g.c.size(); ++i) {
    detail::ValBound vb = detail::val_bound(g.c[i]);
    if (vb.exact_zero) continue;
    if (!vb.determinate)
      throw IndeterminateValuation("image_annulus: coefficient valuation indeterminate");
    Rational key = vb.v + Rational((long)i) * mid;
    if (!have || key < best) {
      best = key;
      deg = (long)i;
      have = true;
      unique = true;
    } else if (key == best) {
      unique = false;
    }
  }
  if (!have || !unique)
    throw IndeterminateValuation("image_annulus: no single dominant term on the annulus");
  Rational ov = g.c[(size_t)deg].terms().begin()->first;
  UltrametricAnnulus img{g.c[0], Rational(ov + Rational(deg) * A.rho_out),
                         Rational(ov + Rational(deg) * A.rho_in)};
  return {img, deg};
}

}  // namespace pdyn
