#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <queue>
#include <vector>

#include "pdyn/grid.hpp"
#include "pdyn/puiseux.hpp"

namespace pdyn {

using Complex = std::complex<double>;

// Strip of evaluation points: Im T > kStripImMin, i.e. |t| = |e^{2 pi i T}|
// stays below e^{-2 pi kStripImMin}. The bound is empirical: the corpus
// centers converge comfortably there.
inline constexpr double kStripImMin = 1.2;

inline double strip_epsilon() { return std::exp(-2.0 * M_PI * kStripImMin); }

// The cubic family f_{a,v}(z) = z^3 - 3 a^2 z + 2 a^3 + v with critical
// points +-a and critical value f_{a,v}(+a) = v.
struct ComplexParam {
  Complex T{};
  Complex a{};           // e^{-2 pi i T}
  Complex v{};           // a * (series evaluated at t = e^{2 pi i T})
  double tail_bound = 0; // bound on |v - exact v| from the dropped tail
};

struct GreenValue {
  double value = 0;
  double error_bound = 0;
  int iterations = 0;
};

inline Complex family_eval(const ComplexParam& p, Complex z) {
  // factored form of z^3 - 3a^2 z + 2a^3 + v: near the critical point +a and
  // the preimage -2a the cancellation stays inside the small factors instead
  // of wiping out |a|^3-sized monomials
  return (z - p.a) * (z - p.a) * (z + 2.0 * p.a) + p.v;
}

namespace detail {

// Radius beyond which |f(z)/z^3 - 1| <= 1/3 + 1/27 < 1/2, so orbits escape
// monotonically and log|f(z)| tracks 3 log|z| within log 2.
inline double dominance_radius(Complex a, Complex c3) {
  return 3.0 * std::max({std::abs(a), std::cbrt(std::abs(c3)), 1.0});
}

// Procedure: green_polar
// Continues the Green function from an escaped iterate w = f^n(z) in
// log-polar form (L, th) = (log|w|, arg w): each step multiplies w by the
// ratio r = f(w)/w^3 = 1 - 3(a/w)^2 + (2a^3+v)/w^3, so
// log|w_{m+1}|/3^{m+1} - log|w_m|/3^m = log|r|/3^{m+1} and the increments
// collapse as |r - 1| decays. No overflow: w is never formed explicitly.
inline double green_polar(Complex a, Complex c3, Complex w, int n,
                          double* error_bound = nullptr,
                          int* iterations = nullptr) {
  double L = std::log(std::abs(w)), th = std::arg(w);
  double g = L / std::pow(3.0, n);
  double last_inc = std::log(2.0) / (2.0 * std::pow(3.0, n));
  for (int extra = 0; extra < 80; ++extra) {
    Complex iw = std::exp(Complex(-L, -th));
    Complex u = a * iw;
    Complex s = c3 * iw * iw * iw;
    Complex r = 1.0 - 3.0 * u * u + s;
    L = 3.0 * L + std::log(std::abs(r));
    th = std::remainder(3.0 * th + std::arg(r), 2.0 * M_PI);
    ++n;
    double inc = std::log(std::abs(r)) / std::pow(3.0, n);
    g += inc;
    last_inc = std::abs(inc);
    if (last_inc < 1e-17 * (1.0 + std::abs(g))) break;
  }
  if (error_bound) *error_bound = 1.5 * last_inc + 1e-12 * (1.0 + std::abs(g));
  if (iterations) *iterations = n;
  return g;
}

}  // namespace detail

// Procedure: evaluate_at_T
// (a, v) = (e^{-2 pi i T}, e^{-2 pi i T} * sum a_lambda e^{2 pi i T lambda})
// over the terms of nu up to exponent trunc. Each term is evaluated as
// exp(2 pi i T lambda), which fixes the branch of t^lambda consistently.
// The reported tail bound assumes |a_lambda| <= 1 beyond the truncation,
// which holds on the corpus; it is geometric in |e^{2 pi i T}| < epsilon.
inline ComplexParam evaluate_at_T(const PuiseuxSeries& nu, Complex T,
                                  const Rational& trunc,
                                  double eps = strip_epsilon()) {
  double im_min = -std::log(eps) / (2.0 * M_PI);
  if (!(T.imag() > im_min))
    throw OutsideStrip("Im T = " + std::to_string(T.imag()) +
                       " requires Im T > " + std::to_string(im_min));
  const Complex two_pi_i(0.0, 2.0 * M_PI);
  ComplexParam p;
  p.T = T;
  p.a = std::exp(-two_pi_i * T);
  Complex sum(0.0, 0.0);
  for (const auto& [e, c] : nu.terms()) {
    if (e > trunc) break;
    auto emb = cyclo_embed(c, 64);
    sum += Complex(emb.re_d(), emb.im_d()) * std::exp(two_pi_i * T * e.get_d());
  }
  p.v = p.a * sum;
  double q = std::exp(-2.0 * M_PI * T.imag());
  Rational cut = trunc;
  if (nu.precision() && *nu.precision() < cut) cut = *nu.precision();
  p.tail_bound = std::abs(p.a) * std::pow(q, cut.get_d()) / (1.0 - q);
  return p;
}

// Procedure: green_function
// G(z) = lim log|f^n(z)|/3^n: iterate until the orbit passes the cubic
// dominance radius, then hand over to the log-polar continuation for a
// rigorous tail. Orbits that never escape are presumed bounded (G = 0).
inline GreenValue green_function(const ComplexParam& p, Complex z,
                                 int max_iter = 512) {
  Complex c3 = 2.0 * p.a * p.a * p.a + p.v;
  double R = detail::dominance_radius(p.a, c3);
  Complex w = z;
  int n = 0;
  while (std::abs(w) <= R) {
    if (n >= max_iter)
      throw MaxIterationsWithoutEscape("no escape after " +
                                       std::to_string(max_iter) +
                                       " iterations");
    w = family_eval(p, w);
    ++n;
  }
  GreenValue out;
  out.value = detail::green_polar(p.a, c3, w, n, &out.error_bound,
                                  &out.iterations);
  return out;
}

// Procedure: boettcher_cocritical
// phi(2a) for v = q a via the telescoping product
// phi(2a) = 2a * prod_i (f^i(2a)/(f^{i-1}(2a))^3)^{3^-i}; each factor is
// 1 + O(3^-i) once the orbit escapes, and the very first ratio is
// 1/2 + q/(8 a^2), which carries the entire 2^{-1/3} of the limit.
inline Complex boettcher_cocritical(Complex a, int q) {
  if (q != 1 && q != -2)
    throw ProductDiverged("cocritical product defined for q in {1, -2}");
  if (!(std::abs(a) > 2.0))
    throw ProductDiverged("cocritical product requires |a| > 2");
  Complex c3 = 2.0 * a * a * a + (double)q * a;
  double L = std::log(std::abs(2.0 * a)), th = std::arg(2.0 * a);
  Complex S(0.0, 0.0);
  double p3 = 1.0;
  for (int i = 1; i <= 80; ++i) {
    Complex iw = std::exp(Complex(-L, -th));
    Complex u = a * iw;
    Complex s = c3 * iw * iw * iw;
    Complex r = 1.0 - 3.0 * u * u + s;
    if (!(std::abs(r - 1.0) < 1.0))
      throw ProductDiverged("cocritical factor " + std::to_string(i) +
                            " left the principal branch");
    p3 /= 3.0;
    Complex lr = std::log(r);
    S += lr * p3;
    L = 3.0 * L + std::log(std::abs(r));
    th = std::remainder(3.0 * th + std::arg(r), 2.0 * M_PI);
    if (std::abs(lr) * p3 < 1e-17) break;
  }
  return 2.0 * a * std::exp(S);
}

namespace detail {

// Procedure: below_threshold
// Decides G(z) < tau with a budget sized so that a non-escaping orbit
// certifies G(z) <= g_cap / 3^B < tau; escaped orbits get the rigorous
// log-polar value.
inline bool below_threshold(const ComplexParam& p, Complex z, double tau,
                            double R, double g_cap) {
  int B = (int)std::ceil(std::log(std::max(g_cap / tau, 3.0)) / std::log(3.0)) + 2;
  Complex w = z;
  for (int n = 0; n <= B; ++n) {
    if (std::abs(w) > R) {
      Complex c3 = 2.0 * p.a * p.a * p.a + p.v;
      return green_polar(p.a, c3, w, n) < tau;
    }
    w = family_eval(p, w);
  }
  return true;
}

// one flood-fill pass: split the points of a group by connectivity of
// {G < tau} restricted to the group's bounding box
struct DiskGroup {
  std::vector<int> ks;  // orbit indices sharing one disk
  double x0, y0, x1, y1;
};

inline std::vector<DiskGroup> split_group(const ComplexParam& p,
                                          const DiskGroup& g,
                                          const std::vector<Complex>& orbit,
                                          double tau, double R, double g_cap,
                                          int res) {
  // expand the box: the parent component was sampled at finite resolution
  double mx = 0.125 * std::max(g.x1 - g.x0, g.y1 - g.y0);
  double x0 = g.x0 - mx, x1 = g.x1 + mx, y0 = g.y0 - mx, y1 = g.y1 + mx;
  double dx = (x1 - x0) / res, dy = (y1 - y0) / res;
  auto cell_of = [&](Complex z) {
    int i = (int)std::floor((z.real() - x0) / dx);
    int j = (int)std::floor((z.imag() - y0) / dy);
    i = std::clamp(i, 0, res - 1);
    j = std::clamp(j, 0, res - 1);
    return j * res + i;
  };
  std::vector<char> inside((size_t)res * res, 0);
  for (int j = 0; j < res; ++j)
    for (int i = 0; i < res; ++i) {
      Complex c(x0 + (i + 0.5) * dx, y0 + (j + 0.5) * dy);
      inside[(size_t)(j * res + i)] = below_threshold(p, c, tau, R, g_cap);
    }
  // a query point certifies its own cell: the disks can be far smaller than
  // a cell, in which case only the point cells survive
  for (int k : g.ks) inside[(size_t)cell_of(orbit[(size_t)k])] = 1;
  // 4-neighbor components
  std::vector<int> comp((size_t)res * res, -1);
  int ncomp = 0;
  for (int start = 0; start < res * res; ++start) {
    if (!inside[(size_t)start] || comp[(size_t)start] >= 0) continue;
    std::queue<int> bfs;
    bfs.push(start);
    comp[(size_t)start] = ncomp;
    while (!bfs.empty()) {
      int c = bfs.front();
      bfs.pop();
      int ci = c % res, cj = c / res;
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        int ni = ci + di[d], nj = cj + dj[d];
        if (ni < 0 || nj < 0 || ni >= res || nj >= res) continue;
        int nc = nj * res + ni;
        if (inside[(size_t)nc] && comp[(size_t)nc] < 0) {
          comp[(size_t)nc] = ncomp;
          bfs.push(nc);
        }
      }
    }
    ++ncomp;
  }
  // regroup the points and shrink each box to its component's cells
  std::vector<DiskGroup> out;
  std::vector<int> comp_to_group(ncomp, -1);
  for (int k : g.ks) {
    int c = comp[(size_t)cell_of(orbit[(size_t)k])];
    if (comp_to_group[(size_t)c] < 0) {
      comp_to_group[(size_t)c] = (int)out.size();
      out.push_back(DiskGroup{{}, x1, y1, x0, y0});
    }
    out[(size_t)comp_to_group[(size_t)c]].ks.push_back(k);
  }
  for (int j = 0; j < res; ++j)
    for (int i = 0; i < res; ++i) {
      int c = comp[(size_t)(j * res + i)];
      if (c < 0 || comp_to_group[(size_t)c] < 0) continue;
      DiskGroup& og = out[(size_t)comp_to_group[(size_t)c]];
      og.x0 = std::min(og.x0, x0 + i * dx);
      og.x1 = std::max(og.x1, x0 + (i + 1) * dx);
      og.y0 = std::min(og.y0, y0 + j * dy);
      og.y1 = std::max(og.y1, y0 + (j + 1) * dy);
    }
  return out;
}

inline MarkedGrid complex_grid_at(const ComplexParam& p, int depth, int res,
                                  int escape_budget) {
  GreenValue gm = green_function(p, -p.a, escape_budget);  // must escape
  Complex c3 = 2.0 * p.a * p.a * p.a + p.v;
  double R = dominance_radius(p.a, c3);
  double g_cap = std::log(R) + 1.0;

  std::vector<Complex> orbit{p.a};
  for (int k = 1; k <= depth; ++k)
    orbit.push_back(family_eval(p, orbit.back()));

  MarkedGrid out(depth);
  // row 0: every orbit point must be a level 0 point, i.e. G < 3 G(-a)
  for (int k = 0; k <= depth; ++k) {
    if (!below_threshold(p, orbit[(size_t)k], 3.0 * gm.value, R, g_cap))
      throw NotALevelNPoint("orbit point " + std::to_string(k) +
                            " is not a level 0 point");
    out.set(0, k, 1);
  }
  // deeper rows: refine the partition disk by disk; level l disks nest in
  // level l-1 disks, so each flood fill zooms into its parent's box
  std::vector<DiskGroup> groups;
  {
    DiskGroup all;
    for (int k = 0; k <= depth; ++k) all.ks.push_back(k);
    double h = 3.0 * std::abs(p.a);
    all.x0 = -h; all.y0 = -h; all.x1 = h; all.y1 = h;
    groups.push_back(all);
  }
  for (int l = 1; l <= depth; ++l) {
    double tau = gm.value * std::pow(3.0, 1 - l);
    for (int k = 0; k + l <= depth; ++k)
      if (!below_threshold(p, orbit[(size_t)k], tau, R, g_cap))
        throw NotALevelNPoint("orbit point " + std::to_string(k) +
                              " is not a level " + std::to_string(l) +
                              " point");
    std::vector<DiskGroup> next;
    for (const DiskGroup& g : groups) {
      DiskGroup trimmed = g;
      trimmed.ks.clear();
      for (int k : g.ks)
        if (k + l <= depth) trimmed.ks.push_back(k);
      if (trimmed.ks.empty()) continue;
      for (DiskGroup& s : split_group(p, trimmed, orbit, tau, R, g_cap, res))
        next.push_back(std::move(s));
    }
    groups = std::move(next);
    for (const DiskGroup& g : groups) {
      bool has_crit =
          std::find(g.ks.begin(), g.ks.end(), 0) != g.ks.end();
      if (!has_crit) continue;
      for (int k : g.ks) out.set(l, k, 1);
    }
  }
  return out;
}

}  // namespace detail

// Procedure: complex_critical_grid
// Marked grid of the critical point +a: M_{l,k} = 1 iff f^k(a) lies in the
// level l disk of +a, where the level l disks are the connected components
// of {G < 3^{-l+1} G(-a)}. Connectivity is decided by flood fill on nested
// boxes; the whole computation re-runs at doubled resolution and any
// disagreement is surfaced, never averaged.
inline MarkedGrid complex_critical_grid(const ComplexParam& p, int depth,
                                        int resolution = 96,
                                        int escape_budget = 512) {
  MarkedGrid coarse = detail::complex_grid_at(p, depth, resolution,
                                              escape_budget);
  MarkedGrid fine = detail::complex_grid_at(p, depth, 2 * resolution,
                                            escape_budget);
  if (coarse.rows != fine.rows)
    throw ResolutionInsufficient("grids at resolution " +
                                 std::to_string(resolution) + " and " +
                                 std::to_string(2 * resolution) + " disagree");
  return fine;
}

}  // namespace pdyn
