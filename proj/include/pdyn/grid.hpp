#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdyn/errors.hpp"
#include "pdyn/rational.hpp"

namespace pdyn {

// Triangular 0-1 grid M_{l,k}, l + k <= depth; row l has depth+1-l entries.
// `period` annotates an eventually column-periodic (hence infinite) grid.
struct MarkedGrid {
  int depth = 0;
  std::vector<std::vector<int>> rows;
  std::optional<int> period;

  MarkedGrid() = default;
  explicit MarkedGrid(int n) : depth(n), rows((size_t)n + 1) {
    for (int l = 0; l <= n; ++l) rows[(size_t)l].assign((size_t)(n + 1 - l), 0);
  }

  static MarkedGrid full(int n) {
    MarkedGrid g(n);
    for (auto& row : g.rows)
      for (int& b : row) b = 1;
    g.period = 1;
    return g;
  }

  int at(long l, long k) const {
    if (period && l + k > depth && *period > 0) k = k % *period;
    if (l < 0 || k < 0 || l + k > depth) throw std::out_of_range("grid index");
    return rows[(size_t)l][(size_t)k];
  }
  void set(long l, long k, int bit) { rows[(size_t)l][(size_t)k] = bit; }

  bool operator==(const MarkedGrid& o) const {
    return depth == o.depth && rows == o.rows && period == o.period;
  }
};

struct GridViolation {
  std::string rule;  // "Ma" | "Mb" | "Mc" | "Md"
  long l = 0, k = 0;  // cell whose required value fails
};

// Procedure: check_admissible
// The four marked-grid rules for a critical grid (the grid itself plays the
// role of the critical reference). Rules are tried in order Ma..Md; within a
// rule the reported cell is the first failing conclusion in row-major order.
inline std::optional<GridViolation> check_admissible(const MarkedGrid& g) {
  const int n = g.depth;
  auto M = [&](long l, long k) { return g.rows[(size_t)l][(size_t)k]; };

  // (Ma) a marked cell is marked all the way down its column
  for (long j = 0; j <= n; ++j)
    for (long k = 0; j + k <= n; ++k) {
      if (M(j, k)) continue;
      for (long l = j + 1; l + k <= n; ++l)
        if (M(l, k)) return GridViolation{"Ma", j, k};
    }

  // (Mb) a marked M_{l,k} copies the critical diagonal: M_{l-i,k+i} = M_{l-i,i}
  {
    std::optional<GridViolation> worst;
    for (long l = 0; l <= n; ++l)
      for (long k = 0; l + k <= n; ++k) {
        if (!M(l, k)) continue;
        for (long i = 0; i <= l; ++i)
          if (M(l - i, k + i) != M(l - i, i)) {
            GridViolation v{"Mb", l - i, k + i};
            if (!worst || v.l < worst->l || (v.l == worst->l && v.k < worst->k))
              worst = v;
          }
      }
    if (worst) return worst;
  }

  // (Mc) for l >= 1: if M_{l-i,i} is unmarked for 0 < i < k, M_{l+1-k,k} is
  // marked, M_{l,m} is marked and M_{l+1,m} is not, then M_{l+1-k,m+k} is not
  // marked. (l = 0 instances are excluded: they would force row 0 unmarked.)
  {
    std::optional<GridViolation> worst;
    for (long l = 1; l <= n; ++l)
      for (long k = 1; k <= l + 1 && k <= n; ++k) {
        if (!M(l + 1 - k, k)) continue;
        bool clear = true;
        for (long i = 1; i < k && clear; ++i)
          if (M(l - i, i)) clear = false;
        if (!clear) continue;
        for (long m = 0; l + m + 1 <= n; ++m) {
          if (!M(l, m) || M(l + 1, m)) continue;
          if (M(l + 1 - k, m + k)) {
            GridViolation v{"Mc", l + 1 - k, m + k};
            if (!worst || v.l < worst->l || (v.l == worst->l && v.k < worst->k))
              worst = v;
          }
        }
      }
    if (worst) return worst;
  }

  // (Md) if M_{1,l} is unmarked, M_{l,k} is marked, M_{l+1,k} is not, and
  // M_{l-i,k+i} is unmarked for 0 < i < l, then M_{1,k+l} is marked
  {
    std::optional<GridViolation> worst;
    for (long l = 1; l <= n; ++l)
      for (long k = 0; l + k + 1 <= n; ++k) {
        if (M(1, l) || !M(l, k) || M(l + 1, k)) continue;
        bool clear = true;
        for (long i = 1; i < l && clear; ++i)
          if (M(l - i, k + i)) clear = false;
        if (!clear) continue;
        if (!M(1, k + l)) {
          GridViolation v{"Md", 1, k + l};
          if (!worst || v.l < worst->l || (v.l == worst->l && v.k < worst->k))
            worst = v;
        }
      }
    if (worst) return worst;
  }

  return std::nullopt;
}

inline void require_admissible(const MarkedGrid& g) {
  if (auto v = check_admissible(g))
    throw Violation(v->rule, (int)v->l, (int)v->k);
}

struct GridModuli {
  std::vector<Rational> moduli;  // mod A_l = 2^{-S_l} mod A_0
  std::vector<Rational> log_r;   // log r_l = log r_hat - sum_{j<=l} mod A_j
};

// Procedure: grid_moduli
// S_l = sum_{i=0}^{l-1} M_{l-i,i}; mod A_l = 2^{-S_l} mod A_0; the nest radii
// follow by subtracting the accumulated moduli from log r_hat.
inline GridModuli grid_moduli(const MarkedGrid& g,
                              const Rational& mod_A0 = Rational(2),
                              const Rational& log_rhat = Rational(2)) {
  GridModuli out;
  Rational acc = log_rhat;
  for (long l = 0; l <= g.depth; ++l) {
    long S = 0;
    for (long i = 0; i < l; ++i) S += g.at(l - i, i);
    Rational m = mod_A0 * pow2_neg(S);
    acc -= m;
    out.moduli.push_back(m);
    out.log_r.push_back(acc);
  }
  return out;
}

}  // namespace pdyn
