// Interpolation stack: monotone cubic (Fritsch-Carlson) for 1-D tables,
// bicubic Hermite patches for grid fields, and damped Newton inversion of
// grid maps. Chart resampling, seed recovery and the Legendre transform all
// go through these; there is deliberately no second interpolation scheme.

#pragma once

#include "joyce/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace joyce {

// Monotone piecewise-cubic interpolant of an increasing table. Fritsch and
// Carlson's slope limiter keeps the interpolant monotone wherever the data
// is, which the inverse lookups rely on.
template <std::floating_point S>
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<S> x, std::vector<S> y) : x_(std::move(x)), y_(std::move(y)) {
    const size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ConfigError("pchip: need matching tables, >= 2 rows");
    for (size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i + 1] > x_[i])) throw ConfigError("pchip: abscissae must be strictly increasing");
    d_.resize(n);
    std::vector<S> delta(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
    } else {
      for (size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= S(0)) {
          d_[i] = 0;
        } else {
          const S w1 = S(2) * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
          const S w2 = (x_[i + 1] - x_[i]) + S(2) * (x_[i] - x_[i - 1]);
          d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
      }
      d_[0] = edge_slope(x_[1] - x_[0], x_[2] - x_[1], delta[0], delta[1]);
      d_[n - 1] = edge_slope(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3], delta[n - 2], delta[n - 3]);
    }
  }

  S operator()(S x) const { return eval(x).first; }
  S derivative(S x) const { return eval(x).second; }
  S x_min() const { return x_.front(); }
  S x_max() const { return x_.back(); }

  std::pair<S, S> eval(S x) const {
    const size_t i = cell(x);
    const S h = x_[i + 1] - x_[i];
    const S t = (x - x_[i]) / h;
    const S y0 = y_[i], y1 = y_[i + 1], m0 = d_[i] * h, m1 = d_[i + 1] * h;
    const S h00 = (S(1) + S(2) * t) * (S(1) - t) * (S(1) - t);
    const S h10 = t * (S(1) - t) * (S(1) - t);
    const S h01 = t * t * (S(3) - S(2) * t);
    const S h11 = t * t * (t - S(1));
    const S v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
    const S dh00 = S(6) * t * (t - S(1));
    const S dh10 = (S(1) - t) * (S(1) - S(3) * t);
    const S dh01 = -dh00;
    const S dh11 = t * (S(3) * t - S(2));
    const S dv = (dh00 * y0 + dh10 * m0 + dh01 * y1 + dh11 * m1) / h;
    return {v, dv};
  }

 private:
  static S edge_slope(S h0, S h1, S del0, S del1) {
    S d = ((S(2) * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if (d * del0 <= S(0))
      d = 0;
    else if (del0 * del1 < S(0) && std::abs(d) > S(3) * std::abs(del0))
      d = S(3) * del0;
    return d;
  }

  size_t cell(S x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    size_t i = size_t(std::distance(x_.begin(), it));
    if (i == 0) return 0;
    if (i >= x_.size()) return x_.size() - 2;
    return i - 1;
  }

  std::vector<S> x_, y_, d_;
};

// Bicubic Hermite patch interpolation of one grid field. Corner data per
// cell is (value, dH, dr, dHr); with analytic jets the interpolant is
// fourth-order accurate, with finite-difference jets it degrades gracefully
// to the stencil's accuracy.
template <std::floating_point S>
class BicubicField {
 public:
  BicubicField() = default;
  BicubicField(const Grid2<S> &g, const Array2<S> &v, const Array2<S> &dH, const Array2<S> &dr,
               const Array2<S> &dHr)
      : g_(g), v_(v), dH_(dH), dr_(dr), dHr_(dHr) {}

  // Build from a field, deriving the needed partials from its jet (or the
  // canonical FD jet when absent).
  static BicubicField from_field(const ScalarField<S> &f) {
    if (f.has_jet()) return BicubicField(f.grid, f.values, f.jet->dH, f.jet->dr, f.jet->dHr);
    Jet2<S> jet = fd_jet(f.grid, f.values);
    return BicubicField(f.grid, f.values, jet.dH, jet.dr, jet.dHr);
  }

  struct Sample {
    S v, dH, dr;
  };

  S operator()(S H, S r) const { return sample(H, r).v; }

  Sample sample(S H, S r) const {
    const S hH = g_.hH(), hr = g_.hr();
    Index i = cell_index(S((H - g_.H0) / hH), g_.nH);
    Index j = cell_index(S((r - g_.r0) / hr), g_.nr);
    const S s = (H - g_.H(i)) / hH;
    const S t = (r - g_.r(j)) / hr;

    // Tensor-product Hermite basis in each direction.
    const auto basis = [](S u, std::array<S, 4> &b, std::array<S, 4> &db) {
      b = {(S(1) + S(2) * u) * (S(1) - u) * (S(1) - u), u * (S(1) - u) * (S(1) - u),
           u * u * (S(3) - S(2) * u), u * u * (u - S(1))};
      db = {S(6) * u * (u - S(1)), (S(1) - u) * (S(1) - S(3) * u), S(6) * u * (S(1) - u),
            u * (S(3) * u - S(2))};
    };
    std::array<S, 4> bs, dbs, bt, dbt;
    basis(s, bs, dbs);
    basis(t, bt, dbt);

    // Corner coefficient rows: value-like terms and derivative-like terms,
    // derivatives scaled onto the unit cell.
    const Index i1 = i + 1, j1 = j + 1;
    const S c[4][4] = {
        {v_(i, j), dr_(i, j) * hr, v_(i, j1), dr_(i, j1) * hr},
        {dH_(i, j) * hH, dHr_(i, j) * hH * hr, dH_(i, j1) * hH, dHr_(i, j1) * hH * hr},
        {v_(i1, j), dr_(i1, j) * hr, v_(i1, j1), dr_(i1, j1) * hr},
        {dH_(i1, j) * hH, dHr_(i1, j) * hH * hr, dH_(i1, j1) * hH, dHr_(i1, j1) * hH * hr}};

    Sample out{0, 0, 0};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        out.v += bs[a] * c[a][b] * bt[b];
        out.dH += dbs[a] * c[a][b] * bt[b];
        out.dr += bs[a] * c[a][b] * dbt[b];
      }
    out.dH /= hH;
    out.dr /= hr;
    return out;
  }

  const Grid2<S> &grid() const { return g_; }

 private:
  static Index cell_index(S u, Index n) {
    Index i = Index(std::floor(u));
    return std::clamp(i, Index(0), n - 2);
  }

  Grid2<S> g_;
  Array2<S> v_, dH_, dr_, dHr_;
};

// Inversion of a two-component grid map (H, r) -> (m1(H,r), m2(H,r)) by
// damped Newton on the interpolated map. Seeded from the nearest grid node
// to the target unless a caller supplies a better start.
template <std::floating_point S>
struct MapInverter {
  BicubicField<S> m1, m2;
  S tol = S(1e-12);
  int max_iter = 30;

  struct Result {
    S H, r;
    int iterations;
  };

  Result invert(S target1, S target2, std::optional<std::pair<S, S>> start = {}) const {
    const Grid2<S> &g = m1.grid();
    S H, r;
    if (start) {
      H = start->first;
      r = start->second;
    } else {
      // Nearest node by map value; coarse but dependable.
      S best = std::numeric_limits<S>::max();
      H = g.H0;
      r = g.r0;
      for (Index i = 0; i < g.nH; ++i)
        for (Index j = 0; j < g.nr; ++j) {
          const S d1v = m1(g.H(i), g.r(j)) - target1;
          const S d2v = m2(g.H(i), g.r(j)) - target2;
          const S d = d1v * d1v + d2v * d2v;
          if (d < best) {
            best = d;
            H = g.H(i);
            r = g.r(j);
          }
        }
    }
    const S scale = std::max({std::abs(target1), std::abs(target2), S(1)});
    for (int it = 1; it <= max_iter; ++it) {
      const auto s1 = m1.sample(H, r), s2 = m2.sample(H, r);
      const S f1 = s1.v - target1, f2 = s2.v - target2;
      if (std::sqrt(f1 * f1 + f2 * f2) <= tol * scale) return {H, r, it};
      const S det = s1.dH * s2.dr - s1.dr * s2.dH;
      if (!(std::abs(det) > S(0))) throw NumericError("map inversion: singular Jacobian");
      S dH = -(s2.dr * f1 - s1.dr * f2) / det;
      S dr = -(-s2.dH * f1 + s1.dH * f2) / det;
      // Keep iterates inside the grid; halve the step until they are.
      S lam = 1;
      for (int k = 0; k < 40; ++k) {
        const S Hn = H + lam * dH, rn = r + lam * dr;
        if (Hn >= g.H0 && Hn <= g.H1 && rn >= g.r0 && rn <= g.r1) {
          H = Hn;
          r = rn;
          break;
        }
        lam /= 2;
        if (k == 39) throw NumericError("map inversion: step left the grid");
      }
    }
    throw NumericError("map inversion: Newton did not converge");
  }
};

}  // namespace joyce
