// Inverse direction: starting from a convex solution u on a rectangle in
// (x1, x2), recover the generating data. det Hess u gives J, the weight law
// gives r = f(J), the gradient gives the seed values, and H comes back as
// the conjugate primitive of dH = sqrt(J) * (rotated inverse-Hessian
// gradient of r), which is closed exactly when u solves the equation; its
// finite-difference divergence is the gate that rejects impostors.

#pragma once

#include "joyce/construct.hpp"
#include "joyce/core.hpp"
#include "joyce/interp.hpp"
#include "joyce/potential.hpp"
#include "joyce/verify.hpp"

#include <cmath>
#include <functional>

namespace joyce {

// Nodes where |grad J| is large enough that (H, r) are honest local
// coordinates. delta is relative to max |J| over the physical extent.
template <std::floating_point S>
Mask2 ordinary_point_mask(const Grid2<S> &g, const Array2<S> &J, S delta = S(1e-6)) {
  const Array2<S> j1 = d1(g, J, 0);
  const Array2<S> j2 = d1(g, J, 1);
  const S extent = std::hypot(g.H1 - g.H0, g.r1 - g.r0);
  S jmax = 0;
  const IndexRect interior = margin_rect(g.nH, g.nr, 1);
  for (Index i = interior.i0; i <= interior.i1; ++i)
    for (Index j = interior.j0; j <= interior.j1; ++j)
      if (std::isfinite(J(i, j))) jmax = std::max(jmax, std::abs(J(i, j)));
  const S thr = delta * jmax / extent;
  Mask2 m(g.nH, g.nr);
  m.setConstant(false);
  for (Index i = interior.i0; i <= interior.i1; ++i)
    for (Index j = interior.j0; j <= interior.j1; ++j)
      m(i, j) = std::isfinite(j1(i, j)) && std::isfinite(j2(i, j)) &&
                std::hypot(j1(i, j), j2(i, j)) > thr;
  return m;
}

template <std::floating_point S>
struct ConjugateResult {
  Array2<S> H;              // NaN outside `region`; additive constant free
  IndexRect region;         // two nodes inside the boundary
  ResidualField<S> divergence;  // gate residual, three nodes in
  S path_disagreement = 0;
};

template <std::floating_point S>
struct ConjugateOptions {
  S div_rel_tol = S(1e-2);  // against 1 + sup |V|
};

// r_values need only be valid one node inside the boundary (NaN elsewhere
// is fine); everything here stays two or more nodes in.
template <std::floating_point S>
ConjugateResult<S> conjugate_hamiltonian(const Grid2<S> &g, const Array2<S> &u,
                                         const Array2<S> &r_values,
                                         const ConjugateOptions<S> &opt = {}) {
  const HessianFields<S> hess = fd_hessian(g, u);
  require_convex(g, hess, hess.region, "conjugate_hamiltonian");
  const S h1 = g.hH(), h2 = g.hr();

  // V = sqrt(det Hess) * Hess^{-1} grad r, central differences two nodes in.
  Array2<S> V1, V2;
  V1.setConstant(g.nH, g.nr, quiet_nan<S>());
  V2 = V1;
  const IndexRect vreg = margin_rect(g.nH, g.nr, 2);
  if (vreg.empty()) throw ConfigError("conjugate_hamiltonian: grid too small");
  S vsup = 0;
  for (Index i = vreg.i0; i <= vreg.i1; ++i)
    for (Index j = vreg.j0; j <= vreg.j1; ++j) {
      const S r1 = (r_values(i + 1, j) - r_values(i - 1, j)) / (2 * h1);
      const S r2 = (r_values(i, j + 1) - r_values(i, j - 1)) / (2 * h2);
      const S det = hess.det(i, j);
      const S g1 = (hess.h22(i, j) * r1 - hess.h12(i, j) * r2) / det;
      const S g2 = (-hess.h12(i, j) * r1 + hess.h11(i, j) * r2) / det;
      const S sq = std::sqrt(det);
      V1(i, j) = sq * g1;
      V2(i, j) = sq * g2;
      vsup = std::max({vsup, std::abs(V1(i, j)), std::abs(V2(i, j))});
    }

  // Closedness gate: dH = V2 dx1 - V1 dx2 is closed iff div V = 0.
  Array2<S> div;
  div.setConstant(g.nH, g.nr, quiet_nan<S>());
  const IndexRect dreg = margin_rect(g.nH, g.nr, 3);
  if (dreg.empty()) throw ConfigError("conjugate_hamiltonian: grid too small for the gate");
  for (Index i = dreg.i0; i <= dreg.i1; ++i)
    for (Index j = dreg.j0; j <= dreg.j1; ++j)
      div(i, j) = (V1(i + 1, j) - V1(i - 1, j)) / (2 * h1) +
                  (V2(i, j + 1) - V2(i, j - 1)) / (2 * h2);

  ConjugateResult<S> out;
  out.divergence = finish_residual(g, std::move(div), dreg);
  if (!(out.divergence.linf_norm <= opt.div_rel_tol * (1 + vsup)))
    throw CheckError("conjugate_hamiltonian: the conjugate form is not closed (div " +
                     std::to_string(double(out.divergence.linf_norm)) + " vs scale " +
                     std::to_string(double(1 + vsup)) + "); input does not solve the equation");

  // Integrate on the trimmed sub-grid, then scatter back.
  Grid2<S> sg{g.H(vreg.i0), g.H(vreg.i1), g.r(vreg.j0), g.r(vreg.j1), vreg.rows(), vreg.cols()};
  OneForm<S> w;
  w.grid = sg;
  w.name = "dH";
  w.a.resize(sg.nH, sg.nr);
  w.b.resize(sg.nH, sg.nr);
  for (Index i = 0; i < sg.nH; ++i)
    for (Index j = 0; j < sg.nr; ++j) {
      w.a(i, j) = V2(vreg.i0 + i, vreg.j0 + j);
      w.b(i, j) = -V1(vreg.i0 + i, vreg.j0 + j);
    }
  const PathIntegral<S> pi = integrate_form(w, sg.nH / 2, sg.nr / 2);
  out.path_disagreement = pi.disagreement;
  out.H.setConstant(g.nH, g.nr, quiet_nan<S>());
  for (Index i = 0; i < sg.nH; ++i)
    for (Index j = 0; j < sg.nr; ++j) out.H(vreg.i0 + i, vreg.j0 + j) = pi.values(i, j);
  out.region = vreg;
  return out;
}

// ----------------------------------------------------------------------------
// Full recovery.

template <std::floating_point S>
struct RecoveredSeeds {
  Array2<S> J, r, xi1, xi2;  // valid one node in (NaN outside)
  Array2<S> H;               // valid two nodes in, additive constant free
  IndexRect region_r;        // margin 1
  IndexRect region_H;        // margin 2
  ResidualField<S> divergence;
  S path_disagreement = 0;
};

template <std::floating_point S>
RecoveredSeeds<S> recover_seeds(const Grid2<S> &g, const Array2<S> &u, const JoyceData<S> &jd,
                                const ConjugateOptions<S> &opt = {}) {
  const HessianFields<S> hess = fd_hessian(g, u);
  require_convex(g, hess, hess.region, "recover_seeds");

  RecoveredSeeds<S> out;
  out.region_r = hess.region;
  out.J.setConstant(g.nH, g.nr, quiet_nan<S>());
  out.r = out.J;
  out.xi1 = d1(g, u, 0);
  out.xi2 = d1(g, u, 1);
  for (Index i = hess.region.i0; i <= hess.region.i1; ++i)
    for (Index j = hess.region.j0; j <= hess.region.j1; ++j) {
      const S J = hess.det(i, j);
      out.J(i, j) = J;
      try {
        out.r(i, j) = f_of_J(jd, J);
      } catch (const Error &e) {
        throw CheckError("recover_seeds: J = " + std::to_string(double(J)) + " at node (" +
                         std::to_string(i) + ", " + std::to_string(j) +
                         ") leaves the weight's J range: " + e.what());
      }
    }

  ConjugateResult<S> conj = conjugate_hamiltonian(g, u, out.r, opt);
  out.H = std::move(conj.H);
  out.region_H = conj.region;
  out.divergence = std::move(conj.divergence);
  out.path_disagreement = conj.path_disagreement;
  return out;
}

// ----------------------------------------------------------------------------
// Gauge alignment of recovered seeds against reference evaluators. The
// recovery determines H only up to an additive constant c, and the input u
// may carry an affine gauge that shifts each seed by a constant d_i. For a
// trial c the best d_i are plain means; the best c minimizes the summed
// squared mismatch and is found by golden-section over the caller's
// bracket.

template <std::floating_point S>
struct GaugeFit {
  S c = 0, d1 = 0, d2 = 0;
  S rms = 0, sup = 0;
};

template <std::floating_point S>
GaugeFit<S> fit_seed_gauge(const RecoveredSeeds<S> &rec,
                           const std::function<S(S, S)> &ref1,
                           const std::function<S(S, S)> &ref2, S c_lo, S c_hi) {
  const IndexRect &reg = rec.region_H;
  const Index n = reg.area();
  if (n < 4) throw ConfigError("fit_seed_gauge: recovery region too small");

  auto stats = [&](S c, S &d1v, S &d2v, S &rms, S &sup) {
    S m1 = 0, m2 = 0;
    for (Index i = reg.i0; i <= reg.i1; ++i)
      for (Index j = reg.j0; j <= reg.j1; ++j) {
        const S H = rec.H(i, j) - c, r = rec.r(i, j);
        m1 += rec.xi1(i, j) - ref1(H, r);
        m2 += rec.xi2(i, j) - ref2(H, r);
      }
    d1v = m1 / S(n);
    d2v = m2 / S(n);
    S sse = 0, mx = 0;
    for (Index i = reg.i0; i <= reg.i1; ++i)
      for (Index j = reg.j0; j <= reg.j1; ++j) {
        const S H = rec.H(i, j) - c, r = rec.r(i, j);
        const S e1 = rec.xi1(i, j) - ref1(H, r) - d1v;
        const S e2 = rec.xi2(i, j) - ref2(H, r) - d2v;
        sse += e1 * e1 + e2 * e2;
        mx = std::max({mx, std::abs(e1), std::abs(e2)});
      }
    rms = std::sqrt(sse / S(2 * n));
    sup = mx;
  };
  auto objective = [&](S c) {
    S d1v, d2v, rms, sup;
    stats(c, d1v, d2v, rms, sup);
    return rms;
  };

  const S gr = (std::sqrt(S(5)) - 1) / 2;
  S a = c_lo, b = c_hi;
  S x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  S f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 200 && (b - a) > S(1e-12) * (1 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = objective(x2);
    }
  }
  GaugeFit<S> fit;
  fit.c = (a + b) / 2;
  stats(fit.c, fit.d1, fit.d2, fit.rms, fit.sup);
  return fit;
}

// ----------------------------------------------------------------------------
// Legendre transform on a grid: invert the gradient map y = grad u(x) over
// a target box in y and form u*(y) = <x, y> - u(x(y)).

template <std::floating_point S>
struct LegendreResult {
  Grid2<S> grid;            // y-grid
  Array2<S> ustar, x1, x2;  // x(y) recorded for checks
};

template <std::floating_point S>
LegendreResult<S> legendre_transform_grid(const Grid2<S> &g, const Array2<S> &u,
                                          const PhysBox<S> &ybox, Index n1, Index n2) {
  ScalarField<S> f;
  f.grid = g;
  f.values = u;
  f.name = "u";
  const Jet2<S> jet = fd_jet(g, u);
  ScalarField<S> g1 = make_field(g, "ux1");
  g1.values = jet.dH;
  ScalarField<S> g2 = make_field(g, "ux2");
  g2.values = jet.dr;

  MapInverter<S> inv{BicubicField<S>::from_field(g1), BicubicField<S>::from_field(g2)};
  const BicubicField<S> bu = BicubicField<S>::from_field(f);

  LegendreResult<S> out;
  out.grid = make_grid(ybox.a0, ybox.a1, ybox.b0, ybox.b1, n1, n2);
  out.ustar.resize(n1, n2);
  out.x1.resize(n1, n2);
  out.x2.resize(n1, n2);
  std::optional<std::pair<S, S>> row_start;
  for (Index i = 0; i < n1; ++i) {
    std::optional<std::pair<S, S>> start = row_start;
    for (Index j = 0; j < n2; ++j) {
      const S y1 = out.grid.x1(i), y2 = out.grid.x2(j);
      const auto res = inv.invert(y1, y2, start);
      start = std::make_pair(res.H, res.r);
      if (j == 0) row_start = start;
      out.x1(i, j) = res.H;
      out.x2(i, j) = res.r;
      out.ustar(i, j) = res.H * y1 + res.r * y2 - bu(res.H, res.r);
    }
  }
  return out;
}

// Interior box of the gradient image, shrunk toward its center; a handy
// default target for the transform.
template <std::floating_point S>
PhysBox<S> suggest_ybox(const Grid2<S> &g, const Array2<S> &u, S shrink = S(0.5)) {
  const Jet2<S> jet = fd_jet(g, u);
  const IndexRect reg = margin_rect(g.nH, g.nr, 1);
  S lo1 = std::numeric_limits<S>::max(), hi1 = std::numeric_limits<S>::lowest();
  S lo2 = lo1, hi2 = hi1;
  for (Index i = reg.i0; i <= reg.i1; ++i)
    for (Index j = reg.j0; j <= reg.j1; ++j) {
      lo1 = std::min(lo1, jet.dH(i, j));
      hi1 = std::max(hi1, jet.dH(i, j));
      lo2 = std::min(lo2, jet.dr(i, j));
      hi2 = std::max(hi2, jet.dr(i, j));
    }
  const S c1 = (lo1 + hi1) / 2, c2 = (lo2 + hi2) / 2;
  const S w1 = (hi1 - lo1) / 2 * shrink, w2 = (hi2 - lo2) / 2 * shrink;
  if (!(w1 > 0) || !(w2 > 0)) throw ConfigError("suggest_ybox: gradient image is degenerate");
  return {c1 - w1, c1 + w1, c2 - w2, c2 + w2};
}

}  // namespace joyce
