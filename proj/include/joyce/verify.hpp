// Checks on constructed charts and on solutions resampled to a rectangular
// grid in the image coordinates (x1, x2).
//
// The fourth-order equation is checked two independent ways: directly, as
// D11 w11 + 2 D12 w12 + D22 w22 with w_ij = J psi'(J) u^{ij}, and as the
// divergence of the flux field v_j = D_i w_ij. Both use the canonical
// stencils; the direct residual lives two nodes inside the boundary, the
// flux divergence three. On a genuine solution the two are consistent
// discretizations of the same operator, so their norms stay within a fixed
// ratio band as h -> 0.

#pragma once

#include "joyce/construct.hpp"
#include "joyce/core.hpp"
#include "joyce/interp.hpp"
#include "joyce/potential.hpp"

#include <cmath>
#include <string>

namespace joyce {

// ----------------------------------------------------------------------------
// Finite-difference Hessian. Mixed partial is the r-stencil then the
// H-stencil, same as the canonical jet. Entries exist everywhere; they are
// trusted one node in, which is what `region` records.

template <std::floating_point S>
struct HessianFields {
  Array2<S> h11, h12, h22, det;
  IndexRect region;
};

template <std::floating_point S>
HessianFields<S> fd_hessian(const Grid2<S> &g, const Array2<S> &u) {
  HessianFields<S> h;
  h.h11 = d2(g, u, 0);
  h.h22 = d2(g, u, 1);
  h.h12 = d1(g, Array2<S>(d1(g, u, 1)), 0);
  h.det = h.h11 * h.h22 - h.h12 * h.h12;
  h.region = margin_rect(g.nH, g.nr, 1);
  return h;
}

template <std::floating_point S>
struct ConvexityReport {
  bool ok = true;
  Index i = -1, j = -1;  // first failing node in row-major order
  S h11 = 0, det = 0;
};

template <std::floating_point S>
ConvexityReport<S> check_convexity(const HessianFields<S> &h, const IndexRect &region) {
  for (Index i = region.i0; i <= region.i1; ++i)
    for (Index j = region.j0; j <= region.j1; ++j)
      if (!(h.h11(i, j) > 0) || !(h.det(i, j) > 0))
        return {false, i, j, h.h11(i, j), h.det(i, j)};
  return {};
}

template <std::floating_point S>
void require_convex(const Grid2<S> &g, const HessianFields<S> &h, const IndexRect &region,
                    const std::string &what) {
  const ConvexityReport<S> rep = check_convexity(h, region);
  if (!rep.ok)
    throw CheckError(what + ": Hessian not positive definite at node (" + std::to_string(rep.i) +
                     ", " + std::to_string(rep.j) + "), x = (" + std::to_string(double(g.H(rep.i))) +
                     ", " + std::to_string(double(g.r(rep.j))) + "), h11 = " +
                     std::to_string(double(rep.h11)) + ", det = " + std::to_string(double(rep.det)));
}

// ----------------------------------------------------------------------------
// Hessian of u in image coordinates by the chain rule, Hess u = B A^{-1},
// evaluated from the chart's forms and seed jets. Algebraic in the jets:
// defects here are rounding-level whatever the grid.

template <std::floating_point S>
struct ChainHessian {
  Array2<S> h11, h12, h22, det;  // h12 symmetrized; raw asymmetry reported
  S symmetry_defect = 0;
  S det_vs_J = 0;  // sup |det - J| / sup |J| over the region
  IndexRect region;
};

template <std::floating_point S>
ChainHessian<S> hessian_via_chain(const Chart<S> &ch) {
  const Jet2<S> &j1 = *ch.xi1.jet;
  const Jet2<S> &j2 = *ch.xi2.jet;
  ChainHessian<S> out;
  const Grid2<S> &g = ch.grid;
  out.h11.setConstant(g.nH, g.nr, quiet_nan<S>());
  out.h12 = out.h11;
  out.h22 = out.h11;
  out.det = out.h11;
  out.region = ch.rect;
  S dJ = 0, sJ = std::numeric_limits<S>::min();
  for (Index i = ch.rect.i0; i <= ch.rect.i1; ++i)
    for (Index j = ch.rect.j0; j <= ch.rect.j1; ++j) {
      const S inv = 1 / ch.detA(i, j);
      const S a1 = ch.e1.a(i, j), b1 = ch.e1.b(i, j);
      const S a2 = ch.e2.a(i, j), b2 = ch.e2.b(i, j);
      const S h11 = inv * (j1.dH(i, j) * b2 - j1.dr(i, j) * a2);
      const S h12 = inv * (-j1.dH(i, j) * b1 + j1.dr(i, j) * a1);
      const S h21 = inv * (j2.dH(i, j) * b2 - j2.dr(i, j) * a2);
      const S h22 = inv * (-j2.dH(i, j) * b1 + j2.dr(i, j) * a1);
      out.h11(i, j) = h11;
      out.h22(i, j) = h22;
      out.h12(i, j) = (h12 + h21) / 2;
      out.det(i, j) = h11 * h22 - out.h12(i, j) * out.h12(i, j);
      out.symmetry_defect = std::max(out.symmetry_defect, std::abs(h12 - h21));
      dJ = std::max(dJ, std::abs(out.det(i, j) - ch.J(i, j)));
      sJ = std::max(sJ, std::abs(ch.J(i, j)));
    }
  out.det_vs_J = dJ / sJ;
  return out;
}

// ----------------------------------------------------------------------------
// Sub-grid extraction (used to restrict interpolation to the chart's
// nondegenerate rectangle).

template <std::floating_point S>
ScalarField<S> subfield(const ScalarField<S> &f, const IndexRect &rect) {
  if (rect.empty() || rect.rows() < 3 || rect.cols() < 3)
    throw ConfigError("subfield: rectangle too small");
  const Grid2<S> &g = f.grid;
  Grid2<S> sg{g.H(rect.i0), g.H(rect.i1), g.r(rect.j0), g.r(rect.j1), rect.rows(), rect.cols()};
  ScalarField<S> out;
  out.grid = sg;
  out.name = f.name;
  out.values = f.values.block(rect.i0, rect.j0, rect.rows(), rect.cols());
  if (f.has_jet()) {
    Jet2<S> jet;
    jet.dH = f.jet->dH.block(rect.i0, rect.j0, rect.rows(), rect.cols());
    jet.dr = f.jet->dr.block(rect.i0, rect.j0, rect.rows(), rect.cols());
    jet.dHH = f.jet->dHH.block(rect.i0, rect.j0, rect.rows(), rect.cols());
    jet.dHr = f.jet->dHr.block(rect.i0, rect.j0, rect.rows(), rect.cols());
    jet.drr = f.jet->drr.block(rect.i0, rect.j0, rect.rows(), rect.cols());
    out.jet = std::move(jet);
    out.jet_source = f.jet_source;
  }
  return out;
}

// ----------------------------------------------------------------------------
// Resampling a chart to a rectangular grid in (x1, x2) by Newton inversion
// of the interpolated chart map.

template <std::floating_point S>
struct XGridSolution {
  Grid2<S> grid;                 // axes are x1 (axis 0) and x2 (axis 1)
  Array2<S> u, xi1, xi2, J;      // J from the weight law at the source point
  Array2<S> Hs, rs;              // source coordinates found by the inversion
  std::string potential_spec;
};

template <std::floating_point S>
XGridSolution<S> resample_to_xgrid(const Chart<S> &ch, const JoyceData<S> &jd,
                                   const PhysBox<S> &xbox, Index n1, Index n2) {
  const ScalarField<S> x1s = subfield(ch.x1, ch.rect);
  const ScalarField<S> x2s = subfield(ch.x2, ch.rect);
  const ScalarField<S> us = subfield(ch.u, ch.rect);
  const ScalarField<S> xi1s = subfield(ch.xi1, ch.rect);
  const ScalarField<S> xi2s = subfield(ch.xi2, ch.rect);

  const BicubicField<S> bu = BicubicField<S>::from_field(us);
  const BicubicField<S> b1 = BicubicField<S>::from_field(xi1s);
  const BicubicField<S> b2 = BicubicField<S>::from_field(xi2s);
  MapInverter<S> inv{BicubicField<S>::from_field(x1s), BicubicField<S>::from_field(x2s)};

  XGridSolution<S> out;
  out.grid = make_grid(xbox.a0, xbox.a1, xbox.b0, xbox.b1, n1, n2);
  out.potential_spec = jd.potential_spec;
  out.u.resize(n1, n2);
  out.xi1.resize(n1, n2);
  out.xi2.resize(n1, n2);
  out.J.resize(n1, n2);
  out.Hs.resize(n1, n2);
  out.rs.resize(n1, n2);

  std::optional<std::pair<S, S>> row_start;
  for (Index i = 0; i < n1; ++i) {
    std::optional<std::pair<S, S>> start = row_start;
    for (Index j = 0; j < n2; ++j) {
      const auto res = inv.invert(out.grid.x1(i), out.grid.x2(j), start);
      start = std::make_pair(res.H, res.r);
      if (j == 0) row_start = start;
      out.Hs(i, j) = res.H;
      out.rs(i, j) = res.r;
      out.u(i, j) = bu(res.H, res.r);
      out.xi1(i, j) = b1(res.H, res.r);
      out.xi2(i, j) = b2(res.H, res.r);
      const auto s = eval_joyce(jd, res.r);
      out.J(i, j) = 1 / (s.p * s.p);
    }
  }
  return out;
}

// Deterministic search for a target box that inverts cleanly: centered on
// the chart image of the rectangle's center node, shrunk until the corners
// and edge midpoints all invert.
template <std::floating_point S>
PhysBox<S> suggest_xbox(const Chart<S> &ch) {
  const IndexRect &rc = ch.rect;
  const Index ci = (rc.i0 + rc.i1) / 2, cj = (rc.j0 + rc.j1) / 2;
  const S c1 = ch.x1.values(ci, cj), c2 = ch.x2.values(ci, cj);
  S lo1 = std::numeric_limits<S>::max(), hi1 = std::numeric_limits<S>::lowest();
  S lo2 = lo1, hi2 = hi1;
  for (Index i = rc.i0; i <= rc.i1; ++i)
    for (Index j = rc.j0; j <= rc.j1; ++j) {
      lo1 = std::min(lo1, ch.x1.values(i, j));
      hi1 = std::max(hi1, ch.x1.values(i, j));
      lo2 = std::min(lo2, ch.x2.values(i, j));
      hi2 = std::max(hi2, ch.x2.values(i, j));
    }
  const S hw1 = std::min(hi1 - c1, c1 - lo1), hw2 = std::min(hi2 - c2, c2 - lo2);
  if (!(hw1 > 0) || !(hw2 > 0)) throw ConfigError("suggest_xbox: degenerate chart image");

  const ScalarField<S> x1s = subfield(ch.x1, rc);
  const ScalarField<S> x2s = subfield(ch.x2, rc);
  MapInverter<S> inv{BicubicField<S>::from_field(x1s), BicubicField<S>::from_field(x2s)};
  for (S s : {S(0.85), S(0.75), S(0.65), S(0.55), S(0.45), S(0.35), S(0.25)}) {
    const PhysBox<S> box{c1 - s * hw1, c1 + s * hw1, c2 - s * hw2, c2 + s * hw2};
    bool ok = true;
    const S p1[3] = {box.a0, (box.a0 + box.a1) / 2, box.a1};
    const S p2[3] = {box.b0, (box.b0 + box.b1) / 2, box.b1};
    for (int a = 0; a < 3 && ok; ++a)
      for (int b = 0; b < 3 && ok; ++b) {
        if (a == 1 && b == 1) continue;
        try {
          inv.invert(p1[a], p2[b]);
        } catch (const NumericError &) {
          ok = false;
        }
      }
    if (ok) return box;
  }
  throw ConfigError("suggest_xbox: no safe target box found; supply one explicitly");
}

// ----------------------------------------------------------------------------
// Direct Euler-Lagrange residual.

namespace detail {

template <std::floating_point S>
struct WeightFields {
  HessianFields<S> hess;
  Array2<S> w11, w12, w22;  // J psi'(J) times the inverse Hessian
};

template <std::floating_point S>
WeightFields<S> weight_fields(const Grid2<S> &g, const Array2<S> &u, const Potential<S> &pot,
                              const std::string &what) {
  WeightFields<S> wf;
  wf.hess = fd_hessian(g, u);
  require_convex(g, wf.hess, wf.hess.region, what);
  wf.w11.setConstant(g.nH, g.nr, quiet_nan<S>());
  wf.w12 = wf.w11;
  wf.w22 = wf.w11;
  // With J = det Hess, J psi'(J) u^{ij} reduces to psi'(J) adj(Hess)^T_ij;
  // the adjugate keeps the expression well conditioned near small dets.
  for (Index i = wf.hess.region.i0; i <= wf.hess.region.i1; ++i)
    for (Index j = wf.hess.region.j0; j <= wf.hess.region.j1; ++j) {
      const S dp = pot.psi1(wf.hess.det(i, j));
      wf.w11(i, j) = dp * wf.hess.h22(i, j);
      wf.w12(i, j) = -dp * wf.hess.h12(i, j);
      wf.w22(i, j) = dp * wf.hess.h11(i, j);
    }
  return wf;
}

}  // namespace detail

template <std::floating_point S>
struct ELResult {
  ResidualField<S> residual;       // two nodes inside the boundary
  Array2<S> w11, w12, w22, J;
};

template <std::floating_point S>
ELResult<S> euler_lagrange_residual(const Grid2<S> &g, const Array2<S> &u, const Potential<S> &pot) {
  detail::WeightFields<S> wf = detail::weight_fields(g, u, pot, "euler_lagrange_residual");
  const S h1 = g.hH(), h2 = g.hr();
  Array2<S> res;
  res.setConstant(g.nH, g.nr, quiet_nan<S>());
  const IndexRect region = margin_rect(g.nH, g.nr, 2);
  for (Index i = region.i0; i <= region.i1; ++i)
    for (Index j = region.j0; j <= region.j1; ++j) {
      const S d11 = (wf.w11(i + 1, j) - 2 * wf.w11(i, j) + wf.w11(i - 1, j)) / (h1 * h1);
      const S d22 = (wf.w22(i, j + 1) - 2 * wf.w22(i, j) + wf.w22(i, j - 1)) / (h2 * h2);
      const S d12 = (wf.w12(i + 1, j + 1) - wf.w12(i + 1, j - 1) - wf.w12(i - 1, j + 1) +
                     wf.w12(i - 1, j - 1)) /
                    (4 * h1 * h2);
      res(i, j) = d11 + 2 * d12 + d22;
    }
  ELResult<S> out;
  out.residual = finish_residual(g, std::move(res), region);
  out.w11 = std::move(wf.w11);
  out.w12 = std::move(wf.w12);
  out.w22 = std::move(wf.w22);
  out.J = std::move(wf.hess.det);
  return out;
}

// ----------------------------------------------------------------------------
// Flux route: v_j = D_i w_ij two nodes in, divergence three nodes in. The
// divergence residual is, by construction, exactly the divergence of the
// field this function returns.

template <std::floating_point S>
struct VField {
  Array2<S> v1, v2;
  IndexRect region;
};

template <std::floating_point S>
VField<S> compute_v_field(const Grid2<S> &g, const Array2<S> &u, const Potential<S> &pot) {
  detail::WeightFields<S> wf = detail::weight_fields(g, u, pot, "compute_v_field");
  const S h1 = g.hH(), h2 = g.hr();
  VField<S> v;
  v.v1.setConstant(g.nH, g.nr, quiet_nan<S>());
  v.v2 = v.v1;
  v.region = margin_rect(g.nH, g.nr, 2);
  for (Index i = v.region.i0; i <= v.region.i1; ++i)
    for (Index j = v.region.j0; j <= v.region.j1; ++j) {
      const S d1w11 = (wf.w11(i + 1, j) - wf.w11(i - 1, j)) / (2 * h1);
      const S d2w12 = (wf.w12(i, j + 1) - wf.w12(i, j - 1)) / (2 * h2);
      const S d1w12 = (wf.w12(i + 1, j) - wf.w12(i - 1, j)) / (2 * h1);
      const S d2w22 = (wf.w22(i, j + 1) - wf.w22(i, j - 1)) / (2 * h2);
      v.v1(i, j) = d1w11 + d2w12;
      v.v2(i, j) = d1w12 + d2w22;
    }
  return v;
}

template <std::floating_point S>
ResidualField<S> divergence(const Grid2<S> &g, const VField<S> &v) {
  const S h1 = g.hH(), h2 = g.hr();
  Array2<S> res;
  res.setConstant(g.nH, g.nr, quiet_nan<S>());
  const IndexRect region = margin_rect(g.nH, g.nr, 3);
  for (Index i = region.i0; i <= region.i1; ++i)
    for (Index j = region.j0; j <= region.j1; ++j)
      res(i, j) = (v.v1(i + 1, j) - v.v1(i - 1, j)) / (2 * h1) +
                  (v.v2(i, j + 1) - v.v2(i, j - 1)) / (2 * h2);
  return finish_residual(g, std::move(res), region);
}

template <std::floating_point S>
struct FluxResult {
  VField<S> v;
  ResidualField<S> residual;
};

template <std::floating_point S>
FluxResult<S> flux_divergence_residual(const Grid2<S> &g, const Array2<S> &u,
                                       const Potential<S> &pot) {
  FluxResult<S> out;
  out.v = compute_v_field(g, u, pot);
  out.residual = divergence(g, out.v);
  return out;
}

// L2-norm ratio of the flux-divergence residual to the direct residual on
// the common (three nodes in) region.
template <std::floating_point S>
S residual_ratio(const Grid2<S> &g, const ELResult<S> &el, const FluxResult<S> &flux) {
  const IndexRect common = intersect(el.residual.region, flux.residual.region);
  const S a = l2(g, flux.residual.values, common);
  const S b = l2(g, el.residual.values, common);
  if (!(b > 0)) throw NumericError("residual_ratio: direct residual vanishes on common region");
  return a / b;
}

// ----------------------------------------------------------------------------
// Convexity and gradient duality on a resampled solution: the finite
// difference gradient of u must reproduce the seed values carried along by
// the resampling, to stencil accuracy.

template <std::floating_point S>
struct GradientCheck {
  S sup_defect_1 = 0, sup_defect_2 = 0;
  IndexRect region;
};

template <std::floating_point S>
GradientCheck<S> gradient_consistency(const XGridSolution<S> &xs) {
  const Array2<S> g1 = d1(xs.grid, xs.u, 0);
  const Array2<S> g2 = d1(xs.grid, xs.u, 1);
  GradientCheck<S> out;
  out.region = margin_rect(xs.grid.nH, xs.grid.nr, 1);
  out.sup_defect_1 = linf(Array2<S>(g1 - xs.xi1), out.region);
  out.sup_defect_2 = linf(Array2<S>(g2 - xs.xi2), out.region);
  return out;
}

// Chart-side version: the finite-difference derivative of the integrated u
// against the analytic form components it was integrated from.
template <std::floating_point S>
GradientCheck<S> chart_gradient_consistency(const Chart<S> &ch) {
  const Array2<S> g1 = d1(ch.grid, ch.u.values, 0);
  const Array2<S> g2 = d1(ch.grid, ch.u.values, 1);
  GradientCheck<S> out;
  out.region = intersect(ch.rect, margin_rect(ch.grid.nH, ch.grid.nr, 1));
  out.sup_defect_1 = linf(Array2<S>(g1 - ch.e.a), out.region);
  out.sup_defect_2 = linf(Array2<S>(g2 - ch.e.b), out.region);
  return out;
}

// ----------------------------------------------------------------------------
// The variational functional and its first variation by central difference
// in the perturbation amplitude.

template <std::floating_point S>
S functional_value(const Grid2<S> &g, const Array2<S> &u, const Potential<S> &pot,
                   Index margin = 1) {
  const HessianFields<S> h = fd_hessian(g, u);
  const IndexRect region = margin_rect(g.nH, g.nr, margin);
  require_convex(g, h, region, "functional_value");
  S sum = 0;
  for (Index i = region.i0; i <= region.i1; ++i) {
    const S wi = (i == region.i0 || i == region.i1) ? S(0.5) : S(1);
    for (Index j = region.j0; j <= region.j1; ++j) {
      const S wj = (j == region.j0 || j == region.j1) ? S(0.5) : S(1);
      sum += wi * wj * pot.psi(h.det(i, j));
    }
  }
  return sum * g.hH() * g.hr();
}

template <std::floating_point S>
S first_variation(const Grid2<S> &g, const Array2<S> &u, const Array2<S> &phi,
                  const Potential<S> &pot, S s, Index margin = 1) {
  const S fp = functional_value(g, Array2<S>(u + s * phi), pot, margin);
  const S fm = functional_value(g, Array2<S>(u - s * phi), pot, margin);
  return (fp - fm) / (2 * s);
}

// ----------------------------------------------------------------------------
// Convergence tables.

template <std::floating_point S>
struct ConvergenceTable {
  std::vector<S> h, linf_norm, l2_norm;
  S order_linf = quiet_nan<S>();
  S order_l2 = quiet_nan<S>();
  bool exact = false;  // all norms at rounding level; no order to fit
};

template <std::floating_point S>
ConvergenceTable<S> make_convergence_table(std::vector<S> h, std::vector<S> linf_norm,
                                           std::vector<S> l2_norm, S tiny = S(1e-13)) {
  ConvergenceTable<S> t;
  t.h = std::move(h);
  t.linf_norm = std::move(linf_norm);
  t.l2_norm = std::move(l2_norm);
  if (t.h.size() != t.linf_norm.size() || t.h.size() != t.l2_norm.size() || t.h.size() < 2)
    throw ConfigError("make_convergence_table: need matched series of at least two levels");
  S top = 0;
  for (S v : t.l2_norm) top = std::max(top, std::abs(v));
  if (top <= tiny) {
    t.exact = true;
    return t;
  }
  t.order_linf = fitted_order(t.h, t.linf_norm);
  t.order_l2 = fitted_order(t.h, t.l2_norm);
  return t;
}

}  // namespace joyce
