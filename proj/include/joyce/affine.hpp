// Surface descriptions tied to the weight p(r) = r^2.
//
// Two routes to the same surface in R^3. Route one integrates the classical
// first-order system of Chern and Terng from a triple of harmonic functions
// of (lambda1, lambda2):
//
//   dZ/dl1 = F x dF/dl2,   dZ/dl2 = -F x dF/dl1.
//
// Route two runs the seed machinery: Xi = (xi1, xi2, 1) built from a seed
// pair gives
//
//   dZ/dH = p Xi x dXi/dr,  dZ/dr = -p Xi x dXi/dH.
//
// With F3(H, r) = r and the seeds obtained from F1, F2 through the lift
// system p xi_H = r F_H, p xi_r = r F_r - F (solvable exactly when p = r^2,
// solution xi = r F / p), the two systems are literally identical, which is
// what surface_route_equivalence measures.

#pragma once

#include "joyce/construct.hpp"
#include "joyce/core.hpp"
#include "joyce/potential.hpp"
#include "joyce/seeds.hpp"
#include "joyce/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace joyce {

// ----------------------------------------------------------------------------
// Named harmonic functions of the two surface parameters.

template <std::floating_point S = double>
bool harmonic_name_is_known(const std::string &name) {
  return name == "l1" || name == "l2" || name == "l1l2" || name == "l1sq_minus_l2sq" ||
         name == "one" || name == "l1sq";
}

// "l1sq" is deliberately not harmonic; it exercises the gate.
template <std::floating_point S>
ScalarField<S> make_harmonic(const std::string &name, const Grid2<S> &g) {
  if (name == "l1") return analytic_field(g, [](S a, S) { return JetPoint<S>{a, 1, 0, 0, 0, 0}; }, name);
  if (name == "l2") return analytic_field(g, [](S, S b) { return JetPoint<S>{b, 0, 1, 0, 0, 0}; }, name);
  if (name == "l1l2")
    return analytic_field(g, [](S a, S b) { return JetPoint<S>{a * b, b, a, 0, 1, 0}; }, name);
  if (name == "l1sq_minus_l2sq")
    return analytic_field(
        g, [](S a, S b) { return JetPoint<S>{a * a - b * b, 2 * a, -2 * b, 2, 0, -2}; }, name);
  if (name == "one") return analytic_field(g, [](S, S) { return JetPoint<S>{1, 0, 0, 0, 0, 0}; }, name);
  if (name == "l1sq")
    return analytic_field(g, [](S a, S) { return JetPoint<S>{a * a, 2 * a, 0, 2, 0, 0}; }, name);
  throw ConfigError("unknown harmonic function '" + name + "'");
}

template <std::floating_point S>
ResidualField<S> laplace_residual(const ScalarField<S> &f) {
  const Grid2<S> &g = f.grid;
  if (f.has_jet()) {
    Array2<S> res = f.jet->dHH + f.jet->drr;
    return finish_residual(g, std::move(res), margin_rect(g.nH, g.nr, 0));
  }
  Array2<S> res = d2(g, f.values, 0) + d2(g, f.values, 1);
  return finish_residual(g, std::move(res), margin_rect(g.nH, g.nr, 1));
}

// ----------------------------------------------------------------------------
// Vector-valued surfaces.

template <std::floating_point S>
struct VectorSurface {
  std::array<ScalarField<S>, 3> Z;
  std::array<S, 3> path_disagreement{};
  bool degenerate = false;  // area form at rounding level everywhere
  Index base_i = 0, base_j = 0;
};

namespace detail {

// One component of a x b.
template <std::floating_point S>
S crossc(int c, S a1, S a2, S a3, S b1, S b2, S b3) {
  switch (c) {
    case 0: return a2 * b3 - a3 * b2;
    case 1: return a3 * b1 - a1 * b3;
    default: return a1 * b2 - a2 * b1;
  }
}

template <std::floating_point S>
VectorSurface<S> integrate_surface(const Grid2<S> &g, const std::array<OneForm<S>, 3> &forms,
                                   Index bi, Index bj, S closed_tol, const char *what) {
  VectorSurface<S> out;
  out.base_i = bi;
  out.base_j = bj;
  S area_sup = 0, comp_sup = 0;
  for (int c = 0; c < 3; ++c) {
    const ResidualField<S> res = closedness_residual(forms[c]);
    const S scale = form_scale(forms[c]);
    if (!(res.linf_norm <= closed_tol * scale))
      throw CheckError(std::string(what) + ": component " + std::to_string(c) +
                       " form is not closed (residual " + std::to_string(double(res.linf_norm)) +
                       ", scale " + std::to_string(double(scale)) + ")");
    const PathIntegral<S> pi = integrate_form(forms[c], bi, bj);
    out.path_disagreement[size_t(c)] = pi.disagreement;
    ScalarField<S> f = make_field(g, std::string("Z") + std::to_string(c + 1));
    f.values = pi.values;
    Jet2<S> jet;
    jet.dH = forms[c].a;
    jet.dr = forms[c].b;
    jet.dHH = forms[c].jet->aH;
    jet.dHr = forms[c].jet->ar;
    jet.drr = forms[c].jet->br;
    f.jet = std::move(jet);
    f.jet_source = JetSource::Analytic;
    out.Z[size_t(c)] = std::move(f);
    comp_sup = std::max(comp_sup, linf(forms[c].a) + linf(forms[c].b));
  }
  // Area form |Z_H x Z_r| from the tangent forms.
  for (Index i = 0; i < g.nH; ++i)
    for (Index j = 0; j < g.nr; ++j) {
      const S tH[3] = {out.Z[0].jet->dH(i, j), out.Z[1].jet->dH(i, j), out.Z[2].jet->dH(i, j)};
      const S tr[3] = {out.Z[0].jet->dr(i, j), out.Z[1].jet->dr(i, j), out.Z[2].jet->dr(i, j)};
      for (int c = 0; c < 3; ++c)
        area_sup = std::max(area_sup,
                            std::abs(crossc(c, tH[0], tH[1], tH[2], tr[0], tr[1], tr[2])));
    }
  out.degenerate = area_sup <= S(1e-12) * (1 + comp_sup * comp_sup);
  return out;
}

}  // namespace detail

// Route one. The triple's jets feed both the harmonicity gate (the
// closedness residual of each component form is -(F x Laplace F)_c, zero
// exactly when every component is harmonic) and the corrected integration.
template <std::floating_point S>
VectorSurface<S> chern_terng_integrate(const std::array<ScalarField<S>, 3> &F, Index base_i = -1,
                                       Index base_j = -1, S closed_tol = S(1e-8)) {
  const Grid2<S> g = F[0].grid;
  if (!(F[1].grid == g) || !(F[2].grid == g))
    throw ConfigError("chern_terng_integrate: components on different grids");
  std::array<const Jet2<S> *, 3> jets{};
  std::array<Jet2<S>, 3> storage;
  for (int c = 0; c < 3; ++c) {
    if (F[size_t(c)].has_jet())
      jets[size_t(c)] = &*F[size_t(c)].jet;
    else {
      storage[size_t(c)] = fd_jet(g, F[size_t(c)].values);
      jets[size_t(c)] = &storage[size_t(c)];
    }
  }
  const Index bi = base_i >= 0 ? base_i : g.nH / 2;
  const Index bj = base_j >= 0 ? base_j : g.nr / 2;

  std::array<OneForm<S>, 3> forms;
  for (int c = 0; c < 3; ++c) {
    OneForm<S> &w = forms[size_t(c)];
    w.grid = g;
    w.name = std::string("dZ") + std::to_string(c + 1);
    w.a.resize(g.nH, g.nr);
    w.b.resize(g.nH, g.nr);
    FormJet<S> fj;
    fj.aH.resize(g.nH, g.nr);
    fj.ar.resize(g.nH, g.nr);
    fj.bH.resize(g.nH, g.nr);
    fj.br.resize(g.nH, g.nr);
    for (Index i = 0; i < g.nH; ++i)
      for (Index j = 0; j < g.nr; ++j) {
        const S f[3] = {F[0].values(i, j), F[1].values(i, j), F[2].values(i, j)};
        const S fH[3] = {jets[0]->dH(i, j), jets[1]->dH(i, j), jets[2]->dH(i, j)};
        const S fr[3] = {jets[0]->dr(i, j), jets[1]->dr(i, j), jets[2]->dr(i, j)};
        const S fHH[3] = {jets[0]->dHH(i, j), jets[1]->dHH(i, j), jets[2]->dHH(i, j)};
        const S fHr[3] = {jets[0]->dHr(i, j), jets[1]->dHr(i, j), jets[2]->dHr(i, j)};
        const S frr[3] = {jets[0]->drr(i, j), jets[1]->drr(i, j), jets[2]->drr(i, j)};
        w.a(i, j) = detail::crossc(c, f[0], f[1], f[2], fr[0], fr[1], fr[2]);
        w.b(i, j) = -detail::crossc(c, f[0], f[1], f[2], fH[0], fH[1], fH[2]);
        fj.aH(i, j) = detail::crossc(c, fH[0], fH[1], fH[2], fr[0], fr[1], fr[2]) +
                      detail::crossc(c, f[0], f[1], f[2], fHr[0], fHr[1], fHr[2]);
        fj.ar(i, j) = detail::crossc(c, f[0], f[1], f[2], frr[0], frr[1], frr[2]);
        fj.bH(i, j) = -detail::crossc(c, f[0], f[1], f[2], fHH[0], fHH[1], fHH[2]);
        fj.br(i, j) = -detail::crossc(c, fr[0], fr[1], fr[2], fH[0], fH[1], fH[2]) -
                      detail::crossc(c, f[0], f[1], f[2], fHr[0], fHr[1], fHr[2]);
      }
    w.jet = std::move(fj);
  }
  return detail::integrate_surface(g, forms, bi, bj, closed_tol, "chern_terng_integrate");
}

template <std::floating_point S>
VectorSurface<S> chern_terng_integrate(const std::string &n1, const std::string &n2,
                                       const std::string &n3, const Grid2<S> &g) {
  return chern_terng_integrate<S>(
      {make_harmonic<S>(n1, g), make_harmonic<S>(n2, g), make_harmonic<S>(n3, g)});
}

// ----------------------------------------------------------------------------
// The lift: from a harmonic F to a seed of the linear equation, through the
// first-order system p xi_H = r F_H, p xi_r = r F_r - F. The system is
// integrated as stated (its closedness is the p = r^2 consistency check)
// and the result is audited against the explicit solution r F / p.

template <std::floating_point S>
ScalarField<S> lift_harmonic_to_seed(const ScalarField<S> &F, const JoyceData<S> &jd,
                                     Index base_i = -1, Index base_j = -1) {
  if (!weight_is_r_squared(jd))
    throw ConfigError("lift_harmonic_to_seed: weight must be p(r) = r^2 (spec '" +
                      jd.potential_spec + "' is not)");
  const Grid2<S> &g = F.grid;
  if (!(g.r0 > jd.r_lo) || !(g.r1 < jd.r_hi))
    throw ConfigError("lift_harmonic_to_seed: grid leaves the weight interval");
  const Jet2<S> jet = F.has_jet() ? *F.jet : fd_jet(g, F.values);

  OneForm<S> w;
  w.grid = g;
  w.name = "dxi";
  w.a.resize(g.nH, g.nr);
  w.b.resize(g.nH, g.nr);
  FormJet<S> fj;
  fj.aH.resize(g.nH, g.nr);
  fj.ar.resize(g.nH, g.nr);
  fj.bH.resize(g.nH, g.nr);
  fj.br.resize(g.nH, g.nr);
  Array2<S> ref(g.nH, g.nr);
  for (Index j = 0; j < g.nr; ++j) {
    const auto s = eval_joyce(jd, g.r(j));
    const S r = g.r(j), p = s.p, p1 = s.p1;
    for (Index i = 0; i < g.nH; ++i) {
      const S Fv = F.values(i, j);
      w.a(i, j) = r * jet.dH(i, j) / p;
      w.b(i, j) = (r * jet.dr(i, j) - Fv) / p;
      fj.aH(i, j) = r * jet.dHH(i, j) / p;
      fj.ar(i, j) = (jet.dH(i, j) + r * jet.dHr(i, j)) / p - r * jet.dH(i, j) * p1 / (p * p);
      fj.bH(i, j) = (r * jet.dHr(i, j) - jet.dH(i, j)) / p;
      fj.br(i, j) = r * jet.drr(i, j) / p - (r * jet.dr(i, j) - Fv) * p1 / (p * p);
      ref(i, j) = r * Fv / p;
    }
  }
  w.jet = std::move(fj);

  const ResidualField<S> res = closedness_residual(w);
  const S scale = form_scale(w);
  if (!(res.linf_norm <= S(1e-8) * scale))
    throw CheckError("lift_harmonic_to_seed: lift system inconsistent (residual " +
                     std::to_string(double(res.linf_norm)) + "); F may not be harmonic");

  const Index bi = base_i >= 0 ? base_i : g.nH / 2;
  const Index bj = base_j >= 0 ? base_j : g.nr / 2;
  const PathIntegral<S> pi = integrate_form(w, bi, bj);

  ScalarField<S> xi = make_field(g, "lift(" + F.name + ")");
  xi.values = pi.values + ref(bi, bj);
  const S audit = linf(Array2<S>(xi.values - ref));
  // the integrator is fourth order, so the audit threshold must shrink with it
  const S hmax = std::max(g.hH(), g.hr());
  const S audit_tol = std::max(S(1e-10), hmax * hmax * hmax * hmax);
  if (!(audit <= audit_tol * (1 + linf(ref))))
    throw CheckError("lift_harmonic_to_seed: integrated lift deviates from the explicit solution (" +
                     std::to_string(double(audit)) + ")");
  Jet2<S> xjet;
  xjet.dH = w.a;
  xjet.dr = w.b;
  xjet.dHH = w.jet->aH;
  xjet.dHr = w.jet->bH;  // d/dH of xi_r, exact for the lifted jet
  xjet.drr = w.jet->br;
  xi.jet = std::move(xjet);
  xi.jet_source = JetSource::Analytic;
  return xi;
}

// ----------------------------------------------------------------------------
// Route two: the surface straight from a seed pair.

template <std::floating_point S>
VectorSurface<S> surface_from_seeds(const ScalarField<S> &xi1, const ScalarField<S> &xi2,
                                    const JoyceData<S> &jd, Index base_i = -1, Index base_j = -1,
                                    S closed_tol = S(1e-6)) {
  if (!(xi1.grid == xi2.grid)) throw ConfigError("surface_from_seeds: seeds on different grids");
  const Grid2<S> g = xi1.grid;
  const Jet2<S> j1 = xi1.has_jet() ? *xi1.jet : fd_jet(g, xi1.values);
  const Jet2<S> j2 = xi2.has_jet() ? *xi2.jet : fd_jet(g, xi2.values);
  const Index bi = base_i >= 0 ? base_i : g.nH / 2;
  const Index bj = base_j >= 0 ? base_j : g.nr / 2;

  std::array<OneForm<S>, 3> forms;
  for (int c = 0; c < 3; ++c) {
    OneForm<S> &w = forms[size_t(c)];
    w.grid = g;
    w.name = std::string("dZ") + std::to_string(c + 1);
    w.a.resize(g.nH, g.nr);
    w.b.resize(g.nH, g.nr);
    FormJet<S> fj;
    fj.aH.resize(g.nH, g.nr);
    fj.ar.resize(g.nH, g.nr);
    fj.bH.resize(g.nH, g.nr);
    fj.br.resize(g.nH, g.nr);
    w.jet = std::move(fj);
  }
  for (Index j = 0; j < g.nr; ++j) {
    const auto s = eval_joyce(jd, g.r(j));
    const S p = s.p, p1 = s.p1;
    for (Index i = 0; i < g.nH; ++i) {
      const S X[3] = {xi1.values(i, j), xi2.values(i, j), 1};
      const S XH[3] = {j1.dH(i, j), j2.dH(i, j), 0};
      const S Xr[3] = {j1.dr(i, j), j2.dr(i, j), 0};
      const S XHH[3] = {j1.dHH(i, j), j2.dHH(i, j), 0};
      const S XHr[3] = {j1.dHr(i, j), j2.dHr(i, j), 0};
      const S Xrr[3] = {j1.drr(i, j), j2.drr(i, j), 0};
      for (int c = 0; c < 3; ++c) {
        OneForm<S> &w = forms[size_t(c)];
        const S xxr = detail::crossc(c, X[0], X[1], X[2], Xr[0], Xr[1], Xr[2]);
        const S xxH = detail::crossc(c, X[0], X[1], X[2], XH[0], XH[1], XH[2]);
        w.a(i, j) = p * xxr;
        w.b(i, j) = -p * xxH;
        w.jet->aH(i, j) = p * (detail::crossc(c, XH[0], XH[1], XH[2], Xr[0], Xr[1], Xr[2]) +
                               detail::crossc(c, X[0], X[1], X[2], XHr[0], XHr[1], XHr[2]));
        w.jet->ar(i, j) =
            p1 * xxr + p * detail::crossc(c, X[0], X[1], X[2], Xrr[0], Xrr[1], Xrr[2]);
        w.jet->bH(i, j) = -p * detail::crossc(c, X[0], X[1], X[2], XHH[0], XHH[1], XHH[2]);
        w.jet->br(i, j) =
            -p1 * xxH - p * (detail::crossc(c, Xr[0], Xr[1], Xr[2], XH[0], XH[1], XH[2]) +
                             detail::crossc(c, X[0], X[1], X[2], XHr[0], XHr[1], XHr[2]));
      }
    }
  }
  return detail::integrate_surface(g, forms, bi, bj, closed_tol, "surface_from_seeds");
}

// ----------------------------------------------------------------------------
// Equivalence of two surfaces up to the integration constant: align by the
// mean component offsets, report the sup afterwards.

template <std::floating_point S>
struct SurfaceMatch {
  std::array<S, 3> offset{};
  S sup_after = 0;
};

template <std::floating_point S>
SurfaceMatch<S> surface_route_equivalence(const VectorSurface<S> &A, const VectorSurface<S> &B) {
  const Grid2<S> &g = A.Z[0].grid;
  if (!(B.Z[0].grid == g))
    throw ConfigError("surface_route_equivalence: surfaces on different grids");
  SurfaceMatch<S> m;
  for (int c = 0; c < 3; ++c) {
    const Array2<S> diff = B.Z[size_t(c)].values - A.Z[size_t(c)].values;
    m.offset[size_t(c)] = diff.mean();
    m.sup_after = std::max(m.sup_after, linf(Array2<S>(diff - m.offset[size_t(c)])));
  }
  return m;
}

// ----------------------------------------------------------------------------
// Affine invariants of the graph of u. With K the Gauss curvature of the
// graph and dA its induced area element,
//
//   K^{1/4} dA = (det Hess u)^{1/4} dx1 dx2,
//
// an algebraic identity once both sides share the same finite-difference
// Hessian and gradient; the defect reported here is pure rounding.

template <std::floating_point S>
struct AffineIdentityReport {
  S sup_defect = 0;
  IndexRect region;
};

template <std::floating_point S>
AffineIdentityReport<S> affine_identity_defect(const Grid2<S> &g, const Array2<S> &u) {
  const HessianFields<S> h = fd_hessian(g, u);
  require_convex(g, h, h.region, "affine_identity_defect");
  const Array2<S> g1 = d1(g, u, 0);
  const Array2<S> g2 = d1(g, u, 1);
  AffineIdentityReport<S> rep;
  rep.region = h.region;
  for (Index i = h.region.i0; i <= h.region.i1; ++i)
    for (Index j = h.region.j0; j <= h.region.j1; ++j) {
      const S q = 1 + g1(i, j) * g1(i, j) + g2(i, j) * g2(i, j);
      const S K = h.det(i, j) / (q * q);
      const S lhs = std::pow(K, S(0.25)) * std::sqrt(q);
      const S rhs = std::pow(h.det(i, j), S(0.25));
      rep.sup_defect = std::max(rep.sup_defect, std::abs(lhs - rhs) / std::max(rhs, S(1)));
    }
  return rep;
}

// Pull a function back through the linear map x -> L x; with det L = 1 the
// determinant of the Hessian is equal at corresponding points, which makes
// this the other half of the invariance check.
template <std::floating_point S, class F>
Array2<S> unimodular_pullback_values(const Grid2<S> &g, const std::array<S, 4> &L, F u) {
  Array2<S> out(g.nH, g.nr);
  for (Index i = 0; i < g.nH; ++i)
    for (Index j = 0; j < g.nr; ++j) {
      const S x1 = g.x1(i), x2 = g.x2(j);
      out(i, j) = u(L[0] * x1 + L[1] * x2, L[2] * x1 + L[3] * x2);
    }
  return out;
}

}  // namespace joyce
