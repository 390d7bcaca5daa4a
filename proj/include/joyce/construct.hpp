// Chart construction from a seed pair.
//
// Two solutions xi1, xi2 of the linear equation generate three closed
// 1-forms
//
//   e1 = p (xi2_r dH - xi2_H dr)
//   e2 = p (-xi1_r dH + xi1_H dr)
//   e  = xi1 e1 + xi2 e2
//
// whose primitives are the chart map x1, x2 and the potential u. Closedness
// of e1 (resp. e2) is equivalent to xi2 (resp. xi1) solving the equation,
// so the closedness gates here are what reject a non-solution seed after
// construction starts. The form components double as the analytic 2-jets of
// x1, x2, u, which is what the endpoint-corrected path integration and the
// downstream Hermite resampling feed on.

#pragma once

#include "joyce/core.hpp"
#include "joyce/potential.hpp"
#include "joyce/seeds.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>

namespace joyce {

// First partials of the two components of a 1-form a dH + b dr. All four
// enter: aH and br drive the corrected trapezoid steps along their axes,
// bH - ar is the closedness residual.
template <std::floating_point S>
struct FormJet {
  Array2<S> aH, ar, bH, br;
};

template <std::floating_point S>
struct OneForm {
  Grid2<S> grid;
  Array2<S> a, b;
  std::optional<FormJet<S>> jet;
  std::string name;
};

// Closedness residual d_H b - d_r a: exact from the form jet when present,
// finite differences (interior norms) otherwise.
template <std::floating_point S>
ResidualField<S> closedness_residual(const OneForm<S> &w) {
  const Grid2<S> &g = w.grid;
  if (w.jet) {
    Array2<S> res = w.jet->bH - w.jet->ar;
    return finish_residual(g, std::move(res), margin_rect(g.nH, g.nr, 0));
  }
  Array2<S> res = d1(g, w.b, 0) - d1(g, w.a, 1);
  return finish_residual(g, std::move(res), margin_rect(g.nH, g.nr, 1));
}

template <std::floating_point S>
S form_scale(const OneForm<S> &w) {
  S s = 1 + linf(w.a) + linf(w.b);
  if (w.jet) s += linf(w.jet->aH) + linf(w.jet->ar) + linf(w.jet->bH) + linf(w.jet->br);
  return s;
}

// ----------------------------------------------------------------------------
// Path integration of a (numerically) closed form from a base node. Per
// interval the trapezoid rule gets the endpoint-derivative correction
//
//   int f dt ~ (h/2)(f0 + f1) - (h^2/12)(f1' - f0')
//
// when the form carries a jet, which upgrades the cumulative error from
// O(h^2) to O(h^4). Two independent path orders are integrated; their
// disagreement is a direct closedness audit at the discrete level.

namespace detail {

// One corrected trapezoid step over [t_k, t_k+1] with values f and
// derivatives fp along the integration axis.
template <std::floating_point S>
S trapz_step(S h, S f0, S f1, S fp0, S fp1) {
  return h / 2 * (f0 + f1) - h * h / 12 * (fp1 - fp0);
}

}  // namespace detail

template <std::floating_point S>
struct PathIntegral {
  Array2<S> values;  // H-path then r-path from the base node
  Array2<S> audit;   // r-path then H-path
  S disagreement;    // sup |values - audit|
};

template <std::floating_point S>
PathIntegral<S> integrate_form(const OneForm<S> &w, Index bi, Index bj) {
  const Grid2<S> &g = w.grid;
  if (bi < 0 || bi >= g.nH || bj < 0 || bj >= g.nr)
    throw ConfigError("integrate_form: base node outside grid");
  const S hH = g.hH(), hr = g.hr();
  const bool jets = w.jet.has_value();

  auto stepH = [&](Index i0, Index i1, Index j) {
    // signed step from node i0 to adjacent node i1 at fixed j
    const S h = (i1 > i0) ? hH : -hH;
    if (jets) return detail::trapz_step(h, w.a(i0, j), w.a(i1, j), w.jet->aH(i0, j), w.jet->aH(i1, j));
    return h / 2 * (w.a(i0, j) + w.a(i1, j));
  };
  auto stepR = [&](Index i, Index j0, Index j1) {
    const S h = (j1 > j0) ? hr : -hr;
    if (jets) return detail::trapz_step(h, w.b(i, j0), w.b(i, j1), w.jet->br(i, j0), w.jet->br(i, j1));
    return h / 2 * (w.b(i, j0) + w.b(i, j1));
  };

  PathIntegral<S> out;
  out.values.setZero(g.nH, g.nr);
  out.audit.setZero(g.nH, g.nr);

  // H first along row bj, then r along every column.
  for (Index i = bi + 1; i < g.nH; ++i)
    out.values(i, bj) = out.values(i - 1, bj) + stepH(i - 1, i, bj);
  for (Index i = bi - 1; i >= 0; --i)
    out.values(i, bj) = out.values(i + 1, bj) + stepH(i + 1, i, bj);
  for (Index i = 0; i < g.nH; ++i) {
    for (Index j = bj + 1; j < g.nr; ++j) out.values(i, j) = out.values(i, j - 1) + stepR(i, j - 1, j);
    for (Index j = bj - 1; j >= 0; --j) out.values(i, j) = out.values(i, j + 1) + stepR(i, j + 1, j);
  }

  // r first along column bi, then H along every row.
  for (Index j = bj + 1; j < g.nr; ++j)
    out.audit(bi, j) = out.audit(bi, j - 1) + stepR(bi, j - 1, j);
  for (Index j = bj - 1; j >= 0; --j)
    out.audit(bi, j) = out.audit(bi, j + 1) + stepR(bi, j + 1, j);
  for (Index j = 0; j < g.nr; ++j) {
    for (Index i = bi + 1; i < g.nH; ++i) out.audit(i, j) = out.audit(i - 1, j) + stepH(i - 1, i, j);
    for (Index i = bi - 1; i >= 0; --i) out.audit(i, j) = out.audit(i + 1, j) + stepH(i + 1, i, j);
  }

  out.disagreement = linf(Array2<S>(out.values - out.audit));
  return out;
}

// ----------------------------------------------------------------------------
// Nondegeneracy. The mask keeps the orientation-positive side det B > tol;
// swapping the two seeds flips the sign of det B, so a pair that comes out
// negative is fixed by swapping, not lost.

template <std::floating_point S>
Mask2 nondegeneracy_mask(const Array2<S> &detB, S rel_tol = S(1e-10)) {
  const S thr = rel_tol * std::max(linf(detB), std::numeric_limits<S>::min());
  return detB > thr;
}

// Largest all-true axis rectangle containing the anchor node. Exact scan:
// for every row range containing the anchor, intersect the rows' column
// masks incrementally and measure the widest run through the anchor column.
inline IndexRect largest_true_rect(const Mask2 &mask, Index ai, Index aj) {
  const Index nH = mask.rows(), nr = mask.cols();
  IndexRect best{ai, ai, aj, aj};
  if (!mask(ai, aj)) return best;
  Index best_area = 0;
  std::vector<char> allowed(static_cast<size_t>(nr), char(0));
  for (Index i0 = ai; i0 >= 0; --i0) {
    if (!mask(i0, aj)) break;
    if (i0 == ai)
      for (Index j = 0; j < nr; ++j) allowed[size_t(j)] = mask(i0, j);
    else
      for (Index j = 0; j < nr; ++j) allowed[size_t(j)] = char(allowed[size_t(j)] && mask(i0, j));
    std::vector<char> row = allowed;
    for (Index i1 = ai; i1 < nH; ++i1) {
      if (!mask(i1, aj)) break;
      if (i1 > ai)
        for (Index j = 0; j < nr; ++j) row[size_t(j)] = char(row[size_t(j)] && mask(i1, j));
      Index jlo = aj, jhi = aj;
      while (jlo - 1 >= 0 && row[size_t(jlo - 1)]) --jlo;
      while (jhi + 1 < nr && row[size_t(jhi + 1)]) ++jhi;
      const Index area = (i1 - i0 + 1) * (jhi - jlo + 1);
      if (area > best_area) {
        best_area = area;
        best = IndexRect{i0, i1, jlo, jhi};
      }
    }
  }
  return best;
}

// ----------------------------------------------------------------------------
// Chart assembly.

// Pointwise identities that hold for any seed jets, solution or not; their
// defects measure rounding, not discretization, and are reported over the
// nondegenerate rectangle.
template <std::floating_point S>
struct ChartIdentities {
  S detA_vs_p2detB = 0;   // sup |det A - p^2 det B| / scale
  S J_times_p2 = 0;       // sup |J p^2 - 1|
  S isothermal = 0;       // sup over the four component identities
  S hessian_symmetry = 0; // sup |(B A^-1)_12 - (B A^-1)_21| / scale
};

template <std::floating_point S>
struct Chart {
  Grid2<S> grid;
  ScalarField<S> xi1, xi2;      // the seeds, with the jets actually used
  ScalarField<S> x1, x2, u;     // primitives with analytic jets from the forms
  OneForm<S> e1, e2, e;
  Array2<S> detA, detB, J;
  Mask2 nondeg;
  IndexRect rect;               // largest nondegenerate rectangle around base
  Index base_i = 0, base_j = 0; // gauge: x1 = x2 = u = 0 here
  S path_disagreement_x1 = 0, path_disagreement_x2 = 0, path_disagreement_u = 0;
  ChartIdentities<S> identities;
  std::string potential_spec;
};

template <std::floating_point S>
struct ChartOptions {
  Index base_i = -1, base_j = -1;     // default: center node
  S closedness_tol = S(1e-6);         // relative to form scale
  S nondeg_rel_tol = S(1e-10);
};

namespace detail {

// e1 and e2 from one seed's jet; "sign" is +1 for e1 (built from xi2) and
// -1 for e2 (built from xi1).
template <std::floating_point S>
OneForm<S> seed_form(const Grid2<S> &g, const Jet2<S> &jet, const std::vector<S> &p,
                     const std::vector<S> &p1, S sign, std::string name) {
  OneForm<S> w;
  w.grid = g;
  w.name = std::move(name);
  w.a.resize(g.nH, g.nr);
  w.b.resize(g.nH, g.nr);
  FormJet<S> fj;
  fj.aH.resize(g.nH, g.nr);
  fj.ar.resize(g.nH, g.nr);
  fj.bH.resize(g.nH, g.nr);
  fj.br.resize(g.nH, g.nr);
  for (Index j = 0; j < g.nr; ++j) {
    const S pj = p[size_t(j)], p1j = p1[size_t(j)];
    for (Index i = 0; i < g.nH; ++i) {
      w.a(i, j) = sign * pj * jet.dr(i, j);
      w.b(i, j) = -sign * pj * jet.dH(i, j);
      fj.aH(i, j) = sign * pj * jet.dHr(i, j);
      fj.ar(i, j) = sign * (p1j * jet.dr(i, j) + pj * jet.drr(i, j));
      fj.bH(i, j) = -sign * pj * jet.dHH(i, j);
      fj.br(i, j) = -sign * (p1j * jet.dH(i, j) + pj * jet.dHr(i, j));
    }
  }
  w.jet = std::move(fj);
  return w;
}

}  // namespace detail

template <std::floating_point S>
Chart<S> assemble_chart(const ScalarField<S> &xi1, const ScalarField<S> &xi2,
                        const JoyceData<S> &jd, const ChartOptions<S> &opt = {}) {
  if (!(xi1.grid == xi2.grid)) throw ConfigError("assemble_chart: seeds live on different grids");
  const Grid2<S> g = xi1.grid;
  if (!(g.r0 > jd.r_lo) || !(g.r1 < jd.r_hi))
    throw ConfigError("assemble_chart: grid leaves the weight interval");

  Chart<S> ch;
  ch.grid = g;
  ch.potential_spec = jd.potential_spec;
  ch.xi1 = xi1;
  ch.xi2 = xi2;
  if (!ch.xi1.has_jet()) {
    ch.xi1.jet = fd_jet(g, ch.xi1.values);
    ch.xi1.jet_source = JetSource::FiniteDifference;
  }
  if (!ch.xi2.has_jet()) {
    ch.xi2.jet = fd_jet(g, ch.xi2.values);
    ch.xi2.jet_source = JetSource::FiniteDifference;
  }
  const Jet2<S> &j1 = *ch.xi1.jet;
  const Jet2<S> &j2 = *ch.xi2.jet;

  std::vector<S> p(size_t(g.nr)), p1(size_t(g.nr));
  for (Index j = 0; j < g.nr; ++j) {
    const auto s = eval_joyce(jd, g.r(j));
    p[size_t(j)] = s.p;
    p1[size_t(j)] = s.p1;
  }

  ch.e1 = detail::seed_form(g, j2, p, p1, S(1), "dx1");
  ch.e2 = detail::seed_form(g, j1, p, p1, S(-1), "dx2");

  for (const OneForm<S> *w : {&ch.e1, &ch.e2}) {
    const ResidualField<S> res = closedness_residual(*w);
    const S scale = form_scale(*w);
    if (!(res.linf_norm <= opt.closedness_tol * scale)) {
      const char *seed = (w == &ch.e1) ? ch.xi2.name.c_str() : ch.xi1.name.c_str();
      throw CheckError(std::string("form ") + w->name + " is not closed (residual " +
                       std::to_string(double(res.linf_norm)) + ", scale " +
                       std::to_string(double(scale)) + "): seed '" + seed +
                       "' does not solve the linear equation");
    }
  }

  // e = xi1 e1 + xi2 e2, jets by the product rule. The closedness residual
  // of e cancels algebraically given closed e1, e2; it is not re-gated.
  ch.e.grid = g;
  ch.e.name = "du";
  ch.e.a = ch.xi1.values * ch.e1.a + ch.xi2.values * ch.e2.a;
  ch.e.b = ch.xi1.values * ch.e1.b + ch.xi2.values * ch.e2.b;
  {
    FormJet<S> fj;
    fj.aH = j1.dH * ch.e1.a + ch.xi1.values * ch.e1.jet->aH + j2.dH * ch.e2.a +
            ch.xi2.values * ch.e2.jet->aH;
    fj.ar = j1.dr * ch.e1.a + ch.xi1.values * ch.e1.jet->ar + j2.dr * ch.e2.a +
            ch.xi2.values * ch.e2.jet->ar;
    fj.bH = j1.dH * ch.e1.b + ch.xi1.values * ch.e1.jet->bH + j2.dH * ch.e2.b +
            ch.xi2.values * ch.e2.jet->bH;
    fj.br = j1.dr * ch.e1.b + ch.xi1.values * ch.e1.jet->br + j2.dr * ch.e2.b +
            ch.xi2.values * ch.e2.jet->br;
    ch.e.jet = std::move(fj);
  }

  ch.base_i = (opt.base_i >= 0) ? opt.base_i : g.nH / 2;
  ch.base_j = (opt.base_j >= 0) ? opt.base_j : g.nr / 2;
  if (ch.base_i >= g.nH || ch.base_j >= g.nr)
    throw ConfigError("assemble_chart: base node outside grid");

  const PathIntegral<S> px1 = integrate_form(ch.e1, ch.base_i, ch.base_j);
  const PathIntegral<S> px2 = integrate_form(ch.e2, ch.base_i, ch.base_j);
  const PathIntegral<S> pu = integrate_form(ch.e, ch.base_i, ch.base_j);
  ch.path_disagreement_x1 = px1.disagreement;
  ch.path_disagreement_x2 = px2.disagreement;
  ch.path_disagreement_u = pu.disagreement;

  auto primitive = [&](const Array2<S> &vals, const OneForm<S> &w, std::string name) {
    ScalarField<S> f = make_field(g, std::move(name));
    f.values = vals;
    Jet2<S> jet;
    jet.dH = w.a;
    jet.dr = w.b;
    jet.dHH = w.jet->aH;
    jet.dHr = w.jet->ar;
    jet.drr = w.jet->br;
    f.jet = std::move(jet);
    f.jet_source = JetSource::Analytic;
    return f;
  };
  ch.x1 = primitive(px1.values, ch.e1, "x1");
  ch.x2 = primitive(px2.values, ch.e2, "x2");
  ch.u = primitive(pu.values, ch.e, "u");

  // det A = a1 b2 - b1 a2, det B from the seed jets, J = det B / det A.
  ch.detA = ch.e1.a * ch.e2.b - ch.e1.b * ch.e2.a;
  ch.detB = j1.dH * j2.dr - j1.dr * j2.dH;
  ch.J = ch.detB / ch.detA;

  ch.nondeg = nondegeneracy_mask(ch.detB, opt.nondeg_rel_tol);
  if (!ch.nondeg(ch.base_i, ch.base_j))
    throw CheckError("assemble_chart: det B is not positive at the base node; "
                     "swap the seeds or move the base");
  ch.rect = largest_true_rect(ch.nondeg, ch.base_i, ch.base_j);

  // Pointwise identities over the nondegenerate rectangle.
  {
    S d_ab = 0, d_jp = 0, d_iso = 0, d_sym = 0;
    S scale_ab = std::numeric_limits<S>::min(), scale_h = std::numeric_limits<S>::min();
    for (Index i = ch.rect.i0; i <= ch.rect.i1; ++i)
      for (Index j = ch.rect.j0; j <= ch.rect.j1; ++j) {
        const S pj = p[size_t(j)];
        const S dA = ch.detA(i, j), dB = ch.detB(i, j);
        d_ab = std::max(d_ab, std::abs(dA - pj * pj * dB));
        scale_ab = std::max(scale_ab, std::abs(dA));
        d_jp = std::max(d_jp, std::abs(ch.J(i, j) * pj * pj - 1));
        const S sq = std::sqrt(ch.J(i, j));
        // component identities d xi_i = sqrt(J) * (rotated d x_j)
        d_iso = std::max({d_iso, std::abs(j1.dH(i, j) - sq * ch.e2.b(i, j)),
                          std::abs(j1.dr(i, j) + sq * ch.e2.a(i, j)),
                          std::abs(j2.dH(i, j) + sq * ch.e1.b(i, j)),
                          std::abs(j2.dr(i, j) - sq * ch.e1.a(i, j))});
        // B A^-1 symmetry: h12 - h21 scaled by the largest entry
        const S inv = 1 / dA;
        const S h12 = inv * (-j1.dH(i, j) * ch.e1.b(i, j) + j1.dr(i, j) * ch.e1.a(i, j));
        const S h21 = inv * (j2.dH(i, j) * ch.e2.b(i, j) - j2.dr(i, j) * ch.e2.a(i, j));
        d_sym = std::max(d_sym, std::abs(h12 - h21));
        scale_h = std::max({scale_h, std::abs(h12), std::abs(h21)});
      }
    ch.identities.detA_vs_p2detB = d_ab / scale_ab;
    ch.identities.J_times_p2 = d_jp;
    ch.identities.isothermal = d_iso;
    ch.identities.hessian_symmetry = d_sym / std::max(scale_h, S(1));
  }

  return ch;
}

template <std::floating_point S>
Chart<S> assemble_chart(const std::string &seed1, const std::string &seed2, const JoyceData<S> &jd,
                        const Grid2<S> &g, const ChartOptions<S> &opt = {}) {
  return assemble_chart(make_seed<S>(seed1, jd, g), make_seed<S>(seed2, jd, g), jd, opt);
}

}  // namespace joyce
