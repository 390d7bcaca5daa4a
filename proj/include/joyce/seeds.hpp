// Seed solutions of the linear equation
//
//   xi_HH + (1/p) (p xi_r)_r = 0
//
// on a grid strictly inside the weight interval. Closed-form kinds carry
// exact jets and are validated against the equation at construction, which
// is what catches a seed paired with the wrong weight. Separable modes
// cos(kH + phase) R(r) integrate the radial factor with classical RK4; their
// jets use R'' straight from the ODE and are therefore exactly consistent
// with the equation, whatever the integration error in R itself.

#pragma once

#include "joyce/core.hpp"
#include "joyce/potential.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace joyce {

// Pointwise 2-jet of an analytic expression.
template <std::floating_point S>
struct JetPoint {
  S v, dH, dr, dHH, dHr, drr;
};

template <std::floating_point S, class F>
ScalarField<S> analytic_field(const Grid2<S> &g, F fn, std::string name = {}) {
  ScalarField<S> f = make_field(g, std::move(name));
  Jet2<S> jet;
  jet.dH.resize(g.nH, g.nr);
  jet.dr.resize(g.nH, g.nr);
  jet.dHH.resize(g.nH, g.nr);
  jet.dHr.resize(g.nH, g.nr);
  jet.drr.resize(g.nH, g.nr);
  for (Index i = 0; i < g.nH; ++i)
    for (Index j = 0; j < g.nr; ++j) {
      const JetPoint<S> pt = fn(g.H(i), g.r(j));
      f.values(i, j) = pt.v;
      jet.dH(i, j) = pt.dH;
      jet.dr(i, j) = pt.dr;
      jet.dHH(i, j) = pt.dHH;
      jet.dHr(i, j) = pt.dHr;
      jet.drr(i, j) = pt.drr;
    }
  f.jet = std::move(jet);
  f.jet_source = JetSource::Analytic;
  return f;
}

enum class SeedKind { CoordinateH, LogR, PointSource, Mode, Expr };

template <std::floating_point S>
struct SeedSpec {
  SeedKind kind = SeedKind::CoordinateH;
  S Hc = 0;                     // point source center
  S k = 0, phase = 0, R0 = 1, R0p = 0;  // separable mode parameters
  std::string expr;             // named closed form
  std::string text;             // round-trip spec string
};

template <std::floating_point S = double>
SeedSpec<S> parse_seed_spec(const std::string &text) {
  SeedSpec<S> s;
  s.text = text;
  if (text == "H") {
    s.kind = SeedKind::CoordinateH;
    return s;
  }
  if (text == "logr") {
    s.kind = SeedKind::LogR;
    return s;
  }
  auto split = [](const std::string &str) {
    std::vector<std::string> parts;
    std::istringstream is(str);
    std::string tok;
    while (std::getline(is, tok, ':')) parts.push_back(tok);
    return parts;
  };
  const auto parts = split(text);
  auto number = [&](const std::string &tok) {
    std::istringstream is(tok);
    S v;
    if (!(is >> v)) throw ConfigError("seed spec: bad number '" + tok + "' in '" + text + "'");
    return v;
  };
  if (parts.size() == 2 && parts[0] == "pointsource") {
    s.kind = SeedKind::PointSource;
    s.Hc = number(parts[1]);
    return s;
  }
  if (parts.size() == 5 && parts[0] == "mode") {
    s.kind = SeedKind::Mode;
    s.k = number(parts[1]);
    s.phase = number(parts[2]);
    s.R0 = number(parts[3]);
    s.R0p = number(parts[4]);
    if (s.k < S(0)) throw ConfigError("seed spec: mode wavenumber must be >= 0");
    return s;
  }
  if (parts.size() == 2 && parts[0] == "expr") {
    s.kind = SeedKind::Expr;
    s.expr = parts[1];
    return s;
  }
  throw ConfigError("unrecognized seed spec '" + text + "'");
}

// ----------------------------------------------------------------------------
// Radial factor of a separable mode: (p R')' = k^2 p R along the grid's
// r-line, classical RK4 with four substeps per grid interval.

template <std::floating_point S>
struct RadialMode {
  std::vector<S> R, Rp, Rpp;
};

template <std::floating_point S>
RadialMode<S> solve_radial_mode(const JoyceData<S> &jd, S k, const Grid2<S> &g, S R0, S R0p) {
  RadialMode<S> out;
  out.R.resize(size_t(g.nr));
  out.Rp.resize(size_t(g.nr));
  out.Rpp.resize(size_t(g.nr));
  const S h = g.hr() / 4;
  if (!(h > std::numeric_limits<S>::epsilon() * std::max(std::abs(g.r0), std::abs(g.r1))))
    throw NumericError("radial mode: step size underflows the r range");

  auto deriv = [&](S r, S y0, S y1, S &d0, S &d1) {
    const auto s = eval_joyce(jd, r);
    d0 = y1;
    d1 = k * k * y0 - (s.p1 / s.p) * y1;
  };
  auto rpp = [&](S r, S y0, S y1) {
    const auto s = eval_joyce(jd, r);
    return k * k * y0 - (s.p1 / s.p) * y1;
  };

  S y0 = R0, y1 = R0p;
  out.R[0] = y0;
  out.Rp[0] = y1;
  out.Rpp[0] = rpp(g.r(0), y0, y1);
  for (Index j = 1; j < g.nr; ++j) {
    for (int sub = 0; sub < 4; ++sub) {
      const S r = g.r(j - 1) + S(sub) * h;
      S a0, a1, b0, b1, c0, c1, d0, d1;
      deriv(r, y0, y1, a0, a1);
      deriv(r + h / 2, y0 + h / 2 * a0, y1 + h / 2 * a1, b0, b1);
      deriv(r + h / 2, y0 + h / 2 * b0, y1 + h / 2 * b1, c0, c1);
      deriv(r + h, y0 + h * c0, y1 + h * c1, d0, d1);
      y0 += h / 6 * (a0 + 2 * b0 + 2 * c0 + d0);
      y1 += h / 6 * (a1 + 2 * b1 + 2 * c1 + d1);
      if (!std::isfinite(y0) || !std::isfinite(y1))
        throw NumericError("radial mode: integration blew up near r = " + std::to_string(double(r)));
    }
    out.R[size_t(j)] = y0;
    out.Rp[size_t(j)] = y1;
    out.Rpp[size_t(j)] = rpp(g.r(j), y0, y1);
  }
  return out;
}

// ----------------------------------------------------------------------------
// Residual of the linear equation from the field's jet (canonical FD jet
// when the field carries none). Norms over the one-node interior.

template <std::floating_point S>
ResidualField<S> linear_residual(const ScalarField<S> &xi, const JoyceData<S> &jd) {
  const Grid2<S> &g = xi.grid;
  const Jet2<S> jet = xi.has_jet() ? *xi.jet : fd_jet(g, xi.values);
  Array2<S> res(g.nH, g.nr);
  for (Index j = 0; j < g.nr; ++j) {
    const auto s = eval_joyce(jd, g.r(j));
    const S q = s.p1 / s.p;
    for (Index i = 0; i < g.nH; ++i)
      res(i, j) = jet.dHH(i, j) + q * jet.dr(i, j) + jet.drr(i, j);
  }
  return finish_residual(g, std::move(res), margin_rect(g.nH, g.nr, 1));
}

// ----------------------------------------------------------------------------
// Seed construction.

namespace detail {

// Closed-form radial solution: the primitive of 1/p, which solves the
// linear equation for any weight. Only the builtin weights admit one here.
template <std::floating_point S>
JetPoint<S> radial_primitive(const JoyceData<S> &jd, S r) {
  switch (jd.wkind) {
    case WeightKind::LinearR:
      return {std::log(r), 0, S(1) / r, 0, 0, S(-1) / (r * r)};
    case WeightKind::PowerR: {
      const S m = jd.m;
      if (m == S(1)) return {std::log(r), 0, S(1) / r, 0, 0, S(-1) / (r * r)};
      const S v = std::pow(r, S(1) - m) / (S(1) - m);
      return {v, 0, std::pow(r, -m), 0, 0, -m * std::pow(r, -m - 1)};
    }
    case WeightKind::ExpHalfR: {
      const S e = std::exp(-r / 2);
      return {-2 * e, 0, e, 0, 0, -e / 2};
    }
    default:
      throw ConfigError("seed 'radial' needs a builtin closed-form weight");
  }
}

template <std::floating_point S>
struct ExprEntry {
  bool is_solution;
  std::function<JetPoint<S>(const JoyceData<S> &, S, S)> fn;
};

template <std::floating_point S>
const std::map<std::string, ExprEntry<S>> &expr_registry() {
  static const std::map<std::string, ExprEntry<S>> reg = {
      {"negH", {true, [](const JoyceData<S> &, S H, S) { return JetPoint<S>{-H, -1, 0, 0, 0, 0}; }}},
      {"radial", {true, [](const JoyceData<S> &jd, S, S r) { return radial_primitive(jd, r); }}},
      {"H_plus_radial",
       {true,
        [](const JoyceData<S> &jd, S H, S r) {
          JetPoint<S> q = radial_primitive(jd, r);
          q.v += H;
          q.dH += 1;
          return q;
        }}},
      {"H_over_r",
       {true,
        [](const JoyceData<S> &, S H, S r) {
          return JetPoint<S>{H / r, S(1) / r, -H / (r * r), 0, S(-1) / (r * r), 2 * H / (r * r * r)};
        }}},
      {"H2_minus_r2_over_r",
       {true,
        [](const JoyceData<S> &, S H, S r) {
          return JetPoint<S>{H * H / r - r, 2 * H / r, -H * H / (r * r) - 1, S(2) / r,
                             -2 * H / (r * r), 2 * H * H / (r * r * r)};
        }}},
      // Deliberate non-solution, available for negative controls. It skips
      // the construction-time equation check and gets rejected downstream.
      {"H2", {false, [](const JoyceData<S> &, S H, S) { return JetPoint<S>{H * H, 2 * H, 0, 2, 0, 0}; }}},
  };
  return reg;
}

}  // namespace detail

template <std::floating_point S>
ScalarField<S> make_seed(const SeedSpec<S> &spec, const JoyceData<S> &jd, const Grid2<S> &g) {
  if (!(g.r0 > jd.r_lo) || !(g.r1 < jd.r_hi))
    throw ConfigError("seed grid: [r0, r1] must lie strictly inside the weight interval");

  ScalarField<S> xi;
  bool validate = true;
  switch (spec.kind) {
    case SeedKind::CoordinateH:
      xi = analytic_field(g, [](S H, S) { return JetPoint<S>{H, 1, 0, 0, 0, 0}; }, spec.text);
      break;
    case SeedKind::LogR:
      xi = analytic_field(
          g, [](S, S r) { return JetPoint<S>{std::log(r), 0, S(1) / r, 0, 0, S(-1) / (r * r)}; },
          spec.text);
      break;
    case SeedKind::PointSource: {
      const S Hc = spec.Hc;
      // Keep the singular point well away from the grid.
      S smin = std::numeric_limits<S>::max();
      for (S H : {g.H0, g.H1})
        for (S r : {g.r0, g.r1}) smin = std::min(smin, (H - Hc) * (H - Hc) + r * r);
      if (g.H0 <= Hc && Hc <= g.H1) smin = std::min(smin, g.r0 * g.r0);
      const S scale = std::max({std::abs(g.H0), std::abs(g.H1), std::abs(g.r1), S(1)});
      if (smin < S(1e-10) * scale * scale)
        throw ConfigError("point-source seed: grid touches the singular point");
      xi = analytic_field(
          g,
          [Hc](S H, S r) {
            const S dx = H - Hc;
            const S s = dx * dx + r * r;
            const S s32 = std::pow(s, S(-1.5)), s52 = std::pow(s, S(-2.5));
            return JetPoint<S>{S(1) / std::sqrt(s), -dx * s32,         -r * s32,
                               -s32 + 3 * dx * dx * s52, 3 * dx * r * s52, -s32 + 3 * r * r * s52};
          },
          spec.text);
      break;
    }
    case SeedKind::Mode: {
      const RadialMode<S> mode = solve_radial_mode(jd, spec.k, g, spec.R0, spec.R0p);
      const S k = spec.k, ph = spec.phase;
      xi = make_field(g, spec.text);
      Jet2<S> jet;
      jet.dH.resize(g.nH, g.nr);
      jet.dr.resize(g.nH, g.nr);
      jet.dHH.resize(g.nH, g.nr);
      jet.dHr.resize(g.nH, g.nr);
      jet.drr.resize(g.nH, g.nr);
      for (Index i = 0; i < g.nH; ++i) {
        const S c = std::cos(k * g.H(i) + ph), s = std::sin(k * g.H(i) + ph);
        for (Index j = 0; j < g.nr; ++j) {
          const S R = mode.R[size_t(j)], Rp = mode.Rp[size_t(j)], Rpp = mode.Rpp[size_t(j)];
          xi.values(i, j) = c * R;
          jet.dH(i, j) = -k * s * R;
          jet.dr(i, j) = c * Rp;
          jet.dHH(i, j) = -k * k * c * R;
          jet.dHr(i, j) = -k * s * Rp;
          jet.drr(i, j) = c * Rpp;
        }
      }
      xi.jet = std::move(jet);
      xi.jet_source = JetSource::Analytic;
      validate = false;  // jets satisfy the equation identically by construction
      break;
    }
    case SeedKind::Expr: {
      const auto &reg = detail::expr_registry<S>();
      auto it = reg.find(spec.expr);
      if (it == reg.end()) throw ConfigError("unknown named seed 'expr:" + spec.expr + "'");
      const auto &entry = it->second;
      xi = analytic_field(g, [&](S H, S r) { return entry.fn(jd, H, r); }, spec.text);
      validate = entry.is_solution;
      break;
    }
  }

  if (validate) {
    const ResidualField<S> res = linear_residual(xi, jd);
    S scale = 1 + linf(xi.jet->dHH, Index(0)) + linf(xi.jet->drr, Index(0));
    if (res.linf_norm > S(1e-8) * scale)
      throw ConfigError("seed '" + spec.text + "' does not solve the linear equation for weight '" +
                        jd.potential_spec + "' (residual " + std::to_string(double(res.linf_norm)) +
                        ")");
  }
  return xi;
}

template <std::floating_point S>
ScalarField<S> make_seed(const std::string &text, const JoyceData<S> &jd, const Grid2<S> &g) {
  return make_seed(parse_seed_spec<S>(text), jd, g);
}

}  // namespace joyce
