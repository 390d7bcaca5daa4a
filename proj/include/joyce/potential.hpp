// Weight data for the construction.
//
// A potential psi on (0, inf) with psi'' of one sign induces an increasing
// (or decreasing) map f with f'(t) = sqrt(t) * psi''(t), and the weight
//   p(r) = (f^{-1}(r))^{-1/2},   J = p(r)^{-2} when r = f(J).
// The PDE machinery only ever consumes (p, p', I); the builtin weights use
// the customary normalizations
//   logdet      psi = -log t      p(r) = r        on (0, inf)
//   power:a     psi = -t^a        p(r) = r^{1/(1-2a)}, a != 1/2
//   power:0.5   psi = -sqrt(t)    p(r) = exp(r/2) on all of R
//   affine      psi = +t^{1/4}    p(r) = r^2      on (0, inf)
// which differ from direct integration of f' by a joint affine change of
// (H, r) and a constant factor; the linear equation and, for these
// homogeneous psi, the nonlinear one are invariant under exactly that
// freedom. Quadrature mode integrates f' literally (anchor f(1) = 0) and is
// therefore a reparametrized but equivalent weight.

#pragma once

#include "joyce/core.hpp"
#include "joyce/interp.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <functional>
#include <sstream>

namespace joyce {

enum class PotentialKind { Logdet, Power, AffineQuarter, Tabulated, Derived };

template <std::floating_point S>
struct Potential {
  PotentialKind kind = PotentialKind::Logdet;
  S alpha = 0;              // exponent for Power
  int curvature_sign = +1;  // sign of psi'' on (0, inf)
  std::function<S(S)> psi, psi1, psi2;
  std::string spec;  // parseable round-trip form
};

namespace detail {
template <std::floating_point S>
void check_t(S t) {
  if (!(t > S(0)) || !std::isfinite(t)) throw DomainError("potential: argument must be in (0, inf)");
}
}  // namespace detail

template <std::floating_point S = double>
Potential<S> logdet_potential() {
  Potential<S> P;
  P.kind = PotentialKind::Logdet;
  P.curvature_sign = +1;
  P.spec = "logdet";
  P.psi = [](S t) { detail::check_t(t); return -std::log(t); };
  P.psi1 = [](S t) { detail::check_t(t); return S(-1) / t; };
  P.psi2 = [](S t) { detail::check_t(t); return S(1) / (t * t); };
  return P;
}

template <std::floating_point S = double>
Potential<S> power_potential(S alpha) {
  if (!(alpha > S(0)) || !(alpha < S(1))) throw ConfigError("power potential: alpha must be in (0,1)");
  Potential<S> P;
  P.kind = PotentialKind::Power;
  P.alpha = alpha;
  P.curvature_sign = +1;  // psi = -t^alpha is convex for alpha in (0,1)
  {
    std::ostringstream os;
    os << "power:" << alpha;
    P.spec = os.str();
  }
  P.psi = [alpha](S t) { detail::check_t(t); return -std::pow(t, alpha); };
  P.psi1 = [alpha](S t) { detail::check_t(t); return -alpha * std::pow(t, alpha - 1); };
  P.psi2 = [alpha](S t) {
    detail::check_t(t);
    return -alpha * (alpha - 1) * std::pow(t, alpha - 2);
  };
  return P;
}

// Concave quarter power used for affine maximal surfaces. Same
// Euler-Lagrange equation as -t^{1/4}; kept distinct so reports can show
// the curvature sign.
template <std::floating_point S = double>
Potential<S> affine_potential() {
  Potential<S> P;
  P.kind = PotentialKind::AffineQuarter;
  P.curvature_sign = -1;
  P.spec = "affine";
  P.psi = [](S t) { detail::check_t(t); return std::pow(t, S(0.25)); };
  P.psi1 = [](S t) { detail::check_t(t); return S(0.25) * std::pow(t, S(-0.75)); };
  P.psi2 = [](S t) { detail::check_t(t); return S(-0.1875) * std::pow(t, S(-1.75)); };
  return P;
}

// Tabulated potential from (t, psi) samples. Interpolation runs in log t;
// psi'' comes from a second monotone fit to the interpolated psi'.
template <std::floating_point S = double>
Potential<S> tabulated_potential(std::vector<std::pair<S, S>> rows, std::string spec) {
  if (rows.size() < 8) throw ConfigError("tabulated potential: need at least 8 rows");
  std::sort(rows.begin(), rows.end());
  std::vector<S> u(rows.size()), y(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].first > S(0))) throw ConfigError("tabulated potential: t values must be positive");
    u[i] = std::log(rows[i].first);
    y[i] = rows[i].second;
  }
  auto P0 = std::make_shared<Pchip<S>>(u, y);
  std::vector<S> d1v(u.size());
  for (size_t i = 0; i < u.size(); ++i) d1v[i] = P0->derivative(u[i]) / std::exp(u[i]);
  auto P1 = std::make_shared<Pchip<S>>(u, d1v);

  const S t_lo = rows.front().first, t_hi = rows.back().first;
  auto check_range = [t_lo, t_hi](S t) {
    detail::check_t(t);
    if (t < t_lo || t > t_hi) throw DomainError("tabulated potential: t outside table range");
  };

  Potential<S> P;
  P.kind = PotentialKind::Tabulated;
  P.spec = std::move(spec);
  P.psi = [P0, check_range](S t) { check_range(t); return (*P0)(std::log(t)); };
  P.psi1 = [P0, check_range](S t) { check_range(t); return P0->derivative(std::log(t)) / t; };
  P.psi2 = [P1, check_range](S t) { check_range(t); return P1->derivative(std::log(t)) / t; };
  // Curvature sign from the interior of the table.
  const S tmid = std::sqrt(t_lo * t_hi);
  P.curvature_sign = P.psi2(tmid) >= S(0) ? +1 : -1;
  return P;
}

template <std::floating_point S = double>
Potential<S> potential_from_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("potential file not readable: " + path);
  std::vector<std::pair<S, S>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    S t, v;
    if (!(ls >> t >> v)) throw ConfigError("potential file: bad row '" + line + "'");
    rows.emplace_back(t, v);
  }
  return tabulated_potential<S>(std::move(rows), "file:" + path);
}

template <std::floating_point S = double>
Potential<S> parse_potential(const std::string &spec) {
  if (spec == "logdet") return logdet_potential<S>();
  if (spec == "affine") return affine_potential<S>();
  if (spec.rfind("power:", 0) == 0) {
    std::istringstream is(spec.substr(6));
    S a;
    if (!(is >> a)) throw ConfigError("potential spec: bad alpha in '" + spec + "'");
    return power_potential<S>(a);
  }
  if (spec.rfind("file:", 0) == 0) return potential_from_file<S>(spec.substr(5));
  throw ConfigError("unknown potential spec '" + spec + "'");
}

// ----------------------------------------------------------------------------
// Joyce data: the weight p on its interval, with the J <-> r dictionary.

enum class JoyceMode { ClosedForm, Quadrature };
enum class WeightKind { LinearR, PowerR, ExpHalfR, Tabulated, Transformed };

template <std::floating_point S>
struct JoyceData {
  S r_lo = 0, r_hi = 0;  // open interval I
  S J_lo = 0, J_hi = 0;  // open range of J = p^{-2}
  std::function<S(S)> p, p1;
  std::function<S(S)> f_J;  // r = f(J)
  JoyceMode mode = JoyceMode::ClosedForm;
  WeightKind wkind = WeightKind::LinearR;
  S m = 1;  // exponent for PowerR
  std::string potential_spec;
};

template <std::floating_point S>
struct JoyceSample {
  S p, p1, J;
};

template <std::floating_point S>
JoyceSample<S> eval_joyce(const JoyceData<S> &jd, S r) {
  if (!(r > jd.r_lo) || !(r < jd.r_hi))
    throw DomainError("joyce data: r outside the weight interval");
  const S p = jd.p(r);
  if (!(p > S(0)) || !std::isfinite(p)) throw DomainError("joyce data: weight not positive");
  return {p, jd.p1(r), S(1) / (p * p)};
}

template <std::floating_point S>
S f_of_J(const JoyceData<S> &jd, S J) {
  if (!(J > jd.J_lo) || !(J < jd.J_hi)) throw DomainError("joyce data: J outside the admissible range");
  return jd.f_J(J);
}

struct QuadratureOptions {
  double t_min = 1e-4, t_max = 1e4;
  // Monotone interpolation error through the f table goes like h^3; this
  // density keeps the reconstructed p within ~1e-7 relative of the exact
  // reparametrized weight, well inside the 1e-6 the checks ask for.
  int n_table = 1501;
  double tol = 1e-12;
};

namespace detail {

// Adaptive Simpson on [a, b].
template <std::floating_point S, class F>
S adaptive_simpson(F f, S a, S b, S tol, int depth = 0) {
  const S c = (a + b) / 2;
  const S fa = f(a), fb = f(b), fc = f(c);
  const S whole = (b - a) / 6 * (fa + 4 * fc + fb);
  const S lm = (a + c) / 2, rm = (c + b) / 2;
  const S left = (c - a) / 6 * (fa + 4 * f(lm) + fc);
  const S right = (b - c) / 6 * (fc + 4 * f(rm) + fb);
  const S delta = left + right - whole;
  if (depth > 28 || std::abs(delta) <= S(15) * tol) return left + right + delta / 15;
  return adaptive_simpson(f, a, c, tol / 2, depth + 1) +
         adaptive_simpson(f, c, b, tol / 2, depth + 1);
}

template <std::floating_point S>
JoyceData<S> quadrature_joyce(const Potential<S> &pot, const QuadratureOptions &opt) {
  const int n = opt.n_table;
  if (n < 16) throw ConfigError("quadrature table too small");
  if (!(opt.t_min > 0) || !(opt.t_max > opt.t_min)) throw ConfigError("bad quadrature t range");
  std::vector<S> t(n), f(n);
  const S ul = std::log(S(opt.t_min)), uh = std::log(S(opt.t_max));
  for (int i = 0; i < n; ++i) t[i] = std::exp(ul + (uh - ul) * S(i) / S(n - 1));

  auto fp = [&pot](S s) { return std::sqrt(s) * pot.psi2(s); };

  // f' must keep one sign over the whole table, otherwise f has no inverse.
  int sign = 0;
  for (int i = 0; i < n; ++i) {
    const S v = fp(t[i]);
    const int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
    if (s == 0) throw ConfigError("quadrature mode: psi'' vanishes at t = " + std::to_string(double(t[i])));
    if (sign == 0) sign = s;
    if (s != sign)
      throw ConfigError("quadrature mode: psi'' changes sign near t = " + std::to_string(double(t[i])));
  }

  // Cumulative integral of f' across the table, then anchor f(1) = 0.
  f[0] = 0;
  for (int i = 1; i < n; ++i)
    f[i] = f[i - 1] + adaptive_simpson<S>(fp, t[i - 1], t[i], S(opt.tol) * (t[i] - t[i - 1]));
  S f_at_1;
  if (opt.t_min <= 1.0 && opt.t_max >= 1.0) {
    int k = 0;
    while (k + 1 < n && t[k + 1] <= S(1)) ++k;
    f_at_1 = f[k] + adaptive_simpson<S>(fp, t[k], S(1), S(opt.tol));
  } else {
    f_at_1 = f[0];
  }
  for (int i = 0; i < n; ++i) f[i] -= f_at_1;

  // Interpolant of f against log t. The direction of f only matters for
  // the bisection predicate below.
  std::vector<S> u(n);
  for (int i = 0; i < n; ++i) u[i] = std::log(t[i]);
  auto f_of_logt = std::make_shared<Pchip<S>>(u, f);

  // Invert r -> t on an even r grid by bisection plus a few Newton steps on
  // the true f', then tabulate p = t^{-1/2} for interpolation.
  const S r_lo = std::min(f.front(), f.back()), r_hi = std::max(f.front(), f.back());
  const int np = n;
  std::vector<S> rg(np), pg(np);
  auto f_tilde = [&](S logt) { return (*f_of_logt)(logt); };
  for (int i = 0; i < np; ++i) {
    const S r = r_lo + (r_hi - r_lo) * S(i) / S(np - 1);
    S lo = u.front(), hi = u.back();
    for (int it = 0; it < 60 && hi - lo > S(1e-3); ++it) {
      const S mid = (lo + hi) / 2;
      if ((f_tilde(mid) - r) * S(sign) < 0)
        lo = mid;
      else
        hi = mid;
    }
    S logt = (lo + hi) / 2;
    for (int it = 0; it < 8; ++it) {
      const S tv = std::exp(logt);
      const S g = f_tilde(logt) - r;
      const S gp = fp(tv) * tv;  // d f / d log t
      if (!(std::abs(gp) > 0)) break;
      logt = std::clamp(logt - g / gp, u.front(), u.back());
    }
    rg[i] = r;
    pg[i] = std::exp(-logt / 2);
  }
  auto p_interp = std::make_shared<Pchip<S>>(rg, pg);

  JoyceData<S> jd;
  jd.mode = JoyceMode::Quadrature;
  jd.wkind = WeightKind::Tabulated;
  jd.potential_spec = pot.spec;
  jd.r_lo = r_lo;
  jd.r_hi = r_hi;
  jd.J_lo = S(opt.t_min);
  jd.J_hi = S(opt.t_max);
  jd.p = [p_interp, r_lo, r_hi](S r) {
    if (!(r > r_lo) || !(r < r_hi)) throw DomainError("quadrature weight: r outside table");
    return (*p_interp)(r);
  };
  jd.p1 = [p_interp, r_lo, r_hi](S r) {
    if (!(r > r_lo) || !(r < r_hi)) throw DomainError("quadrature weight: r outside table");
    return p_interp->derivative(r);
  };
  jd.f_J = [f_of_logt](S J) { return (*f_of_logt)(std::log(J)); };
  return jd;
}

}  // namespace detail

template <std::floating_point S>
JoyceData<S> derive_joyce_data(const Potential<S> &pot, JoyceMode mode = JoyceMode::ClosedForm,
                               const QuadratureOptions &opt = {}) {
  if (mode == JoyceMode::Quadrature) return detail::quadrature_joyce(pot, opt);

  const S inf = std::numeric_limits<S>::infinity();
  JoyceData<S> jd;
  jd.mode = JoyceMode::ClosedForm;
  jd.potential_spec = pot.spec;
  switch (pot.kind) {
    case PotentialKind::Logdet:
      jd.wkind = WeightKind::LinearR;
      jd.m = 1;
      jd.r_lo = 0;
      jd.r_hi = inf;
      jd.J_lo = 0;
      jd.J_hi = inf;
      jd.p = [](S r) { return r; };
      jd.p1 = [](S) { return S(1); };
      jd.f_J = [](S J) { return S(1) / std::sqrt(J); };
      return jd;
    case PotentialKind::AffineQuarter:
      jd.wkind = WeightKind::PowerR;
      jd.m = 2;
      jd.r_lo = 0;
      jd.r_hi = inf;
      jd.J_lo = 0;
      jd.J_hi = inf;
      jd.p = [](S r) { return r * r; };
      jd.p1 = [](S r) { return 2 * r; };
      jd.f_J = [](S J) { return std::pow(J, S(-0.25)); };
      return jd;
    case PotentialKind::Power: {
      if (pot.alpha == S(0.5)) {
        jd.wkind = WeightKind::ExpHalfR;
        jd.r_lo = -inf;
        jd.r_hi = inf;
        jd.J_lo = 0;
        jd.J_hi = inf;
        jd.p = [](S r) { return std::exp(r / 2); };
        jd.p1 = [](S r) { return std::exp(r / 2) / 2; };
        jd.f_J = [](S J) { return -std::log(J); };
        return jd;
      }
      const S m = S(1) / (S(1) - 2 * pot.alpha);
      jd.wkind = WeightKind::PowerR;
      jd.m = m;
      jd.r_lo = 0;
      jd.r_hi = inf;
      jd.J_lo = 0;
      jd.J_hi = inf;
      jd.p = [m](S r) { return std::pow(r, m); };
      jd.p1 = [m](S r) { return m * std::pow(r, m - 1); };
      jd.f_J = [m](S J) { return std::pow(J, S(-1) / (2 * m)); };
      return jd;
    }
    case PotentialKind::Tabulated:
    case PotentialKind::Derived:
      throw ConfigError("closed-form weights exist only for builtin potentials; use quadrature mode");
  }
  throw ConfigError("unreachable potential kind");
}

// ----------------------------------------------------------------------------
// Legendre duality on the potential and on the weight.
//
//   psi*(t) = t psi(1/t),  psi*' (t) = psi(1/t) - psi'(1/t)/t,
//   psi*''(t) = psi''(1/t)/t^3,  and  p*(r) = p(-r)^{-1} on -I.
// Both maps are involutions.

template <std::floating_point S>
Potential<S> dual_potential(const Potential<S> &pot) {
  Potential<S> D;
  D.kind = PotentialKind::Derived;
  D.curvature_sign = pot.curvature_sign;
  D.spec = "dual(" + pot.spec + ")";
  auto psi = pot.psi, psi1 = pot.psi1, psi2 = pot.psi2;
  D.psi = [psi](S t) { detail::check_t(t); return t * psi(S(1) / t); };
  D.psi1 = [psi, psi1](S t) {
    detail::check_t(t);
    return psi(S(1) / t) - psi1(S(1) / t) / t;
  };
  D.psi2 = [psi2](S t) {
    detail::check_t(t);
    return psi2(S(1) / t) / (t * t * t);
  };
  return D;
}

template <std::floating_point S>
JoyceData<S> dual_joyce(const JoyceData<S> &jd) {
  JoyceData<S> D;
  D.mode = jd.mode;
  D.wkind = WeightKind::Transformed;
  D.potential_spec = "dual(" + jd.potential_spec + ")";
  D.r_lo = -jd.r_hi;
  D.r_hi = -jd.r_lo;
  // J* = p*^{-2} = p(-r)^2 = 1/J(-r), so the J range inverts.
  D.J_lo = (jd.J_hi == std::numeric_limits<S>::infinity()) ? S(0) : S(1) / jd.J_hi;
  D.J_hi = (jd.J_lo == S(0)) ? std::numeric_limits<S>::infinity() : S(1) / jd.J_lo;
  auto p = jd.p, p1 = jd.p1, fJ = jd.f_J;
  D.p = [p](S r) { return S(1) / p(-r); };
  D.p1 = [p, p1](S r) {
    const S q = p(-r);
    return p1(-r) / (q * q);
  };
  D.f_J = [fJ](S J) { return -fJ(S(1) / J); };
  return D;
}

// True when the weight is exactly p(r) = r^2, which the harmonic lift in the
// affine pipeline requires.
template <std::floating_point S>
bool weight_is_r_squared(const JoyceData<S> &jd, S rel_tol = S(1e-9)) {
  if (jd.wkind == WeightKind::PowerR && jd.m == S(2)) return true;
  if (!(jd.r_lo < S(1)) || !(jd.r_hi > S(2))) return false;
  for (S r : {S(1.0), S(1.5), S(2.0)}) {
    if (std::abs(jd.p(r) - r * r) > rel_tol * r * r) return false;
  }
  return true;
}

}  // namespace joyce
