// Core grid and field types shared by every stage of the pipeline.
//
// Fields live on uniform rectangles in (H, r) coordinates; the same Grid2
// type doubles for target grids in (x1, x2) after the chart map. Node
// ordering in exports is row-major with r (axis 1) fastest.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace joyce {

template <class S>
using Array2 = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic>;
using Eigen::Index;
using Mask2 = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Failure taxonomy mirrored by the CLI exit codes: ConfigError/DomainError
// mean the input was never usable (exit 2), CheckError means a check ran and
// failed its tolerance (exit 1), NumericError means iteration broke down
// (exit 3).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct CheckError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

template <std::floating_point S>
struct Grid2 {
  S H0{}, H1{}, r0{}, r1{};
  Index nH{}, nr{};

  S hH() const { return (H1 - H0) / S(nH - 1); }
  S hr() const { return (r1 - r0) / S(nr - 1); }
  S H(Index i) const { return H0 + S(i) * hH(); }
  S r(Index j) const { return r0 + S(j) * hr(); }
  // Aliases for grids used in chart-image coordinates.
  S x1(Index i) const { return H(i); }
  S x2(Index j) const { return r(j); }

  bool operator==(const Grid2 &) const = default;
};

template <std::floating_point S>
Grid2<S> make_grid(S H0, S H1, S r0, S r1, Index nH, Index nr) {
  if (!(H1 > H0) || !(r1 > r0)) throw ConfigError("grid ranges must be increasing");
  if (nH < 3 || nr < 3) throw ConfigError("grid needs at least 3 nodes per axis");
  if (!std::isfinite(H0) || !std::isfinite(H1) || !std::isfinite(r0) || !std::isfinite(r1))
    throw ConfigError("grid ranges must be finite");
  return Grid2<S>{H0, H1, r0, r1, nH, nr};
}

// Doubled-resolution copy sharing the physical rectangle: every old node is
// a node of the refined grid, which keeps convergence-study subdomains exact.
template <std::floating_point S>
Grid2<S> refined(const Grid2<S> &g, int levels = 1) {
  Grid2<S> out = g;
  for (int l = 0; l < levels; ++l) {
    out.nH = 2 * out.nH - 1;
    out.nr = 2 * out.nr - 1;
  }
  return out;
}

// First and second partials of a scalar field at every node.
template <std::floating_point S>
struct Jet2 {
  Array2<S> dH, dr, dHH, dHr, drr;
};

enum class JetSource { Analytic, FiniteDifference };

template <std::floating_point S>
struct ScalarField {
  Grid2<S> grid;
  Array2<S> values;
  std::optional<Jet2<S>> jet;
  JetSource jet_source = JetSource::FiniteDifference;
  std::string name;

  bool has_jet() const { return jet.has_value(); }
};

namespace detail {

// 1-D derivative stencils, second order everywhere: central in the
// interior, one-sided at the two edge nodes. These are the canonical
// stencils; every finite-difference jet in the library is built from them.
template <std::floating_point S, class Get>
S d1_line(Get f, Index n, Index i, S h) {
  if (i == 0) return (S(-3) * f(0) + S(4) * f(1) - f(2)) / (S(2) * h);
  if (i == n - 1) return (S(3) * f(n - 1) - S(4) * f(n - 2) + f(n - 3)) / (S(2) * h);
  return (f(i + 1) - f(i - 1)) / (S(2) * h);
}

template <std::floating_point S, class Get>
S d2_line(Get f, Index n, Index i, S h) {
  if (i == 0) {
    if (n >= 4) return (S(2) * f(0) - S(5) * f(1) + S(4) * f(2) - f(3)) / (h * h);
    return (f(0) - S(2) * f(1) + f(2)) / (h * h);
  }
  if (i == n - 1) {
    if (n >= 4) return (S(2) * f(n - 1) - S(5) * f(n - 2) + S(4) * f(n - 3) - f(n - 4)) / (h * h);
    return (f(n - 1) - S(2) * f(n - 2) + f(n - 3)) / (h * h);
  }
  return (f(i + 1) - S(2) * f(i) + f(i - 1)) / (h * h);
}

}  // namespace detail

// Derivative of every row/column of a field along one axis (0 = H, 1 = r).
template <std::floating_point S>
Array2<S> d1(const Grid2<S> &g, const Array2<S> &v, int axis) {
  Array2<S> out(g.nH, g.nr);
  if (axis == 0) {
    for (Index j = 0; j < g.nr; ++j)
      for (Index i = 0; i < g.nH; ++i)
        out(i, j) = detail::d1_line<S>([&](Index k) { return v(k, j); }, g.nH, i, g.hH());
  } else {
    for (Index i = 0; i < g.nH; ++i)
      for (Index j = 0; j < g.nr; ++j)
        out(i, j) = detail::d1_line<S>([&](Index k) { return v(i, k); }, g.nr, j, g.hr());
  }
  return out;
}

template <std::floating_point S>
Array2<S> d2(const Grid2<S> &g, const Array2<S> &v, int axis) {
  Array2<S> out(g.nH, g.nr);
  if (axis == 0) {
    for (Index j = 0; j < g.nr; ++j)
      for (Index i = 0; i < g.nH; ++i)
        out(i, j) = detail::d2_line<S>([&](Index k) { return v(k, j); }, g.nH, i, g.hH());
  } else {
    for (Index i = 0; i < g.nH; ++i)
      for (Index j = 0; j < g.nr; ++j)
        out(i, j) = detail::d2_line<S>([&](Index k) { return v(i, k); }, g.nr, j, g.hr());
  }
  return out;
}

// Canonical finite-difference jet. The mixed partial applies the r-stencil
// first, then the H-stencil; composition order is part of the convention.
template <std::floating_point S>
Jet2<S> fd_jet(const Grid2<S> &g, const Array2<S> &v) {
  Jet2<S> jet;
  jet.dH = d1(g, v, 0);
  jet.dr = d1(g, v, 1);
  jet.dHH = d2(g, v, 0);
  jet.drr = d2(g, v, 1);
  jet.dHr = d1(g, jet.dr, 0);
  return jet;
}

template <std::floating_point S>
ScalarField<S> with_fd_jet(ScalarField<S> f) {
  f.jet = fd_jet(f.grid, f.values);
  f.jet_source = JetSource::FiniteDifference;
  return f;
}

template <std::floating_point S>
ScalarField<S> make_field(const Grid2<S> &g, std::string name = {}) {
  ScalarField<S> f;
  f.grid = g;
  f.values = Array2<S>::Zero(g.nH, g.nr);
  f.name = std::move(name);
  return f;
}

// a*f + b*g with jets combined when both carry one.
template <std::floating_point S>
ScalarField<S> lincomb(S a, const ScalarField<S> &f, S b, const ScalarField<S> &g) {
  if (!(f.grid == g.grid)) throw ConfigError("lincomb: fields on different grids");
  ScalarField<S> out;
  out.grid = f.grid;
  out.values = a * f.values + b * g.values;
  out.name = f.name + "+" + g.name;
  if (f.has_jet() && g.has_jet()) {
    Jet2<S> jet;
    jet.dH = a * f.jet->dH + b * g.jet->dH;
    jet.dr = a * f.jet->dr + b * g.jet->dr;
    jet.dHH = a * f.jet->dHH + b * g.jet->dHH;
    jet.dHr = a * f.jet->dHr + b * g.jet->dHr;
    jet.drr = a * f.jet->drr + b * g.jet->drr;
    out.jet = std::move(jet);
    out.jet_source = (f.jet_source == JetSource::Analytic && g.jet_source == JetSource::Analytic)
                         ? JetSource::Analytic
                         : JetSource::FiniteDifference;
  }
  return out;
}

// Axis-aligned index rectangle, inclusive bounds; empty() when degenerate.
struct IndexRect {
  Index i0 = 0, i1 = -1, j0 = 0, j1 = -1;
  bool empty() const { return i1 < i0 || j1 < j0; }
  Index rows() const { return empty() ? 0 : i1 - i0 + 1; }
  Index cols() const { return empty() ? 0 : j1 - j0 + 1; }
  Index area() const { return rows() * cols(); }
};

inline IndexRect margin_rect(Index nH, Index nr, Index m) {
  return IndexRect{m, nH - 1 - m, m, nr - 1 - m};
}

// Norms over an index rectangle. L2 is the grid-weighted integral norm
// sqrt(hH*hr*sum f^2); sums run in fixed row-major order.
template <std::floating_point S>
S linf(const Array2<S> &v, const IndexRect &rect) {
  if (rect.empty()) return S(0);
  S m = 0;
  for (Index i = rect.i0; i <= rect.i1; ++i)
    for (Index j = rect.j0; j <= rect.j1; ++j) m = std::max(m, std::abs(v(i, j)));
  return m;
}

template <std::floating_point S>
S linf(const Array2<S> &v, Index margin = 0) {
  return linf(v, margin_rect(v.rows(), v.cols(), margin));
}

template <std::floating_point S>
S l2(const Grid2<S> &g, const Array2<S> &v, const IndexRect &rect) {
  if (rect.empty()) return S(0);
  S s = 0;
  for (Index i = rect.i0; i <= rect.i1; ++i)
    for (Index j = rect.j0; j <= rect.j1; ++j) s += v(i, j) * v(i, j);
  return std::sqrt(g.hH() * g.hr() * s);
}

template <std::floating_point S>
S l2(const Grid2<S> &g, const Array2<S> &v, Index margin = 0) {
  return l2(g, v, margin_rect(g.nH, g.nr, margin));
}

// Physical box used to pin convergence-study norms to one subdomain
// across refinement levels.
template <std::floating_point S>
struct PhysBox {
  S a0, a1, b0, b1;  // axis-0 and axis-1 ranges
};

template <std::floating_point S>
IndexRect rect_inside(const Grid2<S> &g, const PhysBox<S> &box) {
  const S eps = S(1e-12) * (std::abs(g.H1 - g.H0) + std::abs(g.r1 - g.r0));
  IndexRect r{g.nH, -1, g.nr, -1};
  for (Index i = 0; i < g.nH; ++i)
    if (g.H(i) >= box.a0 - eps && g.H(i) <= box.a1 + eps) {
      r.i0 = std::min(r.i0, i);
      r.i1 = std::max(r.i1, i);
    }
  for (Index j = 0; j < g.nr; ++j)
    if (g.r(j) >= box.b0 - eps && g.r(j) <= box.b1 + eps) {
      r.j0 = std::min(r.j0, j);
      r.j1 = std::max(r.j1, j);
    }
  return r;
}

inline IndexRect intersect(const IndexRect &a, const IndexRect &b) {
  IndexRect r{std::max(a.i0, b.i0), std::min(a.i1, b.i1), std::max(a.j0, b.j0),
              std::min(a.j1, b.j1)};
  return r;
}

// Residual field plus its norms over the region where it is defined.
template <std::floating_point S>
struct ResidualField {
  Array2<S> values;   // NaN outside `region`
  IndexRect region;
  S linf_norm{}, l2_norm{};
};

template <std::floating_point S>
ResidualField<S> finish_residual(const Grid2<S> &g, Array2<S> vals, const IndexRect &region) {
  ResidualField<S> rf;
  rf.region = region;
  rf.linf_norm = linf(vals, region);
  rf.l2_norm = l2(g, vals, region);
  rf.values = std::move(vals);
  return rf;
}

template <std::floating_point S>
constexpr S quiet_nan() {
  return std::numeric_limits<S>::quiet_NaN();
}

// Least-squares slope of log(norm) against log(h); the convergence order.
template <std::floating_point S>
S fitted_order(const std::vector<S> &h, const std::vector<S> &norm) {
  if (h.size() != norm.size() || h.size() < 2) throw ConfigError("order fit needs >= 2 levels");
  S sx = 0, sy = 0, sxx = 0, sxy = 0;
  const S n = S(h.size());
  for (size_t k = 0; k < h.size(); ++k) {
    if (!(norm[k] > 0)) throw DomainError("order fit: norm not positive");
    const S x = std::log(h[k]), y = std::log(norm[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace joyce
