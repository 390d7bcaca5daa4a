#include "joyce/affine.hpp"

#include "support/closed_forms.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <string>

using namespace joyce;

namespace {

bool contains(const std::string &hay, const std::string &needle) {
  return hay.find(needle) != std::string::npos;
}

double sup_diff(const Array2<double> &a, const Array2<double> &b) {
  return linf(Array2<double>(a - b));
}

}  // namespace

TEST_CASE("named harmonics and the laplace residual") {
  const Grid2<double> g = make_grid(-1.0, 1.0, -0.5, 1.5, 17, 17);

  for (const char *name : {"l1", "l2", "l1l2", "l1sq_minus_l2sq", "one"}) {
    CHECK(harmonic_name_is_known(name));
    const ScalarField<double> f = make_harmonic<double>(name, g);
    CHECK(f.has_jet());
    const ResidualField<double> res = laplace_residual(f);
    CHECK(res.linf_norm == 0.0);  // jets are analytic, the sum is exactly zero
    CHECK(res.region.i0 == 0);
    CHECK(res.region.i1 == g.nH - 1);
  }

  // l1sq is the deliberate non-harmonic: Laplacian 2 everywhere.
  CHECK(harmonic_name_is_known("l1sq"));
  const ScalarField<double> bad = make_harmonic<double>("l1sq", g);
  CHECK(laplace_residual(bad).linf_norm == 2.0);

  // Jet-free fields fall back to second differences, one node in.
  ScalarField<double> bare = bad;
  bare.jet.reset();
  const ResidualField<double> fd = laplace_residual(bare);
  CHECK(fd.region.i0 == 1);
  CHECK(fd.region.i1 == g.nH - 2);
  CHECK(fd.linf_norm == doctest::Approx(2.0).epsilon(1e-10));

  CHECK(!harmonic_name_is_known("l3"));
  CHECK_THROWS_AS(make_harmonic<double>("l3", g), ConfigError);
}

TEST_CASE("the paraboloid from its parameter triple") {
  // F = (l1, l2, 1) integrates to Z = (-l1, -l2, (l1^2 + l2^2)/2) up to the
  // base-point constants.  All integrands are at most quadratic, so the
  // corrected trapezoid reproduces them to rounding.
  const Grid2<double> g = make_grid(-1.0, 1.0, -0.5, 1.5, 33, 33);
  const VectorSurface<double> s = chern_terng_integrate("l1", "l2", "one", g);
  CHECK(s.base_i == 16);
  CHECK(s.base_j == 16);
  CHECK(!s.degenerate);
  CHECK(s.Z[0].name == "Z1");
  CHECK(s.Z[2].name == "Z3");

  const double l1b = g.H(16), l2b = g.r(16);
  CHECK(l1b == 0.0);
  CHECK(l2b == 0.5);
  const Array2<double> z1 = refs::sample(g, [&](double a, double) { return -(a - l1b); });
  const Array2<double> z2 = refs::sample(g, [&](double, double b) { return -(b - l2b); });
  const Array2<double> z3 = refs::sample(g, [&](double a, double b) {
    return 0.5 * (a * a + b * b) - 0.5 * (l1b * l1b + l2b * l2b);
  });
  CHECK(sup_diff(s.Z[0].values, z1) <= 1e-12);
  CHECK(sup_diff(s.Z[1].values, z2) <= 1e-12);
  CHECK(sup_diff(s.Z[2].values, z3) <= 1e-12);
  for (int c = 0; c < 3; ++c) CHECK(s.path_disagreement[size_t(c)] <= 1e-13);

  // Tangent jets come straight from the forms: dZ3/dl1 = l1.
  CHECK(s.Z[2].jet->dH(3, 27) == doctest::Approx(g.H(3)).epsilon(1e-14));

  // Stripping the jets exercises the finite-difference path; the components
  // are quadratic, so the result is unchanged.
  std::array<ScalarField<double>, 3> F{make_harmonic<double>("l1", g),
                                       make_harmonic<double>("l2", g),
                                       make_harmonic<double>("one", g)};
  for (auto &f : F) f.jet.reset();
  const VectorSurface<double> s2 = chern_terng_integrate(F);
  CHECK(sup_diff(s2.Z[2].values, z3) <= 1e-12);
  CHECK(!s2.degenerate);
}

TEST_CASE("a non-harmonic component trips the integrator's gate") {
  const Grid2<double> g = make_grid(-1.0, 1.0, -0.5, 1.5, 17, 17);
  // F = (l1^2, l1 l2, 1): F x Laplace F = (0, 2, -2 l1 l2), so the first
  // component form is still closed and the second is the one reported.
  try {
    chern_terng_integrate("l1sq", "l1l2", "one", g);
    FAIL("expected CheckError");
  } catch (const CheckError &e) {
    CHECK(contains(e.what(), "component 1"));
    CHECK(contains(e.what(), "not closed"));
  }

  std::array<ScalarField<double>, 3> F{make_harmonic<double>("l1", g),
                                       make_harmonic<double>("l2", make_grid(-1.0, 1.0, -0.5, 1.5, 9, 9)),
                                       make_harmonic<double>("one", g)};
  CHECK_THROWS_AS(chern_terng_integrate(F), ConfigError);
}

TEST_CASE("the lift reproduces the catalog seeds") {
  const JoyceData<double> jd = derive_joyce_data(affine_potential<double>());
  const Grid2<double> g = make_grid(0.5, 1.5, 2.0, 3.0, 33, 65);

  // r F / r^2 closed forms: l1 -> H/r, l2 -> 1, l1 l2 -> H,
  // l1^2 - l2^2 -> H^2/r - r.  The first and last match registered seeds.
  const ScalarField<double> lift1 = lift_harmonic_to_seed(make_harmonic<double>("l1", g), jd);
  const ScalarField<double> seed1 = make_seed<double>("expr:H_over_r", jd, g);
  CHECK(lift1.name == "lift(l1)");
  CHECK(lift1.has_jet());
  CHECK(lift1.jet_source == JetSource::Analytic);
  CHECK(sup_diff(lift1.values, seed1.values) <= 1e-9);
  CHECK(sup_diff(lift1.jet->dH, seed1.jet->dH) <= 1e-13);
  CHECK(sup_diff(lift1.jet->dr, seed1.jet->dr) <= 1e-13);
  CHECK(sup_diff(lift1.jet->dHH, seed1.jet->dHH) <= 1e-13);
  CHECK(sup_diff(lift1.jet->dHr, seed1.jet->dHr) <= 1e-13);
  CHECK(sup_diff(lift1.jet->drr, seed1.jet->drr) <= 1e-13);

  const ScalarField<double> lift2 = lift_harmonic_to_seed(make_harmonic<double>("l2", g), jd);
  CHECK(sup_diff(lift2.values, refs::sample(g, [](double, double) { return 1.0; })) == 0.0);
  CHECK(linf(lift2.jet->dH) == 0.0);
  CHECK(linf(lift2.jet->dr) == 0.0);

  const ScalarField<double> lift12 = lift_harmonic_to_seed(make_harmonic<double>("l1l2", g), jd);
  CHECK(sup_diff(lift12.values, refs::sample(g, [](double a, double) { return a; })) <= 1e-13);
  CHECK(linf(Array2<double>(lift12.jet->dH - 1.0)) <= 1e-15);
  CHECK(linf(lift12.jet->drr) == 0.0);

  const ScalarField<double> lift4 =
      lift_harmonic_to_seed(make_harmonic<double>("l1sq_minus_l2sq", g), jd);
  const ScalarField<double> seed4 = make_seed<double>("expr:H2_minus_r2_over_r", jd, g);
  CHECK(sup_diff(lift4.values, seed4.values) <= 1e-9);
  CHECK(sup_diff(lift4.jet->dr, seed4.jet->dr) <= 1e-12);
  CHECK(sup_diff(lift4.jet->drr, seed4.jet->drr) <= 1e-12);

  // Every lift is a seed: the linear residual vanishes.
  for (const ScalarField<double> *xi : {&lift1, &lift2, &lift12, &lift4})
    CHECK(linear_residual(*xi, jd).linf_norm <= 1e-9);
}

TEST_CASE("the lift demands the squared weight and a fitting grid") {
  const Grid2<double> g = make_grid(0.5, 1.5, 2.0, 3.0, 17, 17);
  const ScalarField<double> F = make_harmonic<double>("l1", g);

  const JoyceData<double> logdet = derive_joyce_data(logdet_potential<double>());
  try {
    lift_harmonic_to_seed(F, logdet);
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(contains(e.what(), "weight must be p(r) = r^2"));
  }

  // power:0.25 shares the weight r^2 and is accepted.
  const JoyceData<double> quarter = derive_joyce_data(power_potential(0.25));
  const ScalarField<double> viaq = lift_harmonic_to_seed(F, quarter);
  CHECK(viaq.values(8, 8) == doctest::Approx(g.H(8) / g.r(8)).epsilon(1e-10));

  const JoyceData<double> affine = derive_joyce_data(affine_potential<double>());
  const Grid2<double> outside = make_grid(0.5, 1.5, -0.5, 3.0, 17, 17);
  CHECK_THROWS_AS(lift_harmonic_to_seed(make_harmonic<double>("l1", outside), affine),
                  ConfigError);
}

TEST_CASE("lifting a non-harmonic function is caught downstream, not by the lift") {
  // For p = r^2 the lift system is closed for every F, harmonic or not, so
  // the lift itself succeeds and returns r F / p.  The failure surfaces in
  // the seed equation and in the chart assembly gate.
  const JoyceData<double> jd = derive_joyce_data(affine_potential<double>());
  const Grid2<double> g = make_grid(0.5, 1.5, 2.0, 3.0, 33, 65);

  const ScalarField<double> xi = lift_harmonic_to_seed(make_harmonic<double>("l1sq", g), jd);
  const Array2<double> ref = refs::sample(g, [](double a, double b) { return a * a / b; });
  CHECK(sup_diff(xi.values, ref) <= 1e-9);

  const ResidualField<double> res = linear_residual(xi, jd);
  CHECK(res.values(5, 5) == doctest::Approx(2.0 / g.r(5)).epsilon(1e-9));
  CHECK(res.linf_norm > 0.5);

  try {
    assemble_chart(make_seed<double>("H", jd, g), xi, jd);
    FAIL("expected CheckError");
  } catch (const CheckError &e) {
    CHECK(contains(e.what(), "lift(l1sq)"));
    CHECK(contains(e.what(), "does not solve"));
  }
}

TEST_CASE("both routes draw the same surface") {
  const JoyceData<double> jd = derive_joyce_data(affine_potential<double>());
  const Grid2<double> g = make_grid(0.5, 1.5, 2.0, 3.0, 33, 65);

  for (auto [n1, n2] : {std::pair<const char *, const char *>{"l1", "l1l2"},
                        std::pair<const char *, const char *>{"l1sq_minus_l2sq", "l1l2"}}) {
    const ScalarField<double> F1 = make_harmonic<double>(n1, g);
    const ScalarField<double> F2 = make_harmonic<double>(n2, g);
    const VectorSurface<double> A =
        chern_terng_integrate<double>({F1, F2, make_harmonic<double>("l2", g)});
    const VectorSurface<double> B = surface_from_seeds(
        lift_harmonic_to_seed(F1, jd), lift_harmonic_to_seed(F2, jd), jd);
    CHECK(A.base_i == B.base_i);
    const SurfaceMatch<double> m = surface_route_equivalence(A, B);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(m.offset[size_t(c)]) <= 1e-10);
    CHECK(m.sup_after <= 1e-10);
    CHECK(!A.degenerate);
    CHECK(!B.degenerate);
    for (int c = 0; c < 3; ++c) CHECK(A.path_disagreement[size_t(c)] <= 1e-12);
  }

  const Grid2<double> g2 = make_grid(0.5, 1.5, 2.0, 3.0, 9, 9);
  CHECK_THROWS_AS(
      surface_route_equivalence(chern_terng_integrate("l1", "l2", "one", g),
                                chern_terng_integrate("l1", "l2", "one", g2)),
      ConfigError);
}

TEST_CASE("the chart and the surface agree up to two sign flips") {
  // The surface built from a seed pair carries the chart data as
  // Z = (-x1, -x2, u): the third tangent form is the potential form itself
  // and the first two are the negated coordinate forms.
  const JoyceData<double> jd = derive_joyce_data(affine_potential<double>());
  const Grid2<double> g = make_grid(0.6, 1.4, 1.1, 1.9, 33, 33);
  const ScalarField<double> s1 = make_seed<double>("expr:H_over_r", jd, g);
  const ScalarField<double> s2 = make_seed<double>("H", jd, g);

  const Chart<double> ch = assemble_chart(s1, s2, jd);
  const VectorSurface<double> v = surface_from_seeds(s1, s2, jd);
  CHECK(v.base_i == ch.base_i);
  CHECK(v.base_j == ch.base_j);

  CHECK(linf(Array2<double>(v.Z[0].values + ch.x1.values)) <= 1e-10);
  CHECK(linf(Array2<double>(v.Z[1].values + ch.x2.values)) <= 1e-10);
  CHECK(linf(Array2<double>(v.Z[2].values - ch.u.values)) <= 1e-10);
}

TEST_CASE("a seed pair with parallel directions flattens the surface") {
  const JoyceData<double> jd = derive_joyce_data(affine_potential<double>());
  const Grid2<double> g = make_grid(0.6, 1.4, 1.1, 1.9, 17, 17);
  const VectorSurface<double> v =
      surface_from_seeds(make_seed<double>("expr:negH", jd, g), make_seed<double>("H", jd, g), jd);
  CHECK(v.degenerate);
  CHECK(linf(v.Z[2].values) == 0.0);
  CHECK(sup_diff(v.Z[0].values, v.Z[1].values) <= 1e-15);
}

TEST_CASE("gauss-curvature form of the area density is an identity") {
  const Grid2<double> g = make_grid(-0.5, 0.5, -0.5, 0.5, 17, 17);
  const Array2<double> u =
      refs::sample(g, [](double x, double y) { return x * x + 0.3 * x * y + y * y; });
  const AffineIdentityReport<double> rep = affine_identity_defect(g, u);
  CHECK(rep.sup_defect <= 1e-12);
  CHECK(rep.region.i0 == 1);
  CHECK(rep.region.i1 == 15);

  const Array2<double> saddle =
      refs::sample(g, [](double x, double y) { return x * x - 3.0 * y * y; });
  try {
    affine_identity_defect(g, saddle);
    FAIL("expected CheckError");
  } catch (const CheckError &e) {
    CHECK(contains(e.what(), "not positive definite"));
  }
}

TEST_CASE("area-preserving maps leave the hessian determinant alone") {
  const Grid2<double> g = make_grid(-0.5, 0.5, -0.5, 0.5, 17, 17);
  const auto quad = [](double x, double y) { return 0.5 * (x * x + y * y); };

  const std::array<double, 4> L{1.0, 1.0, 0.0, 1.0};  // det L = 1
  const Array2<double> v = unimodular_pullback_values(g, L, quad);
  const HessianFields<double> hv = fd_hessian(g, v);
  const HessianFields<double> hu = fd_hessian(g, refs::sample(g, quad));

  // Pullback of |x|^2/2 through this shear is ((x1+x2)^2 + x2^2)/2.
  CHECK(hv.h11(8, 8) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hv.h12(8, 8) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hv.h22(8, 8) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(linf(Array2<double>(hv.det - 1.0)) <= 1e-11);
  CHECK(linf(Array2<double>(hu.det - 1.0)) <= 1e-11);
}
