#include "joyce/construct.hpp"

#include "support/closed_forms.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>

using namespace joyce;

namespace {

using Fn = std::function<double(double, double)>;

// Hand-built 1-form a dH + b dr with optional analytic first partials.
OneForm<double> form_from(const Grid2<double> &g, Fn a, Fn b, Fn aH, Fn ar, Fn bH, Fn br) {
  OneForm<double> w;
  w.grid = g;
  w.a = refs::sample(g, a);
  w.b = refs::sample(g, b);
  FormJet<double> fj;
  fj.aH = refs::sample(g, aH);
  fj.ar = refs::sample(g, ar);
  fj.bH = refs::sample(g, bH);
  fj.br = refs::sample(g, br);
  w.jet = std::move(fj);
  return w;
}

}  // namespace

TEST_CASE("closedness residual: exact from jets, stencil-level without") {
  // d(sin H sin 2r): closed, but the two FD truncation errors differ, so the
  // jet-free residual is visibly nonzero.
  const Grid2<double> g = make_grid(0.0, 1.0, 0.0, 1.0, 33, 33);
  OneForm<double> w = form_from(
      g, [](double H, double r) { return std::cos(H) * std::sin(2 * r); },
      [](double H, double r) { return 2 * std::sin(H) * std::cos(2 * r); },
      [](double H, double r) { return -std::sin(H) * std::sin(2 * r); },
      [](double H, double r) { return 2 * std::cos(H) * std::cos(2 * r); },
      [](double H, double r) { return 2 * std::cos(H) * std::cos(2 * r); },
      [](double H, double r) { return -4 * std::sin(H) * std::sin(2 * r); });

  const ResidualField<double> exact = closedness_residual(w);
  CHECK(exact.linf_norm == 0.0);
  CHECK(exact.region.i0 == 0);

  w.jet.reset();
  const ResidualField<double> fd = closedness_residual(w);
  CHECK(fd.region.i0 == 1);  // one-node interior
  CHECK(fd.linf_norm > 1e-5);
  CHECK(fd.linf_norm < 1e-2);
}

TEST_CASE("form from a non-solution seed has residual -2p") {
  // xi2 = H^2 gives b = -2pH, a = 0, so d_H b - d_r a = -2p(r) at every node.
  const JoyceData<double> jd = derive_joyce_data(logdet_potential<double>());
  const Grid2<double> g = make_grid(0.0, 1.0, 1.0, 2.0, 9, 9);
  const ScalarField<double> xi = make_seed<double>("expr:H2", jd, g);
  std::vector<double> p(size_t(g.nr)), p1(size_t(g.nr));
  for (Index j = 0; j < g.nr; ++j) {
    const auto s = eval_joyce(jd, g.r(j));
    p[size_t(j)] = s.p;
    p1[size_t(j)] = s.p1;
  }
  const OneForm<double> e1 = detail::seed_form(g, *xi.jet, p, p1, 1.0, "dx1");
  const ResidualField<double> res = closedness_residual(e1);
  CHECK(res.values(0, 0) == -2 * p[0]);
  CHECK(res.values(5, 7) == -2 * p[7]);
  CHECK(res.linf_norm == 2 * p[8]);
}

TEST_CASE("path integration is exact on forms with quadratic components") {
  // dF for F = H^3 + H^2 r + r^3/3; the endpoint correction makes each
  // trapezoid step exact through cubic primitives.
  const Grid2<double> g = make_grid(0.0, 1.0, 1.0, 2.0, 17, 17);
  const OneForm<double> w = form_from(
      g, [](double H, double r) { return 3 * H * H + 2 * H * r; },
      [](double H, double r) { return H * H + r * r; },
      [](double H, double r) { return 6 * H + 2 * r; }, [](double H, double) { return 2 * H; },
      [](double H, double) { return 2 * H; }, [](double, double r) { return 2 * r; });
  const Index bi = 3, bj = 5;
  const PathIntegral<double> pi = integrate_form(w, bi, bj);
  const Array2<double> ref = refs::gauge_zero(
      g, [](double H, double r) { return H * H * H + H * H * r + r * r * r / 3; }, bi, bj);
  CHECK(linf(Array2<double>(pi.values - ref)) <= 5e-13);
  CHECK(pi.disagreement <= 1e-13);

  CHECK_THROWS_AS(integrate_form(w, Index(-1), Index(0)), ConfigError);
  CHECK_THROWS_AS(integrate_form(w, Index(0), Index(17)), ConfigError);
}

TEST_CASE("endpoint correction beats the plain trapezoid") {
  const Grid2<double> g = make_grid(0.0, 1.0, 0.0, 1.0, 33, 33);
  auto F = [](double H, double r) { return std::sin(H) * std::sin(2 * r); };
  OneForm<double> w = form_from(
      g, [](double H, double r) { return std::cos(H) * std::sin(2 * r); },
      [](double H, double r) { return 2 * std::sin(H) * std::cos(2 * r); },
      [](double H, double r) { return -std::sin(H) * std::sin(2 * r); },
      [](double H, double r) { return 2 * std::cos(H) * std::cos(2 * r); },
      [](double H, double r) { return 2 * std::cos(H) * std::cos(2 * r); },
      [](double H, double r) { return -4 * std::sin(H) * std::sin(2 * r); });
  const Index bi = 16, bj = 16;
  const Array2<double> ref = refs::gauge_zero(g, F, bi, bj);

  const double e_corr = linf(Array2<double>(integrate_form(w, bi, bj).values - ref));
  w.jet.reset();
  const double e_plain = linf(Array2<double>(integrate_form(w, bi, bj).values - ref));
  CHECK(e_corr < 1e-6);
  CHECK(e_plain > 1e-5);
  CHECK(e_plain > 50 * e_corr);
}

TEST_CASE("nondegeneracy mask keeps the positive side, relative threshold") {
  Array2<double> detB(2, 3);
  detB << 1.0, 1e-5, -0.5, 1e-12, 0.0, 2e-10;
  const Mask2 m = nondegeneracy_mask(detB);  // default 1e-10 of sup = 1
  CHECK(m(0, 0));
  CHECK(m(0, 1));
  CHECK(!m(0, 2));
  CHECK(!m(1, 0));
  CHECK(!m(1, 1));
  CHECK(m(1, 2));
  const Mask2 loose = nondegeneracy_mask(detB, 1e-14);
  CHECK(loose(1, 0));
  CHECK(!loose(1, 1));
}

TEST_CASE("largest true rectangle through an anchor") {
  Mask2 all = Mask2::Constant(6, 6, true);
  IndexRect r = largest_true_rect(all, 2, 3);
  CHECK(r.i0 == 0);
  CHECK(r.i1 == 5);
  CHECK(r.j0 == 0);
  CHECK(r.j1 == 5);

  // carve out rows 0..2 x cols 4..5: best through (4,1) is all rows x cols 0..3
  Mask2 ell = all;
  ell.block(0, 4, 3, 2).setConstant(false);
  r = largest_true_rect(ell, 4, 1);
  CHECK(r.i0 == 0);
  CHECK(r.i1 == 5);
  CHECK(r.j0 == 0);
  CHECK(r.j1 == 3);
  CHECK(r.area() == 24);

  Mask2 hole = all;
  hole(2, 2) = false;
  r = largest_true_rect(hole, 2, 2);
  CHECK(r.area() == 1);
  CHECK(r.i0 == 2);
  CHECK(r.j0 == 2);
}

TEST_CASE("worked chart: weight r with seeds (H, logr)") {
  const JoyceData<double> jd = derive_joyce_data(logdet_potential<double>());
  const Grid2<double> g = make_grid(0.0, 1.0, 1.0, 2.0, 65, 65);
  const Chart<double> ch = assemble_chart("H", "logr", jd, g);
  CHECK(ch.base_i == 32);
  CHECK(ch.base_j == 32);

  CHECK(linf(Array2<double>(ch.x1.values - refs::gauge_zero(g, refs::logdet_x1, 32, 32))) <= 1e-13);
  CHECK(linf(Array2<double>(ch.x2.values - refs::gauge_zero(g, refs::logdet_x2, 32, 32))) <= 1e-13);
  CHECK(linf(Array2<double>(ch.u.values - refs::gauge_zero(g, refs::logdet_u_chart, 32, 32))) <=
        1e-9);

  CHECK(ch.path_disagreement_x1 <= 1e-12);
  CHECK(ch.path_disagreement_x2 <= 1e-12);
  CHECK(ch.path_disagreement_u <= 1e-12);

  for (Index j : {Index(0), Index(17), Index(64)}) {
    const double r = g.r(j);
    CHECK(ch.detB(9, j) == doctest::Approx(1 / r).epsilon(1e-14));
    CHECK(ch.J(9, j) == doctest::Approx(1 / (r * r)).epsilon(1e-13));
  }

  // full grid is nondegenerate
  CHECK(ch.rect.i0 == 0);
  CHECK(ch.rect.i1 == 64);
  CHECK(ch.rect.j0 == 0);
  CHECK(ch.rect.j1 == 64);

  CHECK(ch.identities.detA_vs_p2detB <= 1e-12);
  CHECK(ch.identities.J_times_p2 <= 1e-12);
  CHECK(ch.identities.isothermal <= 1e-12);
  CHECK(ch.identities.hessian_symmetry <= 1e-12);
  CHECK(ch.potential_spec == "logdet");
}

TEST_CASE("swapped seed order flips orientation and is refused with advice") {
  const JoyceData<double> jd = derive_joyce_data(logdet_potential<double>());
  const Grid2<double> g = make_grid(0.0, 1.0, 1.0, 2.0, 17, 17);
  try {
    assemble_chart("logr", "H", jd, g);
    FAIL("expected CheckError");
  } catch (const CheckError &e) {
    CHECK(std::string(e.what()).find("swap the seeds") != std::string::npos);
  }
}

TEST_CASE("closedness gate names the offending seed") {
  const JoyceData<double> jd = derive_joyce_data(logdet_potential<double>());
  const Grid2<double> g = make_grid(0.0, 1.0, 1.0, 2.0, 17, 17);
  try {
    assemble_chart("H", "expr:H2", jd, g);
    FAIL("expected CheckError");
  } catch (const CheckError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("expr:H2") != std::string::npos);
    CHECK(msg.find("does not solve") != std::string::npos);
  }
}

TEST_CASE("chart options: custom base and bad configurations") {
  const JoyceData<double> jd = derive_joyce_data(logdet_potential<double>());
  const Grid2<double> g = make_grid(0.0, 1.0, 1.0, 2.0, 65, 65);
  ChartOptions<double> opt;
  opt.base_i = 10;
  opt.base_j = 20;
  const Chart<double> ch = assemble_chart("H", "logr", jd, g, opt);
  CHECK(ch.u.values(10, 20) == 0.0);
  CHECK(ch.x1.values(10, 20) == 0.0);
  CHECK(linf(Array2<double>(ch.u.values - refs::gauge_zero(g, refs::logdet_u_chart, 10, 20))) <=
        1e-9);

  opt.base_i = 65;
  CHECK_THROWS_AS(assemble_chart("H", "logr", jd, g, opt), ConfigError);

  // seeds from different grids
  const ScalarField<double> a = make_seed<double>("H", jd, g);
  const ScalarField<double> b = make_seed<double>("logr", jd, make_grid(0.0, 1.0, 1.0, 2.0, 17, 17));
  CHECK_THROWS_AS(assemble_chart(a, b, jd), ConfigError);

  // grid outside the weight interval of the data actually used to assemble
  const JoyceData<double> wide = derive_joyce_data(power_potential<double>(0.5));
  const Grid2<double> gw = make_grid(0.0, 1.0, -1.0, 1.0, 9, 9);
  const ScalarField<double> w1 = make_seed<double>("H", wide, gw);
  const ScalarField<double> w2 = make_seed<double>("expr:negH", wide, gw);
  CHECK_THROWS_AS(assemble_chart(w1, w2, jd), ConfigError);
}

TEST_CASE("the same potential arises from both catalog pairs") {
  // Weight r^2: (H, -1/r) and (H/r, H) integrate to u-fields differing only
  // by the closed forms' own gauges; compare each to its reference.
  const JoyceData<double> jd = derive_joyce_data(power_potential<double>(0.25));
  {
    const Grid2<double> g = make_grid(0.0, 1.0, 1.0, 2.0, 65, 65);
    const Chart<double> ch = assemble_chart("H", "expr:radial", jd, g);
    CHECK(linf(Array2<double>(ch.u.values - refs::gauge_zero(g, refs::rsq_u_pair1, 32, 32))) <=
          1e-9);
    CHECK(linf(Array2<double>(ch.x2.values - refs::gauge_zero(g, refs::rsq_pair1_x2, 32, 32))) <=
          1e-9);
  }
  {
    // det B = H/r^2 needs H > 0 on the whole grid
    const Grid2<double> g = make_grid(0.6, 1.4, 1.1, 1.9, 65, 65);
    const Chart<double> ch = assemble_chart("expr:H_over_r", "H", jd, g);
    CHECK(linf(Array2<double>(ch.u.values - refs::gauge_zero(g, refs::rsq_u_pair2, 32, 32))) <=
          1e-9);
    CHECK(linf(Array2<double>(ch.x1.values - refs::gauge_zero(g, refs::rsq_pair2_x1, 32, 32))) <=
          1e-9);
    CHECK(linf(Array2<double>(ch.x2.values - refs::gauge_zero(g, refs::rsq_pair2_x2, 32, 32))) <=
          1e-9);
  }
}
