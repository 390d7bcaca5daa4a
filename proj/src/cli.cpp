#include "joyce/cli.hpp"

#include "joyce/affine.hpp"
#include "joyce/construct.hpp"
#include "joyce/inverse.hpp"
#include "joyce/io.hpp"
#include "joyce/potential.hpp"
#include "joyce/seeds.hpp"
#include "joyce/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

namespace joyce::cli {

namespace {

using io::RunConfig;

struct Flags {
  std::string config, potential, mode, seed1, seed2, domain, grid, base, xbox, xgrid, format,
      surface, refine;
  std::vector<std::string> tols;
  std::string in, out_path;
  bool force = false;
};

void add_common(CLI::App *sub, Flags &f) {
  sub->add_option("--config", f.config, "configuration file (JSON or key=value lines)");
  sub->add_option("--potential", f.potential, "weight spec: logdet | affine | power:<a> | file:<path>");
  sub->add_option("--mode", f.mode, "closed | quadrature");
  sub->add_option("--seed1", f.seed1, "first seed spec");
  sub->add_option("--seed2", f.seed2, "second seed spec");
  sub->add_option("--domain", f.domain, "H0:H1,r0:r1");
  sub->add_option("--grid", f.grid, "NxM nodes");
  sub->add_option("--refine", f.refine, "halve the mesh this many times");
  sub->add_option("--base", f.base, "i,j base node (default: center)");
  sub->add_option("--xbox", f.xbox, "target box a:b,c:d in image coordinates");
  sub->add_option("--xgrid", f.xgrid, "target grid NxM");
  sub->add_option("--format", f.format, "json | csv | obj | svg");
  sub->add_option("--surface", f.surface, "harmonic pair name1,name2");
  sub->add_option("--tol", f.tols, "tolerance override name=value")->take_all();
  sub->add_option("--out", f.out_path, "output file (default: stdout)");
  sub->add_flag("--force", f.force, "proceed despite hash or spec mismatches");
}

RunConfig build_config(const Flags &f, CLI::App *sub) {
  RunConfig c = f.config.empty() ? RunConfig{} : io::load_config_file(f.config);
  c.command = sub->get_name();
  if (sub->count("--potential")) io::apply_kv(c, "potential", f.potential);
  if (sub->count("--mode")) io::apply_kv(c, "mode", f.mode);
  if (sub->count("--seed1")) io::apply_kv(c, "seed1", f.seed1);
  if (sub->count("--seed2")) io::apply_kv(c, "seed2", f.seed2);
  if (sub->count("--domain")) io::apply_kv(c, "domain", f.domain);
  if (sub->count("--grid")) io::apply_kv(c, "grid", f.grid);
  if (sub->count("--refine")) io::apply_kv(c, "refine", f.refine);
  if (sub->count("--base")) io::apply_kv(c, "base", f.base);
  if (sub->count("--xbox")) io::apply_kv(c, "xbox", f.xbox);
  if (sub->count("--xgrid")) io::apply_kv(c, "xgrid", f.xgrid);
  if (sub->count("--format")) io::apply_kv(c, "format", f.format);
  if (sub->count("--surface")) io::apply_kv(c, "surface", f.surface);
  for (const std::string &t : f.tols) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("--tol expects name=value, got '" + t + "'");
    io::apply_kv(c, "tol." + t.substr(0, eq), t.substr(eq + 1));
  }
  return c;
}

JoyceData<double> joyce_data(const RunConfig &c) {
  const Potential<double> pot = parse_potential<double>(c.potential);
  return derive_joyce_data(pot, c.mode == "quadrature" ? JoyceMode::Quadrature
                                                       : JoyceMode::ClosedForm);
}

void emit(const RunConfig &, const std::string &text, const std::string &out_path,
          std::ostream &out) {
  if (out_path.empty())
    out << text;
  else
    io::write_text_atomic(out_path, text);
}

struct CheckLine {
  std::string name;
  double value;
  double tol;
  bool passed;
  std::string note;
};

class Report {
 public:
  Report(std::string command, const RunConfig &c) : command_(std::move(command)), config_(c) {}

  void add(const std::string &name, double value, double tol, bool passed,
           const std::string &note = {}) {
    checks_.push_back({name, value, tol, passed, note});
  }
  void add_leq(const std::string &name, double value, double tol, const std::string &note = {}) {
    add(name, value, tol, value <= tol, note);
  }
  bool all_passed() const {
    for (const auto &c : checks_)
      if (!c.passed) return false;
    return true;
  }
  void print(std::ostream &os) const {
    for (const auto &c : checks_) {
      os << "  [" << (c.passed ? "ok" : "FAIL") << "] " << c.name << " = " << io::fmt_g17(c.value)
         << " (tol " << io::fmt_g17(c.tol) << ")";
      if (!c.note.empty()) os << "  " << c.note;
      os << "\n";
    }
  }
  io::OrderedJson json() const {
    io::OrderedJson j;
    j["schema"] = "report/1";
    j["command"] = command_;
    j["config_hash"] = io::config_hash(config_);
    j["config"] = io::config_json(config_);
    io::OrderedJson arr = io::OrderedJson::array();
    for (const auto &c : checks_) {
      io::OrderedJson e;
      e["name"] = c.name;
      e["value"] = c.value;
      e["tolerance"] = c.tol;
      e["passed"] = c.passed;
      if (!c.note.empty()) e["note"] = c.note;
      arr.push_back(e);
    }
    j["checks"] = arr;
    j["passed"] = all_passed();
    return j;
  }

  io::OrderedJson extra;  // optional additional payload, e.g. recovered fields

 private:
  std::string command_;
  RunConfig config_;
  std::vector<CheckLine> checks_;
};

int finish_report(Report &rep, const RunConfig &, const std::string &out_path, std::ostream &out) {
  rep.print(out);
  io::OrderedJson j = rep.json();
  if (!rep.extra.is_null()) j["fields"] = rep.extra;
  if (!out_path.empty()) io::write_text_atomic(out_path, io::dump_json(j));
  if (!rep.all_passed()) {
    out << "result: FAIL\n";
    return 1;
  }
  out << "result: ok\n";
  return 0;
}

// ----------------------------------------------------------------------------

int cmd_seeds(const RunConfig &c, const Flags &f, std::ostream &out) {
  const JoyceData<double> jd = joyce_data(c);
  const Grid2<double> g = c.grid();
  const double tol = io::tolerance(c, "linear_residual");
  Report rep("seeds", c);
  const std::array<std::pair<const char *, std::string>, 2> pair = {
      {{"seed1", c.seed1}, {"seed2", c.seed2}}};
  for (const auto &[label, spec] : pair) {
    const ScalarField<double> xi = make_seed<double>(spec, jd, g);
    const ResidualField<double> res = linear_residual(xi, jd);
    rep.add_leq(std::string(label) + "_linear_residual_linf", res.linf_norm, tol, "'" + spec + "'");
    out << label << " '" << spec << "': linear residual linf " << io::fmt_g17(res.linf_norm)
        << ", l2 " << io::fmt_g17(res.l2_norm) << "\n";
  }
  return finish_report(rep, c, f.out_path, out);
}

int cmd_construct(const RunConfig &c, const Flags &f, std::ostream &out) {
  const JoyceData<double> jd = joyce_data(c);
  const Grid2<double> g = c.grid();
  ChartOptions<double> opt;
  opt.base_i = c.base_i;
  opt.base_j = c.base_j;
  opt.closedness_tol = io::tolerance(c, "closedness");
  opt.nondeg_rel_tol = io::tolerance(c, "nondeg");
  const Chart<double> ch = assemble_chart(make_seed<double>(c.seed1, jd, g),
                                          make_seed<double>(c.seed2, jd, g), jd, opt);

  out << "chart on " << g.nH << "x" << g.nr << " grid, nondegenerate rect " << ch.rect.rows()
      << "x" << ch.rect.cols() << "\n";
  Report rep("construct", c);
  const double pd_tol = io::tolerance(c, "path_disagreement");
  const double uscale = 1 + linf(ch.u.values);
  rep.add_leq("path_disagreement_x1", ch.path_disagreement_x1, pd_tol * uscale);
  rep.add_leq("path_disagreement_x2", ch.path_disagreement_x2, pd_tol * uscale);
  rep.add_leq("path_disagreement_u", ch.path_disagreement_u, pd_tol * uscale);
  const double id_tol = io::tolerance(c, "identity");
  rep.add_leq("identity_detA_vs_p2detB", ch.identities.detA_vs_p2detB, id_tol);
  rep.add_leq("identity_J_times_p2", ch.identities.J_times_p2, id_tol);
  rep.add_leq("identity_isothermal", ch.identities.isothermal, id_tol * (1 + linf(ch.detB)));
  rep.add_leq("identity_hessian_symmetry", ch.identities.hessian_symmetry, id_tol);
  rep.print(out);
  if (!rep.all_passed()) {
    out << "result: FAIL\n";
    return 1;
  }

  std::string text;
  if (c.format == "json") {
    text = io::chart_json(ch, c);
  } else if (c.format == "csv") {
    PhysBox<double> box;
    if (c.has_xbox)
      box = {c.xb[0], c.xb[1], c.xb[2], c.xb[3]};
    else
      box = suggest_xbox(ch);
    const XGridSolution<double> xs = resample_to_xgrid(ch, jd, box, c.n1, c.n2);
    text = io::csv_table(xs.grid, xs.u, io::config_hash(c));
  } else if (c.format == "obj") {
    text = io::obj_mesh(ch.x1.values, ch.x2.values, ch.u.values, ch.rect, io::config_hash(c));
  } else {
    text = io::svg_contours(ch.grid, ch.u.values, io::config_hash(c));
  }
  emit(c, text, f.out_path, out);
  if (!f.out_path.empty()) out << "wrote " << f.out_path << "\n";
  out << "result: ok\n";
  return 0;
}

int cmd_verify(const RunConfig &cli_cfg, const Flags &f, CLI::App *sub, std::ostream &out) {
  if (f.in.empty()) throw ConfigError("verify needs --in <chart.json|field.json|table.csv>");
  const io::LoadedField in = io::load_field_file(f.in);

  RunConfig c = cli_cfg;
  Grid2<double> xgrid;
  Array2<double> u;
  bool have_seed_values = false;
  Array2<double> xi1, xi2, Jlaw;

  if (in.schema == "chart/1") {
    // The file's own configuration drives reconstruction; command-line
    // potential may only differ under --force.
    if (sub->count("--potential") && in.potential != c.potential && !f.force)
      throw ConfigError("input was built for potential '" + in.potential +
                        "' but --potential says '" + c.potential + "' (use --force to override)");
    RunConfig fc = in.config;
    const std::string expect = io::config_hash(fc);
    if (!in.hash.empty() && in.hash != expect && !f.force)
      throw ConfigError("config hash mismatch: file says " + in.hash + ", recomputed " + expect +
                        " (file edited? use --force)");
    if (!(sub->count("--potential") && f.force)) c.potential = fc.potential;
    c.mode = fc.mode;
    c.seed1 = fc.seed1;
    c.seed2 = fc.seed2;
    c.H0 = fc.H0;
    c.H1 = fc.H1;
    c.r0 = fc.r0;
    c.r1 = fc.r1;
    c.nH = fc.nH;
    c.nr = fc.nr;
    c.refine = fc.refine;
    c.base_i = fc.base_i;
    c.base_j = fc.base_j;
    if (!c.has_xbox && fc.has_xbox) {
      c.has_xbox = true;
      for (int k = 0; k < 4; ++k) c.xb[k] = fc.xb[k];
    }

    const JoyceData<double> jd = joyce_data(c);
    const Grid2<double> g = c.grid();
    ChartOptions<double> opt;
    opt.base_i = c.base_i;
    opt.base_j = c.base_j;
    opt.closedness_tol = io::tolerance(c, "closedness");
    opt.nondeg_rel_tol = io::tolerance(c, "nondeg");
    const Chart<double> ch = assemble_chart(make_seed<double>(c.seed1, jd, g),
                                            make_seed<double>(c.seed2, jd, g), jd, opt);
    if (ch.u.values.rows() != in.values.rows() || ch.u.values.cols() != in.values.cols()) {
      if (!f.force)
        throw ConfigError("stored chart dimensions do not match its configuration; "
                          "rebuild it or use --force");
    } else {
      const double integrity = linf(Array2<double>(ch.u.values - in.values));
      if (integrity > 1e-9 * (1 + linf(ch.u.values)) && !f.force)
        throw ConfigError("stored chart does not match its configuration (sup difference " +
                          io::fmt_g17(integrity) + "); rebuild it or use --force");
    }

    PhysBox<double> box;
    if (c.has_xbox)
      box = {c.xb[0], c.xb[1], c.xb[2], c.xb[3]};
    else
      box = suggest_xbox(ch);
    const XGridSolution<double> xs = resample_to_xgrid(ch, jd, box, c.n1, c.n2);
    xgrid = xs.grid;
    u = xs.u;
    xi1 = xs.xi1;
    xi2 = xs.xi2;
    Jlaw = xs.J;
    have_seed_values = true;
    out << "verifying chart '" << c.seed1 << "' + '" << c.seed2 << "', potential " << c.potential
        << ", resampled to " << c.n1 << "x" << c.n2 << "\n";
  } else {
    if (!in.potential.empty() && sub->count("--potential") && in.potential != c.potential &&
        !f.force)
      throw ConfigError("input was built for potential '" + in.potential +
                        "' but --potential says '" + c.potential + "' (use --force to override)");
    if (!in.potential.empty() && !sub->count("--potential")) c.potential = in.potential;
    xgrid = in.grid;
    u = in.values;
    out << "verifying solution values on " << xgrid.nH << "x" << xgrid.nr << " grid, potential "
        << c.potential << "\n";
  }

  const Potential<double> pot = parse_potential<double>(c.potential);
  Report rep("verify", c);

  if (have_seed_values) {
    // Resampled chart values are C^1 across source cells, so a double
    // difference of u measures interpolation roughness, not the equation.
    // Differentiate the carried gradient pair once instead: duality at
    // first order, the weight law J = det Hess u at second order.
    XGridSolution<double> xs;
    xs.grid = xgrid;
    xs.u = u;
    xs.xi1 = xi1;
    xs.xi2 = xi2;
    const GradientCheck<double> gc = gradient_consistency(xs);
    const double gtol = io::tolerance(c, "gradient");
    rep.add_leq("gradient_vs_seed1", gc.sup_defect_1, gtol);
    rep.add_leq("gradient_vs_seed2", gc.sup_defect_2, gtol);

    const double h1 = xgrid.hH(), h2 = xgrid.hr();
    double dlaw = 0, dsym = 0;
    double mdet = std::numeric_limits<double>::max(), mdiag = mdet;
    for (Index i = 1; i + 1 < xgrid.nH; ++i)
      for (Index j = 1; j + 1 < xgrid.nr; ++j) {
        const double a11 = (xi1(i + 1, j) - xi1(i - 1, j)) / (2 * h1);
        const double a12 = (xi1(i, j + 1) - xi1(i, j - 1)) / (2 * h2);
        const double a21 = (xi2(i + 1, j) - xi2(i - 1, j)) / (2 * h1);
        const double a22 = (xi2(i, j + 1) - xi2(i, j - 1)) / (2 * h2);
        const double off = (a12 + a21) / 2;
        const double det = a11 * a22 - off * off;
        dlaw = std::max(dlaw, std::abs(det - Jlaw(i, j)));
        dsym = std::max(dsym, std::abs(a12 - a21));
        mdet = std::min(mdet, det);
        mdiag = std::min(mdiag, a11);
      }
    const double stol = io::tolerance(c, "el_residual");
    rep.add_leq("hessian_det_vs_weight_law", dlaw, stol);
    rep.add_leq("hessian_mixed_symmetry", dsym, stol);
    rep.add("hessian_min_det", mdet, 0.0, mdet > 0 && mdiag > 0, "positive definite");
  } else {
    const ELResult<double> el = euler_lagrange_residual(xgrid, u, pot);
    rep.add_leq("el_residual_linf", el.residual.linf_norm, io::tolerance(c, "el_residual"));
    const FluxResult<double> flux = flux_divergence_residual(xgrid, u, pot);
    if (el.residual.l2_norm > 1e-14) {
      const double ratio = residual_ratio(xgrid, el, flux);
      rep.add("flux_vs_direct_ratio", ratio, 2.0, ratio >= 0.5 && ratio <= 2.0,
              "band [0.5, 2]");
    }
  }
  return finish_report(rep, c, f.out_path, out);
}

int cmd_invert(const RunConfig &cli_cfg, const Flags &f, CLI::App *sub, std::ostream &out) {
  if (f.in.empty()) throw ConfigError("invert needs --in <field.json|table.csv>");
  const io::LoadedField in = io::load_field_file(f.in);
  if (in.schema == "chart/1")
    throw ConfigError("invert expects a solution on an image grid (field/1 or csv), not a chart");
  RunConfig c = cli_cfg;
  if (!in.potential.empty() && sub->count("--potential") && in.potential != c.potential && !f.force)
    throw ConfigError("input was built for potential '" + in.potential +
                      "' but --potential says '" + c.potential + "' (use --force to override)");
  if (!in.potential.empty() && !sub->count("--potential")) c.potential = in.potential;

  const JoyceData<double> jd = joyce_data(c);
  ConjugateOptions<double> copt;
  copt.div_rel_tol = io::tolerance(c, "divergence_gate");
  const RecoveredSeeds<double> rec = recover_seeds(in.grid, in.values, jd, copt);

  Report rep("invert", c);
  rep.add_leq("conjugate_divergence_linf", rec.divergence.linf_norm,
              io::tolerance(c, "divergence_gate") * 10, "already gated inside the recovery");
  rep.add_leq("conjugate_path_disagreement", rec.path_disagreement,
              io::tolerance(c, "conjugate_disagreement") * (1 + linf(rec.H, rec.region_H)));

  const Mask2 om = ordinary_point_mask(in.grid, rec.J);
  Index n_ord = 0;
  for (Index i = rec.region_H.i0; i <= rec.region_H.i1; ++i)
    for (Index j = rec.region_H.j0; j <= rec.region_H.j1; ++j)
      if (om(i, j)) ++n_ord;
  const double frac = double(n_ord) / double(rec.region_H.area());
  out << "ordinary points: " << io::fmt_g17(100 * frac) << "% of recovery region\n";

  io::OrderedJson fields;
  fields["J"] = io::array_json(rec.J);
  fields["r"] = io::array_json(rec.r);
  fields["H"] = io::array_json(rec.H);
  fields["xi1"] = io::array_json(rec.xi1);
  fields["xi2"] = io::array_json(rec.xi2);
  fields["ordinary_fraction"] = frac;
  rep.extra = fields;
  return finish_report(rep, c, f.out_path, out);
}

int cmd_affine(const RunConfig &cli_cfg, const Flags &f, CLI::App *sub, std::ostream &out) {
  RunConfig c = cli_cfg;
  if (!sub->count("--potential") && c.potential == "logdet") c.potential = "affine";
  const JoyceData<double> jd = joyce_data(c);
  const Grid2<double> g = c.grid();

  const ScalarField<double> F1 = make_harmonic<double>(c.surface1, g);
  const ScalarField<double> F2 = make_harmonic<double>(c.surface2, g);
  const ScalarField<double> F3 = make_harmonic<double>("l2", g);
  const VectorSurface<double> A = chern_terng_integrate<double>({F1, F2, F3});

  const ScalarField<double> xi1 = lift_harmonic_to_seed(F1, jd, A.base_i, A.base_j);
  const ScalarField<double> xi2 = lift_harmonic_to_seed(F2, jd, A.base_i, A.base_j);
  const VectorSurface<double> B = surface_from_seeds(xi1, xi2, jd, A.base_i, A.base_j);

  const SurfaceMatch<double> match = surface_route_equivalence(A, B);
  double zscale = 1;
  for (const auto &Z : A.Z) zscale = std::max(zscale, linf(Z.values));

  Report rep("affine", c);
  rep.add_leq("route_equivalence_sup", match.sup_after,
              io::tolerance(c, "equivalence") * zscale,
              "surfaces (" + c.surface1 + ", " + c.surface2 + ", l2)");
  for (int k = 0; k < 3; ++k)
    rep.add_leq("path_disagreement_Z" + std::to_string(k + 1), A.path_disagreement[size_t(k)],
                io::tolerance(c, "path_disagreement") * zscale);
  if (A.degenerate) out << "note: surface has zero area\n";

  if (c.format == "obj") {
    const IndexRect full{0, g.nH - 1, 0, g.nr - 1};
    emit(c, io::obj_mesh(A.Z[0].values, A.Z[1].values, A.Z[2].values, full, io::config_hash(c)),
         f.out_path, out);
    rep.print(out);
    return rep.all_passed() ? 0 : 1;
  }
  if (c.format == "svg") {
    emit(c, io::svg_contours(g, A.Z[2].values, io::config_hash(c)), f.out_path, out);
    rep.print(out);
    return rep.all_passed() ? 0 : 1;
  }
  io::OrderedJson fields;
  fields["Z1"] = io::array_json(A.Z[0].values);
  fields["Z2"] = io::array_json(A.Z[1].values);
  fields["Z3"] = io::array_json(A.Z[2].values);
  rep.extra = fields;
  return finish_report(rep, c, f.out_path, out);
}

int cmd_dual(const RunConfig &cli_cfg, const Flags &f, std::ostream &out) {
  RunConfig c = cli_cfg;
  const Potential<double> pot = parse_potential<double>(c.potential);
  const Potential<double> dual = dual_potential(pot);
  const Potential<double> back = dual_potential(dual);

  // Involution on a fixed sample range.
  double defect = 0;
  for (int k = 0; k <= 40; ++k) {
    const double t = std::exp(-2.0 + 4.0 * k / 40);
    defect = std::max(defect, std::abs(back.psi(t) - pot.psi(t)) / (1 + std::abs(pot.psi(t))));
  }
  Report rep("dual", c);
  rep.add_leq("dual_involution_defect", defect, 1e-12);

  const JoyceData<double> jd = joyce_data(c);
  const JoyceData<double> djd = dual_joyce(jd);
  out << "weight interval: (" << io::fmt_g17(jd.r_lo) << ", " << io::fmt_g17(jd.r_hi) << ") -> ("
      << io::fmt_g17(djd.r_lo) << ", " << io::fmt_g17(djd.r_hi) << ")\n";
  // p*(r) p(-r) = 1 on a sample of the transformed interval.
  double pd = 0;
  const double lo = std::max(djd.r_lo, -10.0), hi = std::min(djd.r_hi, 10.0);
  for (int k = 1; k < 40; ++k) {
    const double r = lo + (hi - lo) * k / 40;
    const auto ds = eval_joyce(djd, r);
    const auto s = eval_joyce(jd, -r);
    pd = std::max(pd, std::abs(ds.p * s.p - 1));
  }
  rep.add_leq("dual_weight_product_defect", pd, 1e-10);
  return finish_report(rep, c, f.out_path, out);
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"pair-of-solutions construction for fourth-order Hessian equations"};
  app.require_subcommand(1);
  Flags f;
  CLI::App *seeds = app.add_subcommand("seeds", "build a seed pair and report residuals");
  CLI::App *construct = app.add_subcommand("construct", "assemble a chart from a seed pair");
  CLI::App *verify = app.add_subcommand("verify", "re-check a chart or solution file");
  CLI::App *invert = app.add_subcommand("invert", "recover generating data from a solution");
  CLI::App *affine = app.add_subcommand("affine", "surface routes for the quartic weight");
  CLI::App *dual = app.add_subcommand("dual", "dual potential diagnostics");
  for (CLI::App *sub : {seeds, construct, verify, invert, affine, dual}) add_common(sub, f);
  for (CLI::App *sub : {verify, invert})
    sub->add_option("--in", f.in, "input file (chart/field JSON or CSV)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App *sub = app.get_subcommands().at(0);
    const RunConfig c = build_config(f, sub);
    if (sub == seeds) return cmd_seeds(c, f, out);
    if (sub == construct) return cmd_construct(c, f, out);
    if (sub == verify) return cmd_verify(c, f, sub, out);
    if (sub == invert) return cmd_invert(c, f, sub, out);
    if (sub == affine) return cmd_affine(c, f, sub, out);
    return cmd_dual(c, f, out);
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const CheckError &e) {
    err << "check failed: " << e.what() << "\n";
    return 1;
  } catch (const NumericError &e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception &e) {
    err << "unexpected failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace joyce::cli
