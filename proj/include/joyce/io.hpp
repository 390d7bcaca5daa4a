// Serialization: run configuration, JSON schemas chart/1, field/1 and
// report/1, CSV tables, OBJ meshes and SVG contour plots. Every file
// carries the FNV-1a hash of the canonical configuration text so outputs
// can be traced to the run that made them. Floating-point numbers are
// written with 17 significant digits and round-trip exactly.

#pragma once

#include "joyce/construct.hpp"
#include "joyce/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace joyce::io {

using OrderedJson = nlohmann::ordered_json;

struct RunConfig {
  std::string command;
  std::string potential = "logdet";
  std::string mode = "closed";  // closed | quadrature
  std::string seed1 = "H";
  std::string seed2 = "expr:radial";
  double H0 = 0, H1 = 1, r0 = 1, r1 = 2;
  Index nH = 33, nr = 33;
  int refine = 0;
  Index base_i = -1, base_j = -1;
  bool has_xbox = false;
  double xb[4] = {0, 0, 0, 0};
  Index n1 = 65, n2 = 65;
  std::string format = "json";
  std::map<std::string, double> tol;
  std::string surface1 = "l1", surface2 = "l1l2";

  Grid2<double> grid() const;
};

// Canonical key=value rendering (sorted keys, 17-digit numbers); the hash
// is FNV-1a 64 over exactly this text.
std::string canonical_config_text(const RunConfig &c);
std::uint64_t fnv1a64(const std::string &text);
std::string config_hash(const RunConfig &c);

// Key=value application shared by config files and command-line flags.
void apply_kv(RunConfig &c, const std::string &key, const std::string &value);
RunConfig load_config_file(const std::string &path);

// Default tolerances; overridden per run by RunConfig::tol.
const std::map<std::string, double> &default_tolerances();
double tolerance(const RunConfig &c, const std::string &name);

std::string fmt_g17(double v);
// nlohmann tree -> text with %.17g floats and stable key order.
std::string dump_json(const OrderedJson &j, int indent = 2);

void write_text_atomic(const std::string &path, const std::string &text);
std::string read_text(const std::string &path);

OrderedJson grid_json(const Grid2<double> &g);
OrderedJson config_json(const RunConfig &c);
OrderedJson array_json(const Array2<double> &a);  // row-major, r fastest
Array2<double> array_from_json(const OrderedJson &j, Index nH, Index nr);

std::string chart_json(const Chart<double> &ch, const RunConfig &c);
std::string field_json(const std::string &name, const Grid2<double> &g, const Array2<double> &v,
                       const RunConfig &c);

struct LoadedField {
  std::string schema;  // "chart/1" or "field/1"
  std::string name;
  std::string potential;
  std::string hash;
  Grid2<double> grid;
  Array2<double> values;       // u for chart/1
  bool has_config = false;
  RunConfig config;            // present for chart/1
};

LoadedField load_field_file(const std::string &path);  // JSON schemas or CSV

std::string csv_table(const Grid2<double> &g, const Array2<double> &u, const std::string &hash);
struct CsvField {
  Grid2<double> grid;
  Array2<double> values;
  std::string hash;  // empty when the file carried none
};
CsvField load_csv_field(const std::string &path);

// Quad mesh over an index rectangle of a chart-like coordinate triple.
std::string obj_mesh(const Array2<double> &X, const Array2<double> &Y, const Array2<double> &Z,
                     const IndexRect &rect, const std::string &hash);

// Marching-squares contour plot, 15 levels, fixed 800x800 viewport.
std::string svg_contours(const Grid2<double> &g, const Array2<double> &v, const std::string &hash);

}  // namespace joyce::io
