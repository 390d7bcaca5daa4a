#include "joyce/io.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace joyce::io {

Grid2<double> RunConfig::grid() const {
  Grid2<double> g = make_grid(H0, H1, r0, r1, nH, nr);
  if (refine < 0 || refine > 12) throw ConfigError("refine must be between 0 and 12");
  return refined(g, refine);
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string canonical_config_text(const RunConfig &c) {
  std::ostringstream os;
  if (c.base_i >= 0 || c.base_j >= 0)
    os << "base=" << c.base_i << "," << c.base_j << "\n";
  os << "command=" << c.command << "\n";
  os << "domain=" << fmt_g17(c.H0) << ":" << fmt_g17(c.H1) << "," << fmt_g17(c.r0) << ":"
     << fmt_g17(c.r1) << "\n";
  os << "format=" << c.format << "\n";
  os << "grid=" << c.nH << "x" << c.nr << "\n";
  os << "mode=" << c.mode << "\n";
  os << "potential=" << c.potential << "\n";
  os << "refine=" << c.refine << "\n";
  os << "seed1=" << c.seed1 << "\n";
  os << "seed2=" << c.seed2 << "\n";
  os << "surface=" << c.surface1 << "," << c.surface2 << "\n";
  for (const auto &[k, v] : c.tol) os << "tol." << k << "=" << fmt_g17(v) << "\n";
  if (c.has_xbox)
    os << "xbox=" << fmt_g17(c.xb[0]) << ":" << fmt_g17(c.xb[1]) << "," << fmt_g17(c.xb[2]) << ":"
       << fmt_g17(c.xb[3]) << "\n";
  os << "xgrid=" << c.n1 << "x" << c.n2 << "\n";
  return os.str();
}

std::uint64_t fnv1a64(const std::string &text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const RunConfig &c) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(canonical_config_text(c)));
  return buf;
}

namespace {

double parse_number(const std::string &s, const std::string &what) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw ConfigError(what + ": bad number '" + s + "'");
  }
}

long parse_int(const std::string &s, const std::string &what) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw ConfigError(what + ": bad integer '" + s + "'");
  }
}

void parse_pair_ranges(const std::string &s, double out[4], const std::string &what) {
  // "a:b,c:d"
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError(what + ": expected 'a:b,c:d', got '" + s + "'");
  const std::string first = s.substr(0, comma), second = s.substr(comma + 1);
  const auto c1 = first.find(':'), c2 = second.find(':');
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw ConfigError(what + ": expected 'a:b,c:d', got '" + s + "'");
  out[0] = parse_number(first.substr(0, c1), what);
  out[1] = parse_number(first.substr(c1 + 1), what);
  out[2] = parse_number(second.substr(0, c2), what);
  out[3] = parse_number(second.substr(c2 + 1), what);
}

void parse_grid_pair(const std::string &s, Index &n1, Index &n2, const std::string &what) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ConfigError(what + ": expected 'NxM', got '" + s + "'");
  n1 = parse_int(s.substr(0, x), what);
  n2 = parse_int(s.substr(x + 1), what);
}

}  // namespace

void apply_kv(RunConfig &c, const std::string &key, const std::string &value) {
  if (key == "potential") {
    c.potential = value;
  } else if (key == "mode") {
    if (value != "closed" && value != "quadrature")
      throw ConfigError("mode must be 'closed' or 'quadrature'");
    c.mode = value;
  } else if (key == "seed1") {
    c.seed1 = value;
  } else if (key == "seed2") {
    c.seed2 = value;
  } else if (key == "domain") {
    double d[4];
    parse_pair_ranges(value, d, "domain");
    c.H0 = d[0];
    c.H1 = d[1];
    c.r0 = d[2];
    c.r1 = d[3];
  } else if (key == "grid") {
    parse_grid_pair(value, c.nH, c.nr, "grid");
  } else if (key == "refine") {
    c.refine = int(parse_int(value, "refine"));
  } else if (key == "base") {
    const auto comma = value.find(',');
    if (comma == std::string::npos) throw ConfigError("base: expected 'i,j'");
    c.base_i = parse_int(value.substr(0, comma), "base");
    c.base_j = parse_int(value.substr(comma + 1), "base");
  } else if (key == "xbox") {
    parse_pair_ranges(value, c.xb, "xbox");
    c.has_xbox = true;
  } else if (key == "xgrid") {
    parse_grid_pair(value, c.n1, c.n2, "xgrid");
  } else if (key == "format") {
    if (value != "json" && value != "csv" && value != "obj" && value != "svg")
      throw ConfigError("format must be json, csv, obj or svg");
    c.format = value;
  } else if (key == "surface") {
    const auto comma = value.find(',');
    if (comma == std::string::npos) throw ConfigError("surface: expected 'name1,name2'");
    c.surface1 = value.substr(0, comma);
    c.surface2 = value.substr(comma + 1);
  } else if (key.rfind("tol.", 0) == 0) {
    const std::string name = key.substr(4);
    if (!default_tolerances().count(name)) throw ConfigError("unknown tolerance '" + name + "'");
    c.tol[name] = parse_number(value, "tol." + name);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

RunConfig load_config_file(const std::string &path) {
  const std::string text = read_text(path);
  RunConfig c;
  size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    OrderedJson j;
    try {
      j = OrderedJson::parse(text);
    } catch (const std::exception &e) {
      throw ConfigError(std::string("config file ") + path + ": " + e.what());
    }
    for (const auto &[key, val] : j.items()) {
      if (key == "tol" && val.is_object()) {
        for (const auto &[tk, tv] : val.items())
          apply_kv(c, "tol." + tk, fmt_g17(tv.get<double>()));
      } else if (val.is_string()) {
        apply_kv(c, key, val.get<std::string>());
      } else if (val.is_number_integer()) {
        apply_kv(c, key, std::to_string(val.get<long>()));
      } else if (val.is_number()) {
        apply_kv(c, key, fmt_g17(val.get<double>()));
      } else {
        throw ConfigError("config file " + path + ": key '" + key + "' has unsupported type");
      }
    }
    return c;
  }
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config file " + path + " line " + std::to_string(lineno) +
                        ": expected key=value");
    std::string key = line.substr(start, eq - start);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.pop_back();
    const size_t vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    apply_kv(c, key, value);
  }
  return c;
}

const std::map<std::string, double> &default_tolerances() {
  static const std::map<std::string, double> tols = {
      {"closedness", 1e-6},        // relative, gates chart construction
      {"linear_residual", 1e-10},  // seed validation against the linear equation
      {"path_disagreement", 1e-8},
      {"conjugate_disagreement", 1e-3},  // jet-free trapezoid path error, O(h^2)
      {"identity", 1e-10},         // algebraic chart identities
      {"el_residual", 1e-2},       // direct fourth-order residual, absolute
      {"divergence_gate", 1e-2},   // conjugate recovery gate, relative
      {"equivalence", 1e-8},       // surface route match after alignment
      {"gradient", 1e-2},          // FD gradient vs seed values
      {"nondeg", 1e-10},           // relative det B threshold
  };
  return tols;
}

double tolerance(const RunConfig &c, const std::string &name) {
  if (auto it = c.tol.find(name); it != c.tol.end()) return it->second;
  const auto &d = default_tolerances();
  if (auto it = d.find(name); it != d.end()) return it->second;
  throw ConfigError("unknown tolerance '" + name + "'");
}

// ----------------------------------------------------------------------------
// JSON emission with %.17g floats.

namespace {

void escape_to(std::string &out, const std::string &s) {
  out += '"';
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  out += '"';
}

void dump_rec(std::string &out, const OrderedJson &j, int indent, int depth) {
  const std::string pad(size_t(indent) * size_t(depth), ' ');
  const std::string pad1(size_t(indent) * size_t(depth + 1), ' ');
  switch (j.type()) {
    case OrderedJson::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto &[k, v] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad1;
        escape_to(out, k);
        out += ": ";
        dump_rec(out, v, indent, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case OrderedJson::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Scalar-only arrays stay on one line; they are the bulk of the data.
      bool scalars = true;
      for (const auto &v : j)
        if (v.is_object() || v.is_array()) scalars = false;
      if (scalars) {
        out += "[";
        bool first = true;
        for (const auto &v : j) {
          if (!first) out += ", ";
          first = false;
          dump_rec(out, v, indent, depth + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto &v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad1;
        dump_rec(out, v, indent, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case OrderedJson::value_t::string: escape_to(out, j.get_ref<const std::string &>()); return;
    case OrderedJson::value_t::boolean: out += j.get<bool>() ? "true" : "false"; return;
    case OrderedJson::value_t::number_integer: out += std::to_string(j.get<std::int64_t>()); return;
    case OrderedJson::value_t::number_unsigned: out += std::to_string(j.get<std::uint64_t>()); return;
    case OrderedJson::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v))
        out += fmt_g17(v);
      else
        out += "null";
      return;
    }
    default: out += "null"; return;
  }
}

}  // namespace

std::string dump_json(const OrderedJson &j, int indent) {
  std::string out;
  dump_rec(out, j, indent, 0);
  out += "\n";
  return out;
}

void write_text_atomic(const std::string &path, const std::string &text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot open '" + tmp + "' for writing");
    os << text;
    if (!os.good()) throw ConfigError("short write to '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ConfigError("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

std::string read_text(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// ----------------------------------------------------------------------------

OrderedJson grid_json(const Grid2<double> &g) {
  OrderedJson j;
  j["H0"] = g.H0;
  j["H1"] = g.H1;
  j["r0"] = g.r0;
  j["r1"] = g.r1;
  j["nH"] = g.nH;
  j["nr"] = g.nr;
  return j;
}

OrderedJson config_json(const RunConfig &c) {
  OrderedJson j;
  j["command"] = c.command;
  j["potential"] = c.potential;
  j["mode"] = c.mode;
  j["seed1"] = c.seed1;
  j["seed2"] = c.seed2;
  j["domain"] = OrderedJson::array({c.H0, c.H1, c.r0, c.r1});
  j["grid"] = OrderedJson::array({c.nH, c.nr});
  j["refine"] = c.refine;
  if (c.base_i >= 0 || c.base_j >= 0) j["base"] = OrderedJson::array({c.base_i, c.base_j});
  if (c.has_xbox) j["xbox"] = OrderedJson::array({c.xb[0], c.xb[1], c.xb[2], c.xb[3]});
  j["xgrid"] = OrderedJson::array({c.n1, c.n2});
  j["format"] = c.format;
  j["surface"] = OrderedJson::array({c.surface1, c.surface2});
  if (!c.tol.empty()) {
    OrderedJson t;
    for (const auto &[k, v] : c.tol) t[k] = v;
    j["tol"] = t;
  }
  return j;
}

namespace {

RunConfig config_from_json(const OrderedJson &j) {
  RunConfig c;
  auto get_str = [&](const char *k, std::string &dst) {
    if (j.contains(k)) dst = j.at(k).get<std::string>();
  };
  get_str("command", c.command);
  get_str("potential", c.potential);
  get_str("mode", c.mode);
  get_str("seed1", c.seed1);
  get_str("seed2", c.seed2);
  get_str("format", c.format);
  if (j.contains("domain")) {
    const auto &d = j.at("domain");
    c.H0 = d.at(0).get<double>();
    c.H1 = d.at(1).get<double>();
    c.r0 = d.at(2).get<double>();
    c.r1 = d.at(3).get<double>();
  }
  if (j.contains("grid")) {
    c.nH = j.at("grid").at(0).get<Index>();
    c.nr = j.at("grid").at(1).get<Index>();
  }
  if (j.contains("refine")) c.refine = j.at("refine").get<int>();
  if (j.contains("base")) {
    c.base_i = j.at("base").at(0).get<Index>();
    c.base_j = j.at("base").at(1).get<Index>();
  }
  if (j.contains("xbox")) {
    for (int k = 0; k < 4; ++k) c.xb[k] = j.at("xbox").at(k).get<double>();
    c.has_xbox = true;
  }
  if (j.contains("xgrid")) {
    c.n1 = j.at("xgrid").at(0).get<Index>();
    c.n2 = j.at("xgrid").at(1).get<Index>();
  }
  if (j.contains("surface")) {
    c.surface1 = j.at("surface").at(0).get<std::string>();
    c.surface2 = j.at("surface").at(1).get<std::string>();
  }
  if (j.contains("tol"))
    for (const auto &[k, v] : j.at("tol").items()) c.tol[k] = v.get<double>();
  return c;
}

}  // namespace

OrderedJson array_json(const Array2<double> &a) {
  OrderedJson arr = OrderedJson::array();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) arr.push_back(a(i, j));
  return arr;
}

Array2<double> array_from_json(const OrderedJson &j, Index nH, Index nr) {
  if (!j.is_array() || Index(j.size()) != nH * nr)
    throw ConfigError("field values: expected " + std::to_string(nH * nr) + " numbers");
  Array2<double> a(nH, nr);
  Index k = 0;
  for (Index i = 0; i < nH; ++i)
    for (Index jj = 0; jj < nr; ++jj) {
      const auto &v = j.at(size_t(k++));
      a(i, jj) = v.is_null() ? quiet_nan<double>() : v.get<double>();
    }
  return a;
}

std::string chart_json(const Chart<double> &ch, const RunConfig &c) {
  OrderedJson j;
  j["schema"] = "chart/1";
  j["config_hash"] = config_hash(c);
  j["config"] = config_json(c);
  j["potential"] = ch.potential_spec;
  j["seed1"] = ch.xi1.name;
  j["seed2"] = ch.xi2.name;
  j["grid"] = grid_json(ch.grid);
  j["base"] = OrderedJson::array({ch.base_i, ch.base_j});
  j["rect"] = OrderedJson{{"i0", ch.rect.i0}, {"i1", ch.rect.i1}, {"j0", ch.rect.j0},
                          {"j1", ch.rect.j1}};
  j["path_disagreement"] = OrderedJson{{"x1", ch.path_disagreement_x1},
                                       {"x2", ch.path_disagreement_x2},
                                       {"u", ch.path_disagreement_u}};
  j["identities"] = OrderedJson{{"detA_vs_p2detB", ch.identities.detA_vs_p2detB},
                                {"J_times_p2", ch.identities.J_times_p2},
                                {"isothermal", ch.identities.isothermal},
                                {"hessian_symmetry", ch.identities.hessian_symmetry}};
  OrderedJson fields;
  fields["x1"] = array_json(ch.x1.values);
  fields["x2"] = array_json(ch.x2.values);
  fields["u"] = array_json(ch.u.values);
  fields["xi1"] = array_json(ch.xi1.values);
  fields["xi2"] = array_json(ch.xi2.values);
  fields["detB"] = array_json(ch.detB);
  fields["J"] = array_json(ch.J);
  j["fields"] = fields;
  return dump_json(j);
}

std::string field_json(const std::string &name, const Grid2<double> &g, const Array2<double> &v,
                       const RunConfig &c) {
  OrderedJson j;
  j["schema"] = "field/1";
  j["config_hash"] = config_hash(c);
  j["name"] = name;
  j["potential"] = c.potential;
  j["grid"] = grid_json(g);
  j["values"] = array_json(v);
  return dump_json(j);
}

LoadedField load_field_file(const std::string &path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
    CsvField csv = load_csv_field(path);
    LoadedField f;
    f.schema = "csv";
    f.name = "u";
    f.hash = csv.hash;
    f.grid = csv.grid;
    f.values = std::move(csv.values);
    return f;
  }
  OrderedJson j;
  try {
    j = OrderedJson::parse(read_text(path));
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    throw ConfigError("file " + path + ": " + e.what());
  }
  if (!j.contains("schema")) throw ConfigError("file " + path + ": missing 'schema'");
  const std::string schema = j.at("schema").get<std::string>();
  LoadedField f;
  f.schema = schema;
  try {
    const auto &gj = j.at("grid");
    f.grid = make_grid(gj.at("H0").get<double>(), gj.at("H1").get<double>(),
                       gj.at("r0").get<double>(), gj.at("r1").get<double>(),
                       gj.at("nH").get<Index>(), gj.at("nr").get<Index>());
    if (j.contains("config_hash")) f.hash = j.at("config_hash").get<std::string>();
    if (schema == "field/1") {
      f.name = j.at("name").get<std::string>();
      if (j.contains("potential")) f.potential = j.at("potential").get<std::string>();
      f.values = array_from_json(j.at("values"), f.grid.nH, f.grid.nr);
    } else if (schema == "chart/1") {
      f.name = "u";
      f.potential = j.at("potential").get<std::string>();
      f.values = array_from_json(j.at("fields").at("u"), f.grid.nH, f.grid.nr);
      f.config = config_from_json(j.at("config"));
      f.has_config = true;
    } else {
      throw ConfigError("file " + path + ": unsupported schema '" + schema + "'");
    }
  } catch (const Error &) {
    throw;
  } catch (const std::exception &e) {
    throw ConfigError("file " + path + ": " + e.what());
  }
  return f;
}

// ----------------------------------------------------------------------------
// CSV.

std::string csv_table(const Grid2<double> &g, const Array2<double> &u, const std::string &hash) {
  std::ostringstream os;
  os << "# config " << hash << "\n";
  os << "x1,x2,u\n";
  for (Index i = 0; i < g.nH; ++i)
    for (Index j = 0; j < g.nr; ++j)
      os << fmt_g17(g.x1(i)) << "," << fmt_g17(g.x2(j)) << "," << fmt_g17(u(i, j)) << "\n";
  return os.str();
}

CsvField load_csv_field(const std::string &path) {
  const std::string text = read_text(path);
  std::istringstream is(text);
  std::string line;
  CsvField out;
  std::vector<std::array<double, 3>> rows;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == '#') {
      const std::string tag = "# config ";
      if (line.rfind(tag, 0) == 0) out.hash = line.substr(tag.size());
      continue;
    }
    std::array<double, 3> row{};
    std::string cell;
    std::istringstream ls(line);
    int k = 0;
    bool numeric = true;
    while (std::getline(ls, cell, ',') && k < 3) {
      try {
        row[size_t(k)] = std::stod(cell);
      } catch (const std::exception &) {
        numeric = false;
        break;
      }
      ++k;
    }
    if (!numeric && rows.empty()) continue;  // header line
    if (!numeric || k != 3)
      throw ConfigError(path + " line " + std::to_string(lineno) + ": expected x1,x2,u");
    rows.push_back(row);
  }
  if (rows.size() < 9) throw ConfigError(path + ": too few data rows for a grid");

  auto collect_axis = [&](int col) {
    std::vector<double> v;
    for (const auto &r : rows) v.push_back(r[size_t(col)]);
    std::sort(v.begin(), v.end());
    std::vector<double> uniq;
    const double span = std::max(v.back() - v.front(), 1e-300);
    for (double x : v)
      if (uniq.empty() || x - uniq.back() > 1e-9 * span) uniq.push_back(x);
    return uniq;
  };
  const std::vector<double> ax1 = collect_axis(0), ax2 = collect_axis(1);
  const Index n1 = Index(ax1.size()), n2 = Index(ax2.size());
  if (n1 < 3 || n2 < 3) throw ConfigError(path + ": grid inference found fewer than 3x3 nodes");
  if (Index(rows.size()) != n1 * n2)
    throw ConfigError(path + ": " + std::to_string(rows.size()) + " rows do not fill a " +
                      std::to_string(n1) + "x" + std::to_string(n2) + " grid");
  const double h1 = (ax1.back() - ax1.front()) / double(n1 - 1);
  const double h2 = (ax2.back() - ax2.front()) / double(n2 - 1);
  for (Index k = 0; k < n1; ++k)
    if (std::abs(ax1[size_t(k)] - (ax1.front() + double(k) * h1)) > 1e-6 * std::abs(h1))
      throw ConfigError(path + ": x1 values are not uniformly spaced");
  for (Index k = 0; k < n2; ++k)
    if (std::abs(ax2[size_t(k)] - (ax2.front() + double(k) * h2)) > 1e-6 * std::abs(h2))
      throw ConfigError(path + ": x2 values are not uniformly spaced");

  out.grid = make_grid(ax1.front(), ax1.back(), ax2.front(), ax2.back(), n1, n2);
  out.values.setConstant(n1, n2, quiet_nan<double>());
  Array2<double> seen = Array2<double>::Zero(n1, n2);
  auto axis_index = [&](const std::vector<double> &ax, double x, double h) {
    const Index k = Index(std::llround((x - ax.front()) / h));
    return std::clamp<Index>(k, 0, Index(ax.size()) - 1);
  };
  for (const auto &r : rows) {
    const Index i = axis_index(ax1, r[0], h1), j = axis_index(ax2, r[1], h2);
    if (seen(i, j) != 0) throw ConfigError(path + ": duplicate grid node in table");
    seen(i, j) = 1;
    out.values(i, j) = r[2];
  }
  return out;
}

// ----------------------------------------------------------------------------
// OBJ.

std::string obj_mesh(const Array2<double> &X, const Array2<double> &Y, const Array2<double> &Z,
                     const IndexRect &rect, const std::string &hash) {
  if (rect.empty() || rect.rows() < 2 || rect.cols() < 2)
    throw ConfigError("obj_mesh: rectangle too small for a mesh");
  std::ostringstream os;
  os << "# config " << hash << "\n";
  double area_sup = 0;
  for (Index i = rect.i0; i < rect.i1; ++i)
    for (Index j = rect.j0; j < rect.j1; ++j) {
      const double e1x = X(i + 1, j) - X(i, j), e1y = Y(i + 1, j) - Y(i, j),
                   e1z = Z(i + 1, j) - Z(i, j);
      const double e2x = X(i, j + 1) - X(i, j), e2y = Y(i, j + 1) - Y(i, j),
                   e2z = Z(i, j + 1) - Z(i, j);
      const double cx = e1y * e2z - e1z * e2y, cy = e1z * e2x - e1x * e2z,
                   cz = e1x * e2y - e1y * e2x;
      area_sup = std::max(area_sup, std::sqrt(cx * cx + cy * cy + cz * cz));
    }
  if (area_sup <= 1e-14) os << "# note: surface has zero area\n";
  for (Index i = rect.i0; i <= rect.i1; ++i)
    for (Index j = rect.j0; j <= rect.j1; ++j)
      os << "v " << fmt_g17(X(i, j)) << " " << fmt_g17(Y(i, j)) << " " << fmt_g17(Z(i, j)) << "\n";
  const Index cols = rect.cols();
  auto vid = [&](Index i, Index j) { return (i - rect.i0) * cols + (j - rect.j0) + 1; };
  for (Index i = rect.i0; i < rect.i1; ++i)
    for (Index j = rect.j0; j < rect.j1; ++j)
      os << "f " << vid(i, j) << " " << vid(i + 1, j) << " " << vid(i + 1, j + 1) << " "
         << vid(i, j + 1) << "\n";
  return os.str();
}

// ----------------------------------------------------------------------------
// SVG contours by marching squares, fixed size, deterministic traversal.

namespace {

struct SvgMap {
  double H0, H1, r0, r1;
  static constexpr double size = 800, margin = 40;
  double px(double H) const { return margin + (H - H0) / (H1 - H0) * (size - 2 * margin); }
  double py(double r) const { return margin + (1 - (r - r0) / (r1 - r0)) * (size - 2 * margin); }
};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string level_color(int k, int n) {
  const double t = n <= 1 ? 0.0 : double(k) / double(n - 1);
  const int r = int(40 + 180 * t), g = 60, b = int(220 - 180 * t);
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string svg_contours(const Grid2<double> &g, const Array2<double> &v, const std::string &hash) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
        "viewBox=\"0 0 800 800\">\n";
  os << "<!-- config " << hash << " -->\n";
  os << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";

  double vmin = std::numeric_limits<double>::max(), vmax = std::numeric_limits<double>::lowest();
  for (Index i = 0; i < g.nH; ++i)
    for (Index j = 0; j < g.nr; ++j)
      if (std::isfinite(v(i, j))) {
        vmin = std::min(vmin, v(i, j));
        vmax = std::max(vmax, v(i, j));
      }
  const SvgMap m{g.H0, g.H1, g.r0, g.r1};
  os << "<rect x=\"" << fmt2(m.margin) << "\" y=\"" << fmt2(m.margin)
     << "\" width=\"" << fmt2(m.size - 2 * m.margin) << "\" height=\""
     << fmt2(m.size - 2 * m.margin) << "\" fill=\"none\" stroke=\"black\"/>\n";

  if (!(vmax - vmin > 1e-14 * (1 + std::abs(vmax)))) {
    os << "<!-- note: constant field, no contours -->\n";
    os << "<text x=\"400\" y=\"400\" text-anchor=\"middle\" font-family=\"monospace\">constant "
          "field</text>\n";
    os << "</svg>\n";
    return os.str();
  }

  const int nlevels = 15;
  for (int k = 0; k < nlevels; ++k) {
    const double L = vmin + (k + 0.5) * (vmax - vmin) / nlevels;
    const std::string color = level_color(k, nlevels);
    os << "<g stroke=\"" << color << "\" stroke-width=\"1\" fill=\"none\">\n";
    for (Index i = 0; i + 1 < g.nH; ++i)
      for (Index j = 0; j + 1 < g.nr; ++j) {
        const double v00 = v(i, j), v10 = v(i + 1, j), v11 = v(i + 1, j + 1), v01 = v(i, j + 1);
        if (!std::isfinite(v00) || !std::isfinite(v10) || !std::isfinite(v11) ||
            !std::isfinite(v01))
          continue;
        const int mask = (v00 > L ? 1 : 0) | (v10 > L ? 2 : 0) | (v11 > L ? 4 : 0) |
                         (v01 > L ? 8 : 0);
        if (mask == 0 || mask == 15) continue;
        const double H0c = g.H(i), H1c = g.H(i + 1), r0c = g.r(j), r1c = g.r(j + 1);
        auto lerp = [&](double a, double b, double va, double vb) {
          return a + (L - va) / (vb - va) * (b - a);
        };
        // edge crossing points: e0 bottom (r = r0c), e1 right, e2 top, e3 left
        double ex[4], ey[4];
        ex[0] = m.px(lerp(H0c, H1c, v00, v10));
        ey[0] = m.py(r0c);
        ex[1] = m.px(H1c);
        ey[1] = m.py(lerp(r0c, r1c, v10, v11));
        ex[2] = m.px(lerp(H0c, H1c, v01, v11));
        ey[2] = m.py(r1c);
        ex[3] = m.px(H0c);
        ey[3] = m.py(lerp(r0c, r1c, v00, v01));
        auto seg = [&](int a, int b) {
          os << "<line x1=\"" << fmt2(ex[a]) << "\" y1=\"" << fmt2(ey[a]) << "\" x2=\""
             << fmt2(ex[b]) << "\" y2=\"" << fmt2(ey[b]) << "\"/>\n";
        };
        switch (mask) {
          case 1: case 14: seg(3, 0); break;
          case 2: case 13: seg(0, 1); break;
          case 3: case 12: seg(3, 1); break;
          case 4: case 11: seg(1, 2); break;
          case 6: case 9: seg(0, 2); break;
          case 7: case 8: seg(2, 3); break;
          case 5: {
            const double center = (v00 + v10 + v11 + v01) / 4;
            if (center > L) {
              seg(0, 1);
              seg(2, 3);
            } else {
              seg(3, 0);
              seg(1, 2);
            }
            break;
          }
          case 10: {
            const double center = (v00 + v10 + v11 + v01) / 4;
            if (center > L) {
              seg(3, 0);
              seg(1, 2);
            } else {
              seg(0, 1);
              seg(2, 3);
            }
            break;
          }
          default: break;
        }
      }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace joyce::io
