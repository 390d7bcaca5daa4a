#include "joyce/io.hpp"

#include "joyce/potential.hpp"
#include "joyce/seeds.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

using namespace joyce;
using io::RunConfig;

namespace {

bool contains(const std::string &hay, const std::string &needle) {
  return hay.find(needle) != std::string::npos;
}

int count_of(const std::string &hay, const std::string &needle) {
  int n = 0;
  for (size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

// Independent FNV-1a 64 for cross-checking the production hash.
std::uint64_t fnv_oracle(const std::string &s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ull;
  return h;
}

}  // namespace

TEST_CASE("canonical configuration text is a fixed golden rendering") {
  RunConfig c;
  c.command = "construct";
  const std::string expect =
      "command=construct\n"
      "domain=0:1,1:2\n"
      "format=json\n"
      "grid=33x33\n"
      "mode=closed\n"
      "potential=logdet\n"
      "refine=0\n"
      "seed1=H\n"
      "seed2=expr:radial\n"
      "surface=l1,l1l2\n"
      "xgrid=65x65\n";
  CHECK(io::canonical_config_text(c) == expect);

  // Optional parts slot in at fixed positions with 17-digit numbers.
  c.base_i = 3;
  c.base_j = 4;
  c.has_xbox = true;
  c.xb[0] = -0.25;
  c.xb[1] = 0.25;
  c.xb[2] = 0.5;
  c.xb[3] = 1.0;
  c.tol["identity"] = 1e-9;
  const std::string expect2 =
      "base=3,4\n"
      "command=construct\n"
      "domain=0:1,1:2\n"
      "format=json\n"
      "grid=33x33\n"
      "mode=closed\n"
      "potential=logdet\n"
      "refine=0\n"
      "seed1=H\n"
      "seed2=expr:radial\n"
      "surface=l1,l1l2\n"
      "tol.identity=1.0000000000000001e-09\n"
      "xbox=-0.25:0.25,0.5:1\n"
      "xgrid=65x65\n";
  CHECK(io::canonical_config_text(c) == expect2);
}

TEST_CASE("the config hash is FNV-1a 64 of the canonical text") {
  // Reference vectors for the hash itself.
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(io::fnv1a64("foobar") == 0x85944171f73967e8ull);

  RunConfig c;
  c.command = "construct";
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv_oracle(io::canonical_config_text(c))));
  CHECK(io::config_hash(c) == buf);
  CHECK(io::config_hash(c).size() == 16);

  // Stable across calls, sensitive to every field.
  CHECK(io::config_hash(c) == io::config_hash(c));
  RunConfig c2 = c;
  c2.nH = 65;
  CHECK(io::config_hash(c2) != io::config_hash(c));
  RunConfig c3 = c;
  c3.tol["identity"] = 1e-9;
  CHECK(io::config_hash(c3) != io::config_hash(c));
}

TEST_CASE("17-digit formatting round-trips every double bitwise") {
  const std::vector<double> samples = {0.0,    1.0 / 3.0, 0.1,  1e-300, 5e-324,
                                       -2.5e7, 6.02e23,   -0.0, 1.7976931348623157e308};
  for (double v : samples) {
    const std::string s = io::fmt_g17(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
    CHECK(std::signbit(back) == std::signbit(v));
  }
  CHECK(io::fmt_g17(0.5) == "0.5");
  CHECK(io::fmt_g17(1.0) == "1");
  CHECK(io::fmt_g17(-0.0) == "-0");
  CHECK(io::fmt_g17(0.1) == "0.10000000000000001");
}

TEST_CASE("key=value application covers every key and rejects malformed input") {
  RunConfig c;
  io::apply_kv(c, "potential", "power:0.25");
  io::apply_kv(c, "mode", "quadrature");
  io::apply_kv(c, "seed1", "logr");
  io::apply_kv(c, "seed2", "mode:1:0:1:0");
  io::apply_kv(c, "domain", "-1:1,0.5:2.5");
  io::apply_kv(c, "grid", "17x21");
  io::apply_kv(c, "refine", "2");
  io::apply_kv(c, "base", "3,7");
  io::apply_kv(c, "xbox", "0:1,0:1");
  io::apply_kv(c, "xgrid", "9x11");
  io::apply_kv(c, "format", "csv");
  io::apply_kv(c, "surface", "l1,l1sq_minus_l2sq");
  io::apply_kv(c, "tol.closedness", "1e-5");

  CHECK(c.potential == "power:0.25");
  CHECK(c.mode == "quadrature");
  CHECK(c.H0 == -1.0);
  CHECK(c.r1 == 2.5);
  CHECK(c.nH == 17);
  CHECK(c.nr == 21);
  CHECK(c.refine == 2);
  CHECK(c.base_i == 3);
  CHECK(c.base_j == 7);
  CHECK(c.has_xbox);
  CHECK(c.xb[1] == 1.0);
  CHECK(c.n1 == 9);
  CHECK(c.n2 == 11);
  CHECK(c.format == "csv");
  CHECK(c.surface2 == "l1sq_minus_l2sq");
  CHECK(c.tol.at("closedness") == 1e-5);

  CHECK_THROWS_AS(io::apply_kv(c, "mode", "fast"), ConfigError);
  CHECK_THROWS_AS(io::apply_kv(c, "domain", "0:1"), ConfigError);
  CHECK_THROWS_AS(io::apply_kv(c, "domain", "0:1,1:x"), ConfigError);
  CHECK_THROWS_AS(io::apply_kv(c, "grid", "17y17"), ConfigError);
  CHECK_THROWS_AS(io::apply_kv(c, "refine", "2.5"), ConfigError);
  CHECK_THROWS_AS(io::apply_kv(c, "base", "5"), ConfigError);
  CHECK_THROWS_AS(io::apply_kv(c, "format", "png"), ConfigError);
  CHECK_THROWS_AS(io::apply_kv(c, "surface", "l1"), ConfigError);
  CHECK_THROWS_AS(io::apply_kv(c, "tol.nosuch", "1e-5"), ConfigError);
  CHECK_THROWS_AS(io::apply_kv(c, "zzz", "1"), ConfigError);
}

TEST_CASE("run config builds its grid with optional refinement") {
  RunConfig c;
  const Grid2<double> g = c.grid();
  CHECK(g.nH == 33);
  CHECK(g.H0 == 0.0);
  CHECK(g.r1 == 2.0);

  c.refine = 2;
  CHECK(c.grid().nH == 129);
  c.refine = 13;
  CHECK_THROWS_AS(c.grid(), ConfigError);
  c.refine = 0;
  c.H1 = -1;  // empty interval
  CHECK_THROWS_AS(c.grid(), ConfigError);
}

TEST_CASE("json and key=value config files land on the same hash") {
  const std::string dir = "tmp_io_cfg";
  std::filesystem::create_directories(dir);
  io::write_text_atomic(dir + "/a.json",
                        "{\n"
                        "  \"potential\": \"power:0.25\",\n"
                        "  \"seed2\": \"expr:radial\",\n"
                        "  \"domain\": \"0:1,1:2\",\n"
                        "  \"grid\": \"17x17\",\n"
                        "  \"refine\": 1,\n"
                        "  \"tol\": {\"closedness\": 1e-5}\n"
                        "}\n");
  io::write_text_atomic(dir + "/a.conf",
                        "# same run, spelled as key=value\n"
                        "\n"
                        "potential = power:0.25\n"
                        "seed2=expr:radial\n"
                        "domain=0:1,1:2\n"
                        "grid = 17x17\n"
                        "refine=1\n"
                        "tol.closedness=1e-5\n");
  const RunConfig a = io::load_config_file(dir + "/a.json");
  const RunConfig b = io::load_config_file(dir + "/a.conf");
  CHECK(io::canonical_config_text(a) == io::canonical_config_text(b));
  CHECK(io::config_hash(a) == io::config_hash(b));
  CHECK(a.potential == "power:0.25");
  CHECK(a.refine == 1);
  CHECK(a.tol.at("closedness") == 1e-5);

  io::write_text_atomic(dir + "/bad.conf", "potential=logdet\nno equals sign here\n");
  try {
    io::load_config_file(dir + "/bad.conf");
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(contains(e.what(), "line 2"));
  }

  io::write_text_atomic(dir + "/bad.json", "{\"potential\": true}\n");
  CHECK_THROWS_AS(io::load_config_file(dir + "/bad.json"), ConfigError);
  io::write_text_atomic(dir + "/broken.json", "{\"potential\": \n");
  CHECK_THROWS_AS(io::load_config_file(dir + "/broken.json"), ConfigError);
  CHECK_THROWS_AS(io::load_config_file(dir + "/missing.conf"), ConfigError);
}

TEST_CASE("tolerances fall back to the built-in table") {
  RunConfig c;
  CHECK(io::tolerance(c, "closedness") == 1e-6);
  CHECK(io::tolerance(c, "el_residual") == 1e-2);
  c.tol["closedness"] = 1e-3;
  CHECK(io::tolerance(c, "closedness") == 1e-3);
  CHECK_THROWS_AS(io::tolerance(c, "nosuch"), ConfigError);
  CHECK(io::default_tolerances().size() == 10);
}

TEST_CASE("json dump uses 17-digit floats, null for non-finite and stable layout") {
  io::OrderedJson j;
  j["name"] = "x";
  j["vals"] = io::OrderedJson::array({1.0, 0.5, quiet_nan<double>()});
  j["n"] = 3;
  j["flag"] = true;
  j["obj"] = io::OrderedJson{{"a", 1}};
  j["empty"] = io::OrderedJson::object();
  j["none"] = io::OrderedJson::array();
  const std::string expect =
      "{\n"
      "  \"name\": \"x\",\n"
      "  \"vals\": [1, 0.5, null],\n"
      "  \"n\": 3,\n"
      "  \"flag\": true,\n"
      "  \"obj\": {\n"
      "    \"a\": 1\n"
      "  },\n"
      "  \"empty\": {},\n"
      "  \"none\": []\n"
      "}\n";
  CHECK(io::dump_json(j) == expect);

  // Arrays of composites break over lines; strings are escaped.
  io::OrderedJson k;
  k["rows"] = io::OrderedJson::array({io::OrderedJson::array({1, 2}), io::OrderedJson::array({3, 4})});
  k["s"] = "a\"b\nc";
  const std::string expect2 =
      "{\n"
      "  \"rows\": [\n"
      "    [1, 2],\n"
      "    [3, 4]\n"
      "  ],\n"
      "  \"s\": \"a\\\"b\\nc\"\n"
      "}\n";
  CHECK(io::dump_json(k) == expect2);
}

TEST_CASE("value arrays are row-major with the second axis fastest") {
  Array2<double> a(2, 3);
  a << 10, 11, 12, 20, 21, 22;
  const io::OrderedJson arr = io::array_json(a);
  REQUIRE(arr.size() == 6);
  CHECK(arr.at(0).get<double>() == 10.0);
  CHECK(arr.at(1).get<double>() == 11.0);
  CHECK(arr.at(3).get<double>() == 20.0);

  const Array2<double> back = io::array_from_json(arr, 2, 3);
  CHECK((back == a).all());
  CHECK_THROWS_AS(io::array_from_json(arr, 3, 3), ConfigError);

  // Non-finite entries pass through null in both directions.
  Array2<double> n(3, 3);
  n.setConstant(1.5);
  n(1, 2) = quiet_nan<double>();
  const io::OrderedJson narr = io::array_json(n);
  CHECK(narr.at(5).is_null());
  const Array2<double> nback = io::array_from_json(narr, 3, 3);
  CHECK(std::isnan(nback(1, 2)));
  CHECK(nback(0, 0) == 1.5);
}

TEST_CASE("chart files round-trip through disk") {
  const std::string dir = "tmp_io_chart";
  std::filesystem::create_directories(dir);

  RunConfig c;
  c.command = "construct";
  c.seed1 = "H";
  c.seed2 = "logr";
  c.nH = c.nr = 17;
  const JoyceData<double> jd = derive_joyce_data(parse_potential<double>(c.potential));
  const Chart<double> ch = assemble_chart(c.seed1, c.seed2, jd, c.grid());

  const std::string text = io::chart_json(ch, c);
  CHECK(text == io::chart_json(ch, c));  // byte-identical on repeat
  io::write_text_atomic(dir + "/chart.json", text);

  const io::LoadedField f = io::load_field_file(dir + "/chart.json");
  CHECK(f.schema == "chart/1");
  CHECK(f.name == "u");
  CHECK(f.potential == "logdet");
  CHECK(f.hash == io::config_hash(c));
  CHECK(f.grid == ch.grid);
  CHECK((f.values == ch.u.values).all());
  REQUIRE(f.has_config);
  CHECK(io::canonical_config_text(f.config) == io::canonical_config_text(c));
  CHECK(io::config_hash(f.config) == f.hash);

  // field/1 carries a single array.
  Array2<double> v = ch.detB;
  v(2, 2) = quiet_nan<double>();
  io::write_text_atomic(dir + "/field.json", io::field_json("detB", ch.grid, v, c));
  const io::LoadedField g = io::load_field_file(dir + "/field.json");
  CHECK(g.schema == "field/1");
  CHECK(g.name == "detB");
  CHECK(g.grid == ch.grid);
  CHECK(std::isnan(g.values(2, 2)));
  CHECK(g.values(3, 3) == v(3, 3));
  CHECK(!g.has_config);

  io::write_text_atomic(dir + "/odd.json", "{\"schema\": \"mesh/9\", \"grid\": {}}\n");
  CHECK_THROWS_AS(io::load_field_file(dir + "/odd.json"), ConfigError);
  io::write_text_atomic(dir + "/nos.json", "{\"grid\": {}}\n");
  CHECK_THROWS_AS(io::load_field_file(dir + "/nos.json"), ConfigError);
}

TEST_CASE("csv tables reproduce the grid and values") {
  const std::string dir = "tmp_io_csv";
  std::filesystem::create_directories(dir);
  const Grid2<double> g = make_grid(-0.5, 0.5, 1.0, 2.5, 5, 7);
  Array2<double> u(5, 7);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 7; ++j) u(i, j) = std::sin(3.0 * g.H(i)) + 1.0 / g.r(j);

  const std::string text = io::csv_table(g, u, "a1b2c3d4e5f60708");
  CHECK(contains(text, "# config a1b2c3d4e5f60708"));
  CHECK(contains(text, "x1,x2,u"));
  io::write_text_atomic(dir + "/t.csv", text);

  const io::CsvField back = io::load_csv_field(dir + "/t.csv");
  CHECK(back.hash == "a1b2c3d4e5f60708");
  CHECK(back.grid.nH == 5);
  CHECK(back.grid.nr == 7);
  CHECK(back.grid.H0 == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(back.grid.r1 == doctest::Approx(2.5).epsilon(1e-15));
  CHECK((back.values == u).all());  // 17-digit text is bitwise faithful

  // Row order does not matter: reverse the data lines.
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> head, data;
  while (std::getline(is, line))
    (line.empty() || line[0] == '#' || line[0] == 'x' ? head : data).push_back(line);
  std::string shuffled;
  for (const auto &l : head) shuffled += l + "\n";
  for (auto it = data.rbegin(); it != data.rend(); ++it) shuffled += *it + "\n";
  io::write_text_atomic(dir + "/r.csv", shuffled);
  const io::CsvField rb = io::load_csv_field(dir + "/r.csv");
  CHECK((rb.values == u).all());

  // The loader is also the entry point for generic field files.
  const io::LoadedField lf = io::load_field_file(dir + "/t.csv");
  CHECK(lf.schema == "csv");
  CHECK(lf.name == "u");
  CHECK(lf.hash == "a1b2c3d4e5f60708");
}

TEST_CASE("csv loader rejects tables that do not form a uniform grid") {
  const std::string dir = "tmp_io_csv_bad";
  std::filesystem::create_directories(dir);
  auto write = [&](const char *name, const std::string &body) {
    io::write_text_atomic(dir + "/" + name, body);
    return dir + "/" + name;
  };

  auto grid_rows = [](std::initializer_list<double> xs, std::initializer_list<double> ys) {
    std::string s = "x1,x2,u\n";
    for (double x : xs)
      for (double y : ys)
        s += io::fmt_g17(x) + "," + io::fmt_g17(y) + ",1\n";
    return s;
  };

  try {
    io::load_csv_field(write("nonuniform.csv", grid_rows({0, 0.1, 0.35}, {0, 1, 2})));
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(contains(e.what(), "not uniformly spaced"));
  }

  try {
    io::load_csv_field(write("small.csv", grid_rows({0, 1}, {0, 1, 2})));
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(contains(e.what(), "too few data rows"));
  }

  // Full 3x3 plus one extra copy: the count no longer fits the grid.
  std::string extra = grid_rows({0, 1, 2}, {0, 1, 2});
  extra += "0,0,1\n";
  try {
    io::load_csv_field(write("extra.csv", extra));
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(contains(e.what(), "do not fill"));
  }

  // Same row count as the grid, but one node doubled and one missing.
  std::string dup = "x1,x2,u\n";
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      if (!(x == 2 && y == 2)) dup += std::to_string(x) + "," + std::to_string(y) + ",1\n";
  dup += "0,0,1\n";
  // 8 distinct + 1 duplicate = 9 rows; make the axes still span 3 values.
  try {
    io::load_csv_field(write("dup.csv", dup));
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(contains(e.what(), "duplicate grid node"));
  }

  try {
    io::load_csv_field(write("junk.csv", "x1,x2,u\n1,2\n"));
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(contains(e.what(), "expected x1,x2,u"));
  }
}

TEST_CASE("obj meshes number vertices row-major from one") {
  Array2<double> X(2, 2), Y(2, 2), Z(2, 2);
  X << 0, 0, 1, 1;
  Y << 0, 1, 0, 1;
  Z << 0, 0, 0, 0;
  const std::string obj = io::obj_mesh(X, Y, Z, IndexRect{0, 1, 0, 1}, "deadbeefdeadbeef");
  const std::string expect =
      "# config deadbeefdeadbeef\n"
      "v 0 0 0\n"
      "v 0 1 0\n"
      "v 1 0 0\n"
      "v 1 1 0\n"
      "f 1 3 4 2\n";
  CHECK(obj == expect);

  Array2<double> O = Array2<double>::Zero(2, 2);
  CHECK(contains(io::obj_mesh(O, O, O, IndexRect{0, 1, 0, 1}, "h"), "zero area"));
  CHECK_THROWS_AS(io::obj_mesh(X, Y, Z, IndexRect{0, 0, 0, 1}, "h"), ConfigError);
}

TEST_CASE("svg contours carry the hash and fifteen level groups") {
  const Grid2<double> g = make_grid(0.0, 1.0, 1.0, 2.0, 9, 9);
  Array2<double> v(9, 9);
  for (Index i = 0; i < 9; ++i)
    for (Index j = 0; j < 9; ++j) v(i, j) = g.H(i) + g.r(j);

  const std::string svg = io::svg_contours(g, v, "0123456789abcdef");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(contains(svg, "<!-- config 0123456789abcdef -->"));
  CHECK(count_of(svg, "<g stroke=") == 15);
  CHECK(count_of(svg, "</g>") == 15);
  CHECK(contains(svg, "width=\"800\""));
  CHECK(svg.substr(svg.size() - 7) == "</svg>\n");
  CHECK(count_of(svg, "<line ") > 8);  // diagonal contours cross many cells

  // Not-a-number holes are skipped, the plot still closes properly.
  v(4, 4) = quiet_nan<double>();
  const std::string holed = io::svg_contours(g, v, "0123456789abcdef");
  CHECK(count_of(holed, "<g stroke=") == 15);
  CHECK(holed.substr(holed.size() - 7) == "</svg>\n");

  Array2<double> flat = Array2<double>::Constant(9, 9, 2.0);
  const std::string none = io::svg_contours(g, flat, "0123456789abcdef");
  CHECK(contains(none, "constant field"));
  CHECK(count_of(none, "<g stroke=") == 0);
}

TEST_CASE("atomic writes leave no temporary behind") {
  const std::string dir = "tmp_io_atomic";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/out.txt";
  io::write_text_atomic(path, "hello\nworld\n");
  CHECK(io::read_text(path) == "hello\nworld\n");
  CHECK(!std::filesystem::exists(path + ".tmp"));
  io::write_text_atomic(path, "second\n");
  CHECK(io::read_text(path) == "second\n");

  CHECK_THROWS_AS(io::write_text_atomic("no_such_dir_xyz/file.txt", "x"), ConfigError);
  CHECK_THROWS_AS(io::read_text("no_such_file_xyz.txt"), ConfigError);
}
