#include <gtest/gtest.h>

#include "wlab/cli.hpp"

using namespace wlab;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "wlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) cells.push_back(std::exchange(cell, {}));
      else cell += c;
    }
    cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

TriangleMesh tetrahedron() {
  return build_mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}});
}

}  // namespace

TEST(Obj, TetrahedronRoundTrip) {
  TriangleMesh m = tetrahedron();
  m.vertices[1] = Vec3(0.1 + 0.2, 1.0 / 3.0, std::nextafter(1.0, 2.0));
  const fs::path p = scratch("tet") / "t.obj";
  write_obj(m, p);
  const TriangleMesh r = read_obj(p);
  EXPECT_EQ(r.faces, m.faces);
  EXPECT_EQ(r.vertices, m.vertices);
  EXPECT_TRUE(r.closed);
}

TEST(Obj, QuadFaceIsRejectedWithLine) {
  std::istringstream in("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  try {
    parse_obj(in, "q.obj");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonTriangleFace);
    EXPECT_NE(std::string(e.what()).find("q.obj:5"), std::string::npos);
  }
}

TEST(Obj, ParseErrorsCarryLineNumbers) {
  std::istringstream bad_num("v 0 0 0\nv 1 x 0\n");
  try {
    parse_obj(bad_num, "b.obj");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("b.obj:2"), std::string::npos);
  }
  std::istringstream bad_index("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n");
  EXPECT_THROW(parse_obj(bad_index), Error);
}

TEST(Obj, SlashIndicesAndComments) {
  std::istringstream in("# tet\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nvn 0 0 1\n"
                        "f 1/1/1 3/1/1 2/1/1\nf 1//1 2//1 4//1\nf -4 -1 -2\nf 2 3 4\n");
  const TriangleMesh m = parse_obj(in);
  EXPECT_EQ(m.faces, tetrahedron().faces);
}

TEST(Obj, GluedPieceLabelsSurvive) {
  const Surface f1 = torus_surface({1.0, 0.4, 64, 64}), f2 = torus_surface({1.0, 0.6, 64, 64});
  const GluedSurface g = connected_sum(f1, f2, GluingParams{});
  const fs::path p = scratch("glued") / "g.obj";
  write_obj(g.mesh, p);
  const TriangleMesh r = read_obj(p);
  EXPECT_EQ(r.pieces, g.mesh.pieces);
  EXPECT_EQ(r.vertices, g.mesh.vertices);
  EXPECT_EQ(measure(r).willmore, measure(g.mesh).willmore);
}

TEST(Report, MeasuresHeader) {
  CsvTable t = measures_table();
  add_measures(t, "tet", measure(tetrahedron()));
  std::ostringstream out;
  print_csv(out, t);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "name,area,volume,willmore,iso,euler_char,genus");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(Report, SweepHasSlopeRows) {
  AsymptoticsReport r;
  for (double a : {0.08, 0.04, 0.02, 0.01}) r.rows.push_back({a, -a * a, -a * a, a * a * a});
  r.dW_slope = {2.0, 0.1};
  r.dIso_slope = {3.0, 0.1};
  const CsvTable t = sweep_table(r);
  EXPECT_EQ(t.header, (std::vector<std::string>{"alpha", "dW_excess", "predicted", "dIso"}));
  ASSERT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(t.rows[4][0], "slope_dW");
  EXPECT_EQ(t.rows[5][0], "slope_dIso");
}

TEST(Report, FloatsInFullPrecision) {
  const CsvTable t = constants_table();
  const auto k = solution_interval_constants();
  EXPECT_EQ(t.rows[0][0], "c1");
  EXPECT_EQ(std::stod(t.rows[0][1]), k.c1);
}

TEST(Report, UnwritablePathIsIoError) {
  try {
    write_report(constants_table(), "/nonexistent_dir_wlab/x.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
}

TEST(Config, KeyValueWithComments) {
  std::istringstream in("# run\nalpha = 0.04  # trial\n\n--gamma=0.2\nf1 = torus:c=0.4,n=64\n");
  const Config c = parse_config(in);
  EXPECT_EQ(c.at("alpha"), "0.04");
  EXPECT_EQ(c.at("gamma"), "0.2");
  EXPECT_EQ(c.at("f1"), "torus:c=0.4,n=64");
  std::istringstream bad("alpha 0.04\n");
  EXPECT_THROW(parse_config(bad), Error);
}

TEST(SurfaceSpec, Generators) {
  const Surface t = make_surface(parse_surface_spec("torus:c=0.5,n=32"));
  EXPECT_EQ(t.mesh.num_vertices(), 32 * 32);
  EXPECT_EQ(measure(t.mesh).genus, 1);
  EXPECT_EQ(measure(make_surface(parse_surface_spec("necked:g=2")).mesh).genus, 2);
  EXPECT_THROW(make_surface(parse_surface_spec("torus:q=1")), Error);
  EXPECT_THROW(make_surface(parse_surface_spec("klein")), Error);
}

TEST(Cli, ConstantsWritesCsv) {
  const fs::path d = scratch("constants");
  EXPECT_EQ(run({"constants", "--out", d.string()}), 0);
  const auto rows = read_csv(d / "constants.csv");
  ASSERT_GE(rows.size(), 5u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"name", "value"}));
}

TEST(Cli, MeasureCliffordTorus) {
  const fs::path d = scratch("measure");
  EXPECT_EQ(run({"measure", "--gen", "torus", "--R", "1", "--r", "0.70710678", "--out", d.string()}), 0);
  const auto rows = read_csv(d / "measures.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(std::stod(rows[1][3]) / (2 * kPi * kPi), 1.0, 1e-2);
}

TEST(Cli, ExitCodes) {
  const fs::path d = scratch("exit");
  EXPECT_EQ(run({"frobnicate"}), 64);
  EXPECT_EQ(run({}), 64);
  EXPECT_EQ(run({"measure", "--out", d.string()}), 2);
  EXPECT_EQ(run({"measure", "--gen", "torus", "--r", "2", "--out", d.string()}), 2);
  EXPECT_EQ(run({"glue", "--f1", "icosphere:subdiv=3", "--out", d.string()}), 2);
  EXPECT_EQ(run({"measure", "--gen", "torus", "--R", "one", "--out", d.string()}), 2);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST(Cli, NumericalFailureStillWritesDiagnostics) {
  const fs::path d = scratch("fail");
  EXPECT_EQ(run({"theorem", "--f1", "torus:c=0.4,n=64", "--f2", "torus:c=0.6,n=64", "--margin-factor", "1e12",
                 "--alpha-floor", "0.01", "--out", d.string()}),
            3);
  const auto rows = read_csv(d / "harness.csv");
  ASSERT_GE(rows.size(), 6u);
  EXPECT_EQ(rows[1][0], "trial");
  EXPECT_EQ(rows.back()[0], "error");
}

TEST(Cli, FlagsBeatConfig) {
  const fs::path d = scratch("config");
  {
    std::ofstream cfg(d / "run.cfg");
    cfg << "# glue run\nalpha = 0.04\nf1 = torus:c=0.4,n=64\nf2 = torus:c=0.6,n=64\n";
  }
  EXPECT_EQ(run({"glue", "--config", (d / "run.cfg").string(), "--alpha", "0.02", "--out", d.string()}), 0);
  const auto rows = read_csv(d / "glue.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(std::stod(rows[1][0]), 0.02);
  EXPECT_EQ(run({"glue", "--config", (d / "run.cfg").string(), "--out", d.string()}), 0);
  EXPECT_EQ(std::stod(read_csv(d / "glue.csv")[1][0]), 0.04);
  {
    std::ofstream cfg(d / "bad.cfg");
    cfg << "nonsense = 3\n";
  }
  EXPECT_EQ(run({"glue", "--config", (d / "bad.cfg").string(), "--out", d.string()}), 2);
}

TEST(Cli, DeterministicOutputs) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const fs::path& d : {a, b})
    EXPECT_EQ(run({"glue", "--f1", "torus:c=0.4,n=64", "--f2", "torus:c=0.6,n=64", "--out", d.string()}), 0);
  EXPECT_EQ(slurp(a / "glue.csv"), slurp(b / "glue.csv"));
  EXPECT_EQ(slurp(a / "glued.obj"), slurp(b / "glued.obj"));
}

TEST(Cli, TheoremHeadline) {
  const fs::path d = scratch("theorem");
  EXPECT_EQ(run({"theorem", "--f1", "torus:c=0.4", "--f2", "torus:c=0.6", "--out", d.string()}), 0);
  EXPECT_TRUE(fs::exists(d / "glued.obj"));
  const auto rows = read_csv(d / "harness.csv");
  double margin = -1.0, iso = 0.0, iso2 = 0.0;
  for (const auto& r : rows) {
    if (r[0] == "result") {
      margin = std::stod(r[7]);
      iso = std::stod(r[5]);
    }
    if (r[0] == "f2") iso2 = std::stod(r[5]);
  }
  EXPECT_GT(margin, 0.0);
  EXPECT_LE(std::abs(iso - iso2), 1e-3 * iso2);
}

TEST(Cli, InvertAndVary) {
  const fs::path d = scratch("inv");
  EXPECT_EQ(run({"invert", "--gen", "torus", "--c", "0.5", "--n", "64", "--center", "2.5", "0", "0.3", "--out",
                 d.string()}),
            0);
  EXPECT_TRUE(fs::exists(d / "inverted.obj"));
  EXPECT_EQ(run({"invert", "--gen", "torus", "--n", "64", "--out", d.string()}), 2);
  EXPECT_EQ(run({"vary", "--gen", "ellipsoid", "--out", d.string()}), 0);
  EXPECT_EQ(read_csv(d / "variation.csv").size(), 2u);
  EXPECT_EQ(run({"vary", "--gen", "icosphere", "--out", d.string()}), 2);
}
