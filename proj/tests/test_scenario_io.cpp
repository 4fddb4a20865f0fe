#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "latmech/errors.hpp"
#include "latmech/scenario.hpp"
#include "latmech/solver.hpp"

#include <Eigen/Dense>

#include <json.hpp>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace latmech;
namespace fs = std::filesystem;

namespace {

const char* kTriangleDoc = R"({
  "name": "triangle",
  "laws": {
    "default": {
      "stiffness": 1.0,
      "yield_extension": 0.5,
      "hardening_ratio": 0.1,
      "fracture_extension": 1.0
    }
  },
  "nodes": [
    {"id": 1, "x": 1.0, "y": 1.0, "z": 0.0},
    {"id": 2, "x": 2.0, "y": 1.0, "z": 1.0},
    {"id": 3, "x": 1.0, "y": 2.0, "z": 1.0}
  ],
  "bonds": [
    {"id": 1, "start": 1, "end": 2},
    {"id": 2, "start": 2, "end": 3},
    {"id": 3, "start": 3, "end": 1}
  ],
  "prescribed": [{"node": 3, "position": [1.0, 2.0, 1.0]}],
  "loads": [{"node": 1, "force": [0.01, 0.0, 0.0]}]
})";

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("latmech_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("parse the documented triangle scenario") {
  const Scenario sc = parse_scenario(kTriangleDoc);
  CHECK(sc.name == "triangle");
  CHECK(sc.nodes.size() == 3);
  CHECK(sc.bonds.size() == 3);
  REQUIRE(sc.prescribed.size() == 1);
  CHECK(sc.prescribed[0].node == 3);
  CHECK(sc.bonds[0].law == "default");  // filled in from the single defined law
  CHECK(sc.solver.tol_residual == doctest::Approx(1e-10));

  const BuiltScenario built = build_problem(sc);
  CHECK(built.problem.net().node_count() == 3);
  CHECK(built.problem.partition().prescribed == std::vector<NodeId>{2});
  CHECK(built.problem.applied_loads().row(0) == Vec3{0.01, 0.0, 0.0});
  CHECK(built.node_ids == std::vector<int>{1, 2, 3});
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_scenario("not json"), ParseError);
  CHECK_THROWS_AS(parse_scenario("[1,2]"), ParseError);

  nlohmann::json doc = nlohmann::json::parse(kTriangleDoc);

  SUBCASE("empty bonds") {
    doc["bonds"] = nlohmann::json::array();
    CHECK_THROWS_AS(parse_scenario(doc.dump()), ParseError);
  }
  SUBCASE("missing laws") {
    doc.erase("laws");
    CHECK_THROWS_AS(parse_scenario(doc.dump()), ParseError);
  }
  SUBCASE("duplicate node id") {
    doc["nodes"][1]["id"] = 1;
    CHECK_THROWS_AS(parse_scenario(doc.dump()), ParseError);
  }
  SUBCASE("unknown node in a bond") {
    doc["bonds"][0]["end"] = 9;
    CHECK_THROWS_AS(parse_scenario(doc.dump()), UnknownNodeIdError);
  }
  SUBCASE("unknown law id") {
    doc["bonds"][0]["law"] = "does_not_exist";
    CHECK_THROWS_AS(parse_scenario(doc.dump()), UnknownLawIdError);
  }
  SUBCASE("node both prescribed and loaded") {
    doc["loads"][0]["node"] = 3;
    CHECK_THROWS_AS(parse_scenario(doc.dump()), ConflictingConstraintError);
  }
  SUBCASE("invalid law parameters") {
    doc["laws"]["default"]["stiffness"] = -1.0;
    CHECK_THROWS_AS(parse_scenario(doc.dump()), ParseError);
  }
}

TEST_CASE("emit then parse is the identity") {
  Scenario sc = generate_example("triangle");
  sc.units["length"] = "m";
  sc.units["force"] = "N";
  sc.solver.load_steps = 7;
  sc.solver.tol_residual = 3.25e-11;
  const Scenario back = parse_scenario(emit_scenario(sc));
  CHECK(back.name == sc.name);
  CHECK(back.units == sc.units);
  REQUIRE(back.nodes.size() == sc.nodes.size());
  for (std::size_t i = 0; i < sc.nodes.size(); ++i) {
    CHECK(back.nodes[i].id == sc.nodes[i].id);
    CHECK(back.nodes[i].x == sc.nodes[i].x);
    CHECK(back.nodes[i].y == sc.nodes[i].y);
    CHECK(back.nodes[i].z == sc.nodes[i].z);
  }
  REQUIRE(back.bonds.size() == sc.bonds.size());
  for (std::size_t i = 0; i < sc.bonds.size(); ++i) {
    CHECK(back.bonds[i].id == sc.bonds[i].id);
    CHECK(back.bonds[i].start == sc.bonds[i].start);
    CHECK(back.bonds[i].end == sc.bonds[i].end);
    CHECK(back.bonds[i].law == sc.bonds[i].law);
  }
  REQUIRE(back.prescribed.size() == sc.prescribed.size());
  for (std::size_t i = 0; i < sc.prescribed.size(); ++i)
    CHECK(back.prescribed[i].position == sc.prescribed[i].position);
  REQUIRE(back.loads.size() == sc.loads.size());
  for (std::size_t i = 0; i < sc.loads.size(); ++i)
    CHECK(back.loads[i].force == sc.loads[i].force);
  REQUIRE(back.laws.size() == sc.laws.size());
  for (const auto& [id, law] : sc.laws) {
    const MaterialLaw& parsed = back.laws.at(id);
    CHECK(parsed.stiffness == law.stiffness);
    CHECK(parsed.yield_extension == law.yield_extension);
    CHECK(parsed.hardening_ratio == law.hardening_ratio);
    CHECK(parsed.fracture_extension == law.fracture_extension);
    CHECK(parsed.compression == law.compression);
    CHECK(parsed.smoothing_radius == law.smoothing_radius);
  }
  CHECK(back.solver.load_steps == 7);
  CHECK(back.solver.tol_residual == 3.25e-11);
  // a second round trip is byte-identical
  CHECK(emit_scenario(back) == emit_scenario(sc));
}

TEST_CASE("generated triangle reproduces the documented coordinates") {
  const Scenario sc = generate_example("triangle");
  REQUIRE(sc.nodes.size() == 3);
  CHECK(sc.nodes[0].x == 1.0);
  CHECK(sc.nodes[0].y == 1.0);
  CHECK(sc.nodes[0].z == 0.0);
  CHECK(sc.nodes[1].x == 2.0);
  CHECK(sc.nodes[1].y == 1.0);
  CHECK(sc.nodes[1].z == 1.0);
  CHECK(sc.nodes[2].x == 1.0);
  CHECK(sc.nodes[2].y == 2.0);
  CHECK(sc.nodes[2].z == 1.0);
  CHECK(sc.bonds.size() == 3);
  // loads are torque-free about the prescribed node
  const BuiltScenario built = build_problem(sc);
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();
  const MatX3 d = built.problem.net().reference_positions();
  for (int i = 0; i < 2; ++i) {
    const Eigen::Vector3d arm = (d.row(i) - d.row(2)).transpose();
    torque += arm.cross(built.problem.applied_loads().row(i).transpose());
  }
  CHECK(torque.norm() < 1e-15);
}

TEST_CASE("generated octahedron is regular") {
  const Scenario sc = generate_example("octahedron");
  CHECK(sc.nodes.size() == 6);
  CHECK(sc.bonds.size() == 12);
  const BuiltScenario built = build_problem(sc);
  const VecX rest = built.problem.net().rest_lengths();
  // all edge lengths equal, by the independent pairwise-distance oracle
  for (int i = 0; i < rest.size(); ++i) {
    CHECK(std::fabs(rest[i] - rest[0]) < 1e-12);
    CHECK(rest[i] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }
  CHECK(built.problem.partition().prescribed_count() == 3);
  CHECK_THROWS_AS(generate_example("dodecahedron"), std::invalid_argument);
}

TEST_CASE("grid generator") {
  const Scenario two = generate_grid(2, 1, 1);
  CHECK(two.nodes.size() == 2);
  CHECK(two.bonds.size() == 1);
  const BuiltScenario built = build_problem(two);
  CHECK(built.problem.partition().free_count() == 1);

  const Scenario box = generate_grid(3, 2, 2);
  CHECK(box.nodes.size() == 12);
  // bonds: x: 2*2*2=8, y: 3*1*2=6, z: 3*2*1=6
  CHECK(box.bonds.size() == 20);
  const BuiltScenario box_built = build_problem(box);
  CHECK(validate_network(box_built.problem.net()).empty());
  CHECK(box_built.problem.partition().prescribed_count() == 4);

  CHECK_THROWS_AS(generate_grid(1, 1, 1), InvalidGridDimensionsError);
  CHECK_THROWS_AS(generate_grid(0, 2, 2), InvalidGridDimensionsError);
  CHECK_THROWS_AS(generate_grid(2, 0, 1), InvalidGridDimensionsError);
}

TEST_CASE("sparse scenario ids are remapped densely") {
  nlohmann::json doc = nlohmann::json::parse(kTriangleDoc);
  doc["nodes"][0]["id"] = 10;
  doc["nodes"][1]["id"] = 20;
  doc["nodes"][2]["id"] = 30;
  doc["bonds"][0] = {{"id", 5}, {"start", 10}, {"end", 20}};
  doc["bonds"][1] = {{"id", 6}, {"start", 20}, {"end", 30}};
  doc["bonds"][2] = {{"id", 7}, {"start", 30}, {"end", 10}};
  doc["prescribed"][0]["node"] = 30;
  doc["loads"][0]["node"] = 10;
  const BuiltScenario built = build_problem(parse_scenario(doc.dump()));
  CHECK(built.node_ids == std::vector<int>{10, 20, 30});
  CHECK(built.bond_ids == std::vector<int>{5, 6, 7});
  CHECK(built.problem.partition().prescribed == std::vector<NodeId>{2});
}

TEST_CASE("emit_results writes the documented files") {
  const Scenario sc = generate_example("triangle");
  const BuiltScenario built = build_problem(sc);
  const SolveReport report = solve(built.problem, sc.solver);
  REQUIRE(report.status == SolveStatus::Converged);

  TempDir tmp;
  EmitOptions opts;
  opts.timestamp = false;
  emit_results(report, built, tmp.path.string(), opts);

  CHECK(fs::exists(tmp.path / "positions.csv"));
  CHECK(fs::exists(tmp.path / "forces.csv"));
  CHECK(fs::exists(tmp.path / "reactions.csv"));
  CHECK(fs::exists(tmp.path / "report.json"));
  CHECK(fs::exists(tmp.path / "broken_bonds.csv"));
  CHECK(!fs::exists(tmp.path / "history.csv"));

  // positions: header + one row per node; values round-trip at full precision
  {
    std::istringstream in(slurp(tmp.path / "positions.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "node,x,y,z");
    int rows = 0;
    while (std::getline(in, line)) {
      int id;
      double x, y, z;
      REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &id, &x, &y, &z) == 4);
      CHECK(id == built.node_ids[rows]);
      CHECK(x == report.x(rows, 0));
      CHECK(y == report.x(rows, 1));
      CHECK(z == report.x(rows, 2));
      ++rows;
    }
    CHECK(rows == 3);
  }
  // reactions: exactly one prescribed node
  {
    std::istringstream in(slurp(tmp.path / "reactions.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "node,rx,ry,rz");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 1);
  }
  // report.json re-parses to the same values at full precision
  {
    const nlohmann::json doc = nlohmann::json::parse(slurp(tmp.path / "report.json"));
    CHECK(doc["status"] == "Converged");
    CHECK(!doc.contains("timestamp"));
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c) {
        CHECK(doc["positions"][i][c].get<double>() == report.x(i, c));
        CHECK(doc["forces"][i][c].get<double>() == report.f(i, c));
      }
    CHECK(doc["reactions"][0][0].get<double>() == report.b_q(0, 0));
    CHECK(doc["final_residual_norm"].get<double>() == report.final_residual_norm);
    CHECK(doc["trace"].size() == report.trace.size());
  }
  // identical emission is byte-identical when the timestamp is disabled
  {
    TempDir tmp2;
    emit_results(report, built, tmp2.path.string(), opts);
    CHECK(slurp(tmp2.path / "report.json") == slurp(tmp.path / "report.json"));
    CHECK(slurp(tmp2.path / "positions.csv") == slurp(tmp.path / "positions.csv"));
  }
}

TEST_CASE("broken bonds land in the broken file and history is sweep-only") {
  // chain whose soft bond fractures under the displacement ramp
  nlohmann::json doc;
  doc["name"] = "bar";
  doc["laws"]["soft"] = {{"stiffness", 1.0},
                         {"yield_extension", 0.5},
                         {"hardening_ratio", 0.1},
                         {"fracture_extension", 1.0}};
  doc["laws"]["stiff"] = {{"stiffness", 1e4},
                          {"yield_extension", 1e6},
                          {"hardening_ratio", 0.0},
                          {"fracture_extension", 2e6}};
  doc["nodes"] = {{{"id", 1}, {"x", 0.0}, {"y", 0.0}, {"z", 0.0}},
                  {{"id", 2}, {"x", 1.0}, {"y", 0.0}, {"z", 0.0}},
                  {{"id", 3}, {"x", 2.0}, {"y", 0.0}, {"z", 0.0}}};
  doc["bonds"] = {{{"id", 1}, {"start", 1}, {"end", 2}, {"law", "soft"}},
                  {{"id", 2}, {"start", 2}, {"end", 3}, {"law", "stiff"}}};
  doc["prescribed"] = {{{"node", 1}, {"position", {0.0, 0.0, 0.0}}},
                       {{"node", 3}, {"position", {3.4, 0.0, 0.0}}}};
  doc["solver"] = {{"load_steps", 14}};

  const Scenario sc = parse_scenario(doc.dump());
  const BuiltScenario built = build_problem(sc);
  const SolveReport report = load_sweep(built.problem, sc.solver);
  REQUIRE(report.status == SolveStatus::Converged);
  REQUIRE(report.broken_bonds == std::vector<int>{0});

  TempDir tmp;
  EmitOptions opts;
  opts.timestamp = false;
  opts.write_history = true;
  emit_results(report, built, tmp.path.string(), opts);

  CHECK(slurp(tmp.path / "broken_bonds.csv") == "bond\n1\n");
  std::istringstream in(slurp(tmp.path / "history.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,bond,extension,force");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 14 * 2);
}

TEST_CASE("csv-only and json-only formats") {
  const Scenario sc = generate_example("triangle");
  const BuiltScenario built = build_problem(sc);
  const SolveReport report = solve(built.problem, sc.solver);
  TempDir tmp;
  EmitOptions opts;
  opts.format = ResultFormat::json;
  emit_results(report, built, tmp.path.string(), opts);
  CHECK(fs::exists(tmp.path / "report.json"));
  CHECK(!fs::exists(tmp.path / "positions.csv"));
  TempDir tmp2;
  opts.format = ResultFormat::csv;
  emit_results(report, built, tmp2.path.string(), opts);
  CHECK(!fs::exists(tmp2.path / "report.json"));
  CHECK(fs::exists(tmp2.path / "positions.csv"));
}
