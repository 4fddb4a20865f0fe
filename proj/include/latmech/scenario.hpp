#pragma once

#include "latmech/equilibrium.hpp"
#include "latmech/solver.hpp"

#include <map>
#include <string>
#include <vector>

namespace latmech {

// Scenario files are JSON: nodes, bonds, a map of named material laws,
// prescribed node positions, applied loads and solver overrides. Ids are
// 1-based (arbitrary but unique); internal indices are dense and 0-based.

struct ScenarioNode {
  int id = 0;
  Real x = 0, y = 0, z = 0;
};

struct ScenarioBond {
  int id = 0;
  int start = 0;
  int end = 0;
  std::string law;  // empty: "default", or the single defined law
};

struct PrescribedNode {
  int node = 0;
  Vec3 position = Vec3::Zero();
};

struct NodeLoad {
  int node = 0;
  Vec3 force = Vec3::Zero();
};

struct Scenario {
  std::string name;
  std::map<std::string, std::string> units;  // optional labels, metadata only
  std::map<std::string, MaterialLaw> laws;
  std::vector<ScenarioNode> nodes;
  std::vector<ScenarioBond> bonds;
  std::vector<PrescribedNode> prescribed;
  std::vector<NodeLoad> loads;
  SolverOptions solver;
};

/// Parses and validates a scenario document. Throws ParseError (malformed
/// JSON, missing fields, empty node/bond lists, duplicate ids),
/// UnknownNodeIdError, UnknownLawIdError, or ConflictingConstraintError
/// (a node both prescribed and loaded).
Scenario parse_scenario(const std::string& text);

/// Reads the file and parses it. Throws IoError on read failure.
Scenario load_scenario_file(const std::string& path);

/// Serializes a scenario to JSON. parse_scenario(emit_scenario(s)) == s.
std::string emit_scenario(const Scenario& sc);

/// Built-in examples: "triangle" (3 nodes, 3 bonds, node 3 prescribed,
/// symmetric radial loads on nodes 1 and 2) and "octahedron" (regular
/// octahedron: 6 vertices, 12 edges of equal length, one face prescribed,
/// a small load on the opposite apex).
Scenario generate_example(const std::string& name);

/// nx x ny x nz lattice with unit spacing and nearest-neighbor bonds along
/// the axes; the x=0 plane is prescribed. Requires nx >= 2 and ny, nz >= 1
/// (throws InvalidGridDimensionsError).
Scenario generate_grid(int nx, int ny, int nz);

/// A scenario compiled to an EquilibriumProblem, keeping the id maps needed
/// to label outputs.
struct BuiltScenario {
  EquilibriumProblem problem;
  std::vector<int> node_ids;  // internal node index -> scenario id
  std::vector<int> bond_ids;  // internal bond index -> scenario id
};

BuiltScenario build_problem(const Scenario& sc);

enum class ResultFormat { csv, json, all };

struct EmitOptions {
  ResultFormat format = ResultFormat::all;
  bool timestamp = true;      // add a timestamp field to report.json
  bool write_history = false; // also write history.csv (sweep output)
};

/// Writes positions.csv, forces.csv, reactions.csv, report.json and
/// optionally history.csv into out_dir. Deterministic contents; values at
/// 17 significant digits. Throws IoError.
void emit_results(const SolveReport& report, const BuiltScenario& built,
                  const std::string& out_dir, const EmitOptions& opts = {});

}  // namespace latmech
