#include "latmech/scenario.hpp"

#include "latmech/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace latmech {

using nlohmann::json;

namespace {

[[noreturn]] void fail_parse(const std::string& where, const std::string& what) {
  throw ParseError("scenario: " + where + ": " + what);
}

Real require_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number())
    fail_parse(where, "missing numeric field '" + key + "'");
  return obj[key].get<Real>();
}

int require_int(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number_integer())
    fail_parse(where, "missing integer field '" + key + "'");
  return obj[key].get<int>();
}

Vec3 require_vec3(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_array() || obj[key].size() != 3)
    fail_parse(where, "field '" + key + "' must be an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!obj[key][i].is_number()) fail_parse(where, "field '" + key + "' must be numeric");
    v[i] = obj[key][i].get<Real>();
  }
  return v;
}

MaterialLaw parse_law(const json& obj, const std::string& where) {
  MaterialLaw law;
  law.stiffness = require_number(obj, "stiffness", where);
  law.yield_extension = require_number(obj, "yield_extension", where);
  law.hardening_ratio = require_number(obj, "hardening_ratio", where);
  law.fracture_extension = require_number(obj, "fracture_extension", where);
  if (obj.contains("compression")) {
    if (!obj["compression"].is_string()) fail_parse(where, "'compression' must be a string");
    try {
      law.compression = compression_mode_from_string(obj["compression"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail_parse(where, e.what());
    }
  }
  if (obj.contains("smoothing_radius"))
    law.smoothing_radius = require_number(obj, "smoothing_radius", where);
  try {
    law.validate();
  } catch (const std::invalid_argument& e) {
    fail_parse(where, e.what());
  }
  return law;
}

void parse_solver(const json& obj, SolverOptions& opts) {
  const std::string where = "solver";
  if (obj.contains("tol_residual")) opts.tol_residual = require_number(obj, "tol_residual", where);
  if (obj.contains("max_iterations")) opts.max_iterations = require_int(obj, "max_iterations", where);
  if (obj.contains("damping")) opts.damping = require_number(obj, "damping", where);
  if (obj.contains("line_search_beta"))
    opts.line_search_beta = require_number(obj, "line_search_beta", where);
  if (obj.contains("max_backtracks")) opts.max_backtracks = require_int(obj, "max_backtracks", where);
  if (obj.contains("load_steps")) opts.load_steps = require_int(obj, "load_steps", where);
  if (obj.contains("allow_fracture")) {
    if (!obj["allow_fracture"].is_boolean()) fail_parse(where, "'allow_fracture' must be a bool");
    opts.allow_fracture = obj["allow_fracture"].get<bool>();
  }
  try {
    opts.validate();
  } catch (const std::invalid_argument& e) {
    fail_parse(where, e.what());
  }
}

json law_to_json(const MaterialLaw& law) {
  return json{{"stiffness", law.stiffness},
              {"yield_extension", law.yield_extension},
              {"hardening_ratio", law.hardening_ratio},
              {"fracture_extension", law.fracture_extension},
              {"compression", to_string(law.compression)},
              {"smoothing_radius", law.smoothing_radius}};
}

json solver_to_json(const SolverOptions& opts) {
  return json{{"tol_residual", opts.tol_residual},
              {"max_iterations", opts.max_iterations},
              {"damping", opts.damping},
              {"line_search_beta", opts.line_search_beta},
              {"max_backtracks", opts.max_backtracks},
              {"load_steps", opts.load_steps},
              {"allow_fracture", opts.allow_fracture}};
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("scenario: top level must be an object");

  Scenario sc;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) fail_parse("name", "must be a string");
    sc.name = doc["name"].get<std::string>();
  }
  if (doc.contains("units")) {
    if (!doc["units"].is_object()) fail_parse("units", "must be an object");
    for (const auto& [key, value] : doc["units"].items()) {
      if (!value.is_string()) fail_parse("units", "labels must be strings");
      sc.units[key] = value.get<std::string>();
    }
  }

  if (!doc.contains("laws") || !doc["laws"].is_object() || doc["laws"].empty())
    fail_parse("laws", "at least one material law required");
  for (const auto& [id, value] : doc["laws"].items())
    sc.laws[id] = parse_law(value, "laws." + id);

  if (!doc.contains("nodes") || !doc["nodes"].is_array() || doc["nodes"].empty())
    fail_parse("nodes", "nonempty array required");
  std::set<int> node_ids;
  for (const auto& item : doc["nodes"]) {
    ScenarioNode node;
    node.id = require_int(item, "id", "nodes");
    node.x = require_number(item, "x", "nodes");
    node.y = require_number(item, "y", "nodes");
    node.z = require_number(item, "z", "nodes");
    if (node.id < 1) fail_parse("nodes", "ids must be >= 1");
    if (!node_ids.insert(node.id).second)
      fail_parse("nodes", "duplicate node id " + std::to_string(node.id));
    sc.nodes.push_back(node);
  }

  if (!doc.contains("bonds") || !doc["bonds"].is_array() || doc["bonds"].empty())
    fail_parse("bonds", "nonempty array required");
  std::set<int> bond_ids;
  for (const auto& item : doc["bonds"]) {
    ScenarioBond bond;
    bond.id = require_int(item, "id", "bonds");
    bond.start = require_int(item, "start", "bonds");
    bond.end = require_int(item, "end", "bonds");
    if (item.contains("law")) {
      if (!item["law"].is_string()) fail_parse("bonds", "'law' must be a string id");
      bond.law = item["law"].get<std::string>();
    }
    if (bond.id < 1) fail_parse("bonds", "ids must be >= 1");
    if (!bond_ids.insert(bond.id).second)
      fail_parse("bonds", "duplicate bond id " + std::to_string(bond.id));
    for (int endpoint : {bond.start, bond.end})
      if (!node_ids.count(endpoint))
        throw UnknownNodeIdError("scenario: bond " + std::to_string(bond.id) +
                                 " references unknown node " + std::to_string(endpoint));
    if (!bond.law.empty() && !sc.laws.count(bond.law))
      throw UnknownLawIdError("scenario: bond " + std::to_string(bond.id) +
                              " references unknown law '" + bond.law + "'");
    sc.bonds.push_back(bond);
  }

  std::set<int> prescribed_ids;
  if (doc.contains("prescribed")) {
    if (!doc["prescribed"].is_array()) fail_parse("prescribed", "must be an array");
    for (const auto& item : doc["prescribed"]) {
      PrescribedNode entry;
      entry.node = require_int(item, "node", "prescribed");
      entry.position = require_vec3(item, "position", "prescribed");
      if (!node_ids.count(entry.node))
        throw UnknownNodeIdError("scenario: prescribed references unknown node " +
                                 std::to_string(entry.node));
      if (!prescribed_ids.insert(entry.node).second)
        fail_parse("prescribed", "node " + std::to_string(entry.node) + " listed twice");
      sc.prescribed.push_back(entry);
    }
  }

  std::set<int> loaded_ids;
  if (doc.contains("loads")) {
    if (!doc["loads"].is_array()) fail_parse("loads", "must be an array");
    for (const auto& item : doc["loads"]) {
      NodeLoad entry;
      entry.node = require_int(item, "node", "loads");
      entry.force = require_vec3(item, "force", "loads");
      if (!node_ids.count(entry.node))
        throw UnknownNodeIdError("scenario: load references unknown node " +
                                 std::to_string(entry.node));
      if (!loaded_ids.insert(entry.node).second)
        fail_parse("loads", "node " + std::to_string(entry.node) + " loaded twice");
      if (prescribed_ids.count(entry.node))
        throw ConflictingConstraintError("scenario: node " + std::to_string(entry.node) +
                                         " is both prescribed and loaded");
      sc.loads.push_back(entry);
    }
  }

  // resolve defaulted bond laws so the document round-trips explicitly
  for (ScenarioBond& bond : sc.bonds) {
    if (bond.law.empty()) {
      if (sc.laws.count("default"))
        bond.law = "default";
      else if (sc.laws.size() == 1)
        bond.law = sc.laws.begin()->first;
      else
        throw UnknownLawIdError("scenario: bond " + std::to_string(bond.id) +
                                " has no law and no 'default' law is defined");
    }
  }

  if (doc.contains("solver")) {
    if (!doc["solver"].is_object()) fail_parse("solver", "must be an object");
    parse_solver(doc["solver"], sc.solver);
  }
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string emit_scenario(const Scenario& sc) {
  json doc;
  doc["name"] = sc.name;
  if (!sc.units.empty()) {
    json units = json::object();
    for (const auto& [key, value] : sc.units) units[key] = value;
    doc["units"] = units;
  }
  json laws = json::object();
  for (const auto& [id, law] : sc.laws) laws[id] = law_to_json(law);
  doc["laws"] = laws;
  doc["nodes"] = json::array();
  for (const ScenarioNode& n : sc.nodes)
    doc["nodes"].push_back(json{{"id", n.id}, {"x", n.x}, {"y", n.y}, {"z", n.z}});
  doc["bonds"] = json::array();
  for (const ScenarioBond& b : sc.bonds)
    doc["bonds"].push_back(json{{"id", b.id}, {"start", b.start}, {"end", b.end}, {"law", b.law}});
  doc["prescribed"] = json::array();
  for (const PrescribedNode& p : sc.prescribed)
    doc["prescribed"].push_back(
        json{{"node", p.node}, {"position", {p.position[0], p.position[1], p.position[2]}}});
  doc["loads"] = json::array();
  for (const NodeLoad& l : sc.loads)
    doc["loads"].push_back(json{{"node", l.node}, {"force", {l.force[0], l.force[1], l.force[2]}}});
  doc["solver"] = solver_to_json(sc.solver);
  return doc.dump(2) + "\n";
}

Scenario generate_example(const std::string& name) {
  if (name == "triangle") {
    Scenario sc;
    sc.name = "triangle";
    sc.laws["default"] = MaterialLaw{};
    sc.nodes = {{1, 1.0, 1.0, 0.0}, {2, 2.0, 1.0, 1.0}, {3, 1.0, 2.0, 1.0}};
    sc.bonds = {{1, 1, 2, "default"}, {2, 2, 3, "default"}, {3, 3, 1, "default"}};
    sc.prescribed = {{3, Vec3{1.0, 2.0, 1.0}}};
    // equal-magnitude pulls directed away from the prescribed node
    const Vec3 d1{1.0, 1.0, 0.0}, d2{2.0, 1.0, 1.0}, d3{1.0, 2.0, 1.0};
    const Real mag = 0.01;
    sc.loads = {{1, mag * (d1 - d3).normalized()}, {2, mag * (d2 - d3).normalized()}};
    return sc;
  }
  if (name == "octahedron") {
    Scenario sc;
    sc.name = "octahedron";
    sc.laws["default"] = MaterialLaw{};
    sc.nodes = {{1, 1.0, 0.0, 0.0},  {2, -1.0, 0.0, 0.0}, {3, 0.0, 1.0, 0.0},
                {4, 0.0, -1.0, 0.0}, {5, 0.0, 0.0, 1.0},  {6, 0.0, 0.0, -1.0}};
    // every vertex pair except the three antipodal ones
    const std::vector<std::pair<int, int>> edges = {{1, 3}, {1, 4}, {1, 5}, {1, 6},
                                                    {2, 3}, {2, 4}, {2, 5}, {2, 6},
                                                    {3, 5}, {3, 6}, {4, 5}, {4, 6}};
    int next_id = 1;
    for (const auto& [s, e] : edges) sc.bonds.push_back({next_id++, s, e, "default"});
    // hold one face, push the apex of the opposite face sideways
    sc.prescribed = {{1, Vec3{1.0, 0.0, 0.0}}, {3, Vec3{0.0, 1.0, 0.0}}, {5, Vec3{0.0, 0.0, 1.0}}};
    sc.loads = {{6, Vec3{0.01, 0.0, 0.0}}};
    return sc;
  }
  throw std::invalid_argument("generate_example: unknown example '" + name +
                              "' (expected 'triangle' or 'octahedron')");
}

Scenario generate_grid(int nx, int ny, int nz) {
  if (nx < 2 || ny < 1 || nz < 1)
    throw InvalidGridDimensionsError("grid: need nx >= 2 (one prescribed plane plus free nodes) "
                                     "and ny, nz >= 1");
  Scenario sc;
  sc.name = "grid_" + std::to_string(nx) + "x" + std::to_string(ny) + "x" + std::to_string(nz);
  sc.laws["default"] = MaterialLaw{};
  const auto id_of = [&](int i, int j, int k) { return 1 + i + nx * (j + ny * k); };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        sc.nodes.push_back({id_of(i, j, k), static_cast<Real>(i), static_cast<Real>(j),
                            static_cast<Real>(k)});
  int next_id = 1;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (i + 1 < nx) sc.bonds.push_back({next_id++, id_of(i, j, k), id_of(i + 1, j, k), "default"});
        if (j + 1 < ny) sc.bonds.push_back({next_id++, id_of(i, j, k), id_of(i, j + 1, k), "default"});
        if (k + 1 < nz) sc.bonds.push_back({next_id++, id_of(i, j, k), id_of(i, j, k + 1), "default"});
      }
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      sc.prescribed.push_back(
          {id_of(0, j, k), Vec3{0.0, static_cast<Real>(j), static_cast<Real>(k)}});
  return sc;
}

BuiltScenario build_problem(const Scenario& sc) {
  std::vector<ScenarioNode> nodes = sc.nodes;
  std::sort(nodes.begin(), nodes.end(),
            [](const ScenarioNode& a, const ScenarioNode& b) { return a.id < b.id; });

  std::map<int, NodeId> to_index;
  std::vector<int> node_ids;
  MatX3 positions(static_cast<Eigen::Index>(nodes.size()), 3);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    to_index[nodes[i].id] = static_cast<NodeId>(i);
    node_ids.push_back(nodes[i].id);
    positions.row(static_cast<Eigen::Index>(i)) = Vec3{nodes[i].x, nodes[i].y, nodes[i].z};
  }

  std::vector<Bond> bonds;
  std::vector<MaterialLaw> laws;
  std::vector<int> bond_ids;
  for (const ScenarioBond& b : sc.bonds) {
    bonds.push_back({to_index.at(b.start), to_index.at(b.end)});
    const auto law_it = sc.laws.find(b.law);
    if (law_it == sc.laws.end())
      throw UnknownLawIdError("scenario: bond " + std::to_string(b.id) +
                              " references unknown law '" + b.law + "'");
    laws.push_back(law_it->second);
    bond_ids.push_back(b.id);
  }

  auto net = std::make_shared<const Network>(build_network(positions, std::move(bonds)));

  std::vector<std::pair<NodeId, Vec3>> prescribed;
  for (const PrescribedNode& p : sc.prescribed)
    prescribed.emplace_back(to_index.at(p.node), p.position);
  std::sort(prescribed.begin(), prescribed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<NodeId> prescribed_idx;
  MatX3 x_q(static_cast<Eigen::Index>(prescribed.size()), 3);
  for (std::size_t i = 0; i < prescribed.size(); ++i) {
    prescribed_idx.push_back(prescribed[i].first);
    x_q.row(static_cast<Eigen::Index>(i)) = prescribed[i].second;
  }

  Partition part = Partition::from_prescribed(net->node_count(), prescribed_idx);

  MatX3 b_p = MatX3::Zero(part.free_count(), 3);
  std::map<NodeId, int> free_row;
  for (int r = 0; r < part.free_count(); ++r) free_row[part.free[r]] = r;
  for (const NodeLoad& l : sc.loads) {
    const NodeId idx = to_index.at(l.node);
    const auto row = free_row.find(idx);
    if (row == free_row.end())
      throw ConflictingConstraintError("scenario: node " + std::to_string(l.node) +
                                       " is both prescribed and loaded");
    b_p.row(row->second) = l.force;
  }

  EquilibriumProblem problem(net, std::move(laws), std::move(part), std::move(x_q),
                             std::move(b_p));
  return BuiltScenario{std::move(problem), std::move(node_ids), std::move(bond_ids)};
}

namespace {

std::string fmt17(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

json matrix_to_json(const MatX3& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return rows;
}

json vector_to_json(const VecX& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

void emit_results(const SolveReport& report, const BuiltScenario& built,
                  const std::string& out_dir, const EmitOptions& opts) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "'");
  const fs::path dir(out_dir);

  const Network& net = built.problem.net();
  const Partition& part = built.problem.partition();

  // per-bond extensions at the final state, for the forces table
  VecX extensions(net.bond_count());
  for (int i = 0; i < net.bond_count(); ++i) {
    const Bond& b = net.bonds()[i];
    extensions[i] = (report.x.row(b.start) - report.x.row(b.end)).norm() - net.rest_lengths()[i];
  }

  const bool write_csv = opts.format != ResultFormat::json;
  const bool write_json = opts.format != ResultFormat::csv;

  if (write_csv) {
    {
      auto out = open_out(dir / "positions.csv");
      out << "node,x,y,z\n";
      for (int i = 0; i < net.node_count(); ++i)
        out << built.node_ids[i] << ',' << fmt17(report.x(i, 0)) << ',' << fmt17(report.x(i, 1))
            << ',' << fmt17(report.x(i, 2)) << '\n';
    }
    {
      auto out = open_out(dir / "forces.csv");
      out << "bond,fx,fy,fz,magnitude,extension\n";
      for (int i = 0; i < net.bond_count(); ++i)
        out << built.bond_ids[i] << ',' << fmt17(report.f(i, 0)) << ',' << fmt17(report.f(i, 1))
            << ',' << fmt17(report.f(i, 2)) << ',' << fmt17(report.f.row(i).norm()) << ','
            << fmt17(extensions[i]) << '\n';
    }
    {
      auto out = open_out(dir / "reactions.csv");
      out << "node,rx,ry,rz\n";
      for (int i = 0; i < part.prescribed_count(); ++i)
        out << built.node_ids[part.prescribed[i]] << ',' << fmt17(report.b_q(i, 0)) << ','
            << fmt17(report.b_q(i, 1)) << ',' << fmt17(report.b_q(i, 2)) << '\n';
    }
    {
      auto out = open_out(dir / "broken_bonds.csv");
      out << "bond\n";
      for (int idx : report.broken_bonds) out << built.bond_ids[idx] << '\n';
    }
    if (opts.write_history) {
      auto out = open_out(dir / "history.csv");
      out << "step,bond,extension,force\n";
      for (std::size_t s = 0; s < report.per_step_history.size(); ++s) {
        const StepHistory& h = report.per_step_history[s];
        for (int i = 0; i < net.bond_count(); ++i)
          out << (s + 1) << ',' << built.bond_ids[i] << ',' << fmt17(h.extensions[i]) << ','
              << fmt17(h.force_magnitudes[i]) << '\n';
      }
    }
  }

  if (write_json) {
    json doc;
    doc["status"] = to_string(report.status);
    doc["newton_iterations"] = report.newton_iterations;
    doc["final_residual_norm"] = report.final_residual_norm;
    doc["last_converged_step"] = report.last_converged_step;
    doc["node_ids"] = built.node_ids;
    doc["bond_ids"] = built.bond_ids;
    doc["positions"] = matrix_to_json(report.x);
    doc["forces"] = matrix_to_json(report.f);
    json reaction_nodes = json::array();
    for (int i = 0; i < part.prescribed_count(); ++i)
      reaction_nodes.push_back(built.node_ids[part.prescribed[i]]);
    doc["reaction_nodes"] = reaction_nodes;
    doc["reactions"] = matrix_to_json(report.b_q);
    json broken = json::array();
    for (int idx : report.broken_bonds) broken.push_back(built.bond_ids[idx]);
    doc["broken_bonds"] = broken;
    json trace = json::array();
    for (const IterationRecord& it : report.trace)
      trace.push_back(json{{"residual_norm", it.residual_norm},
                           {"step_norm", it.step_norm},
                           {"lambda", it.lambda},
                           {"backtracks", it.backtracks},
                           {"load_step", it.load_step},
                           {"fracture_round", it.fracture_round}});
    doc["trace"] = trace;
    json history = json::array();
    for (const StepHistory& h : report.per_step_history)
      history.push_back(json{{"extensions", vector_to_json(h.extensions)},
                             {"force_magnitudes", vector_to_json(h.force_magnitudes)}});
    doc["history"] = history;
    if (opts.timestamp) doc["timestamp"] = utc_timestamp();
    auto out = open_out(dir / "report.json");
    out << doc.dump(2) << '\n';
  }
}

}  // namespace latmech
