#include "latmech/network.hpp"

#include "latmech/errors.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace latmech {

IncidenceMatrix IncidenceMatrix::from_bonds(std::span<const Bond> bonds, int node_count) {
  std::vector<Eigen::Triplet<Real>> triplets;
  triplets.reserve(2 * bonds.size());
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    triplets.emplace_back(static_cast<int>(i), bonds[i].start, 1.0);
    triplets.emplace_back(static_cast<int>(i), bonds[i].end, -1.0);
  }
  SpMat a(static_cast<Eigen::Index>(bonds.size()), node_count);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  IncidenceMatrix out;
  out.a_ = std::move(a);
  return out;
}

IncidenceMatrix IncidenceMatrix::from_matrix_unchecked(SpMat a) {
  IncidenceMatrix out;
  out.a_ = std::move(a);
  out.a_.makeCompressed();
  return out;
}

const char* to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::MalformedIncidenceRow:
      return "MalformedIncidenceRow";
    case DiagnosticCode::StaleBondVector:
      return "StaleBondVector";
    case DiagnosticCode::StaleRestLength:
      return "StaleRestLength";
    case DiagnosticCode::NonPositiveRestLength:
      return "NonPositiveRestLength";
    case DiagnosticCode::SelfLoop:
      return "SelfLoop";
    case DiagnosticCode::DuplicateBond:
      return "DuplicateBond";
    case DiagnosticCode::DisconnectedGraph:
      return "DisconnectedGraph";
  }
  return "Unknown";
}

namespace {

bool graph_connected(int n, const std::vector<Bond>& bonds) {
  if (n <= 0) return false;
  std::vector<std::vector<int>> adj(n);
  for (const Bond& b : bonds) {
    adj[b.start].push_back(b.end);
    adj[b.end].push_back(b.start);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == n;
}

std::pair<NodeId, NodeId> undirected_key(const Bond& b) {
  return {std::min(b.start, b.end), std::max(b.start, b.end)};
}

}  // namespace

Network build_network(const MatX3& positions, std::vector<Bond> bonds) {
  const int n = static_cast<int>(positions.rows());
  if (n < 2) throw std::invalid_argument("build_network: at least 2 nodes required");
  if (bonds.empty()) throw std::invalid_argument("build_network: bond list is empty");
  if (!positions.allFinite())
    throw std::invalid_argument("build_network: positions must be finite");

  std::set<std::pair<NodeId, NodeId>> seen;
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    const Bond& b = bonds[i];
    if (b.start < 0 || b.start >= n || b.end < 0 || b.end >= n)
      throw std::invalid_argument("build_network: bond " + std::to_string(i) +
                                  " references a node outside [0, n)");
    if (b.start == b.end)
      throw SelfLoopError("bond " + std::to_string(i) + " connects node " +
                          std::to_string(b.start) + " to itself");
    if (!seen.insert(undirected_key(b)).second)
      throw DuplicateBondError("bond " + std::to_string(i) + " duplicates the node pair (" +
                               std::to_string(b.start) + ", " + std::to_string(b.end) + ")");
  }

  Network net;
  net.positions_ = positions;
  net.bonds_ = std::move(bonds);
  net.incidence_ = IncidenceMatrix::from_bonds(net.bonds_, n);
  net.bond_vectors_ = net.incidence_.apply(net.positions_);
  const int m = net.bond_count();
  net.rest_lengths_ = net.bond_vectors_.rowwise().norm();
  for (int i = 0; i < m; ++i) {
    if (!(net.rest_lengths_[i] > 0.0))
      throw ZeroLengthBondError("bond " + std::to_string(i) + " has zero reference length");
  }
  net.mean_rest_length_ = net.rest_lengths_.mean();

  if (!graph_connected(n, net.bonds_))
    throw DisconnectedGraphError("the bond graph is not connected");
  return net;
}

Network Network::from_parts_unchecked(MatX3 positions, std::vector<Bond> bonds,
                                      IncidenceMatrix incidence, MatX3 bond_vectors,
                                      VecX rest_lengths) {
  Network net;
  net.positions_ = std::move(positions);
  net.bonds_ = std::move(bonds);
  net.incidence_ = std::move(incidence);
  net.bond_vectors_ = std::move(bond_vectors);
  net.rest_lengths_ = std::move(rest_lengths);
  net.mean_rest_length_ = net.rest_lengths_.size() > 0 ? net.rest_lengths_.mean() : 0.0;
  return net;
}

MatX3 deformed_bond_vectors(const Network& net, const MatX3& x) {
  if (x.rows() != net.node_count())
    throw std::invalid_argument("deformed_bond_vectors: X must have one row per node");
  const auto& bonds = net.bonds();
  const int m = net.bond_count();
  MatX3 y(m, 3);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    y.row(i) = x.row(bonds[i].start) - x.row(bonds[i].end);
  }
  return y;
}

std::vector<Diagnostic> validate_network(const Network& net) {
  std::vector<Diagnostic> out;
  const int n = net.node_count();
  const int m = net.bond_count();
  const SpMat& a = net.incidence().matrix();

  if (a.rows() != m || a.cols() != n) {
    out.push_back({DiagnosticCode::MalformedIncidenceRow, -1,
                   "incidence matrix shape does not match node/bond counts"});
    return out;
  }

  for (int i = 0; i < m; ++i) {
    int plus = 0, minus = 0, other = 0;
    for (SpMat::InnerIterator it(a, i); it; ++it) {
      if (it.value() == 1.0)
        ++plus;
      else if (it.value() == -1.0)
        ++minus;
      else if (it.value() != 0.0)
        ++other;
    }
    if (plus != 1 || minus != 1 || other != 0)
      out.push_back({DiagnosticCode::MalformedIncidenceRow, i,
                     "incidence row " + std::to_string(i) +
                         " does not have exactly one +1 and one -1"});
  }

  std::set<std::pair<NodeId, NodeId>> seen;
  for (int i = 0; i < m; ++i) {
    const Bond& b = net.bonds()[i];
    if (b.start == b.end)
      out.push_back({DiagnosticCode::SelfLoop, i, "bond " + std::to_string(i) + " is a self loop"});
    else if (!seen.insert(undirected_key(b)).second)
      out.push_back(
          {DiagnosticCode::DuplicateBond, i, "bond " + std::to_string(i) + " is a duplicate"});
  }

  const MatX3 expected_b = net.incidence().apply(net.reference_positions());
  for (int i = 0; i < m; ++i) {
    if (net.reference_bond_vectors().row(i) != expected_b.row(i)) {
      out.push_back({DiagnosticCode::StaleBondVector, i,
                     "bond vector row " + std::to_string(i) + " does not equal (A D) row"});
    }
  }

  if (net.rest_lengths().size() != m) {
    out.push_back({DiagnosticCode::StaleRestLength, -1, "rest length vector has wrong size"});
  } else {
    for (int i = 0; i < m; ++i) {
      const Real expect = net.reference_bond_vectors().row(i).norm();
      if (net.rest_lengths()[i] != expect)
        out.push_back({DiagnosticCode::StaleRestLength, i,
                       "rest length " + std::to_string(i) + " does not equal |b_" +
                           std::to_string(i) + "|"});
      if (!(net.rest_lengths()[i] > 0.0))
        out.push_back({DiagnosticCode::NonPositiveRestLength, i,
                       "rest length " + std::to_string(i) + " is not positive"});
    }
  }

  if (!graph_connected(n, net.bonds()))
    out.push_back({DiagnosticCode::DisconnectedGraph, -1, "the bond graph is not connected"});
  return out;
}

}  // namespace latmech
