#pragma once

#include "latmech/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace latmech {

/// One force-carrying connection. Orientation matters for sign bookkeeping
/// only; the equilibrium equations are invariant under flipping it.
struct Bond {
  NodeId start = 0;
  NodeId end = 0;
};

/// Signed m x n incidence matrix: +1 at each bond's start node column, -1 at
/// its end node column, exactly two nonzeros per row.
class IncidenceMatrix {
 public:
  IncidenceMatrix() = default;

  static IncidenceMatrix from_bonds(std::span<const Bond> bonds, int node_count);

  /// Wraps an arbitrary sparse matrix without checking the two-entries-per-row
  /// shape. For deserialization and validation tests; validate_network will
  /// flag malformed rows.
  static IncidenceMatrix from_matrix_unchecked(SpMat a);

  Eigen::Index rows() const { return a_.rows(); }
  Eigen::Index cols() const { return a_.cols(); }
  const SpMat& matrix() const { return a_; }

  /// A * X
  MatX3 apply(const MatX3& x) const { return a_ * x; }
  /// A^T * F
  MatX3 apply_transpose(const MatX3& f) const { return a_.transpose() * f; }

 private:
  SpMat a_;
};

enum class DiagnosticCode {
  MalformedIncidenceRow,
  StaleBondVector,
  StaleRestLength,
  NonPositiveRestLength,
  SelfLoop,
  DuplicateBond,
  DisconnectedGraph,
};

const char* to_string(DiagnosticCode code);

struct Diagnostic {
  DiagnosticCode code;
  int index = -1;  // bond or row index when applicable, -1 otherwise
  std::string message;
};

/// Immutable node/bond graph with its reference geometry: positions D,
/// incidence A, reference bond vectors b = A D and cached rest lengths.
/// Safe to share across concurrent readers.
class Network {
 public:
  Network() = default;

  int node_count() const { return static_cast<int>(positions_.rows()); }
  int bond_count() const { return static_cast<int>(bonds_.size()); }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const IncidenceMatrix& incidence() const { return incidence_; }
  const MatX3& reference_positions() const { return positions_; }
  const MatX3& reference_bond_vectors() const { return bond_vectors_; }
  const VecX& rest_lengths() const { return rest_lengths_; }
  Real mean_rest_length() const { return mean_rest_length_; }
  /// Scale-relative threshold below which a deformed bond counts as collapsed.
  Real degenerate_length_eps() const { return 1e-12 * mean_rest_length_; }

  /// Assembles the parts without re-deriving or checking anything. Intended
  /// for tests and deserialization; pair with validate_network.
  static Network from_parts_unchecked(MatX3 positions, std::vector<Bond> bonds,
                                      IncidenceMatrix incidence, MatX3 bond_vectors,
                                      VecX rest_lengths);

  friend Network build_network(const MatX3& positions, std::vector<Bond> bonds);

 private:
  MatX3 positions_;            // D, n x 3
  std::vector<Bond> bonds_;    // m
  IncidenceMatrix incidence_;  // A, m x n
  MatX3 bond_vectors_;         // b = A D, m x 3
  VecX rest_lengths_;          // |b_i|
  Real mean_rest_length_ = 0.0;
};

/// Builds the incidence matrix with the +1-start/-1-end sign convention,
/// computes b = A D and the rest lengths, and verifies the graph invariants.
/// Throws SelfLoopError, DuplicateBondError, ZeroLengthBondError,
/// DisconnectedGraphError, or std::invalid_argument on malformed input.
Network build_network(const MatX3& positions, std::vector<Bond> bonds);

/// y = A X, one row per bond. Parallel over bonds.
MatX3 deformed_bond_vectors(const Network& net, const MatX3& x);

/// Re-checks every Network invariant; an empty list means valid. Never throws.
std::vector<Diagnostic> validate_network(const Network& net);

}  // namespace latmech
