#pragma once

#include "latmech/material_law.hpp"
#include "latmech/network.hpp"
#include "latmech/types.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace latmech {

/// Split of the node set: free nodes have unknown positions and known applied
/// loads; prescribed nodes have known positions and unknown reactions.
struct Partition {
  std::vector<NodeId> free;
  std::vector<NodeId> prescribed;

  int free_count() const { return static_cast<int>(free.size()); }
  int prescribed_count() const { return static_cast<int>(prescribed.size()); }

  /// free = ascending complement of the prescribed set.
  static Partition from_prescribed(int node_count, std::vector<NodeId> prescribed);

  /// Disjoint cover of [0, n), p >= 1, q >= 1. Throws std::invalid_argument.
  void validate(int node_count) const;
};

/// Gather/scatter structure shared by the parallel kernels: per-node incident
/// bonds with signs, and the 3x3-block sparsity of the free-free Jacobian.
/// Derived from (Network, Partition) once, immutable afterwards.
struct AssemblyPlan {
  std::vector<std::vector<std::pair<int, Real>>> incident;  // node -> (bond, sign)
  std::vector<int> block_index;                             // node -> row within its block
  std::vector<char> is_free;                                // node -> 1 if free
  std::vector<int> row_offsets;                             // p+1 block-row offsets
  std::vector<int> col_index;  // sorted free block columns per row, diagonal included

  static AssemblyPlan build(const Network& net, const Partition& part);
};

/// Network + law + partition + prescribed positions X_Q + applied loads B_P.
/// Immutable and cheap to copy (the network and plan are shared).
class EquilibriumProblem {
 public:
  EquilibriumProblem(Network net, MaterialLaw law, Partition part, MatX3 x_q, MatX3 b_p);
  EquilibriumProblem(std::shared_ptr<const Network> net, std::vector<MaterialLaw> bond_laws,
                     Partition part, MatX3 x_q, MatX3 b_p);

  const Network& net() const { return *net_; }
  std::shared_ptr<const Network> network_ptr() const { return net_; }
  const Partition& partition() const { return part_; }
  const MaterialLaw& law(int bond) const { return laws_[bond]; }
  const std::vector<MaterialLaw>& laws() const { return laws_; }
  const MatX3& prescribed_positions() const { return x_q_; }
  const MatX3& applied_loads() const { return b_p_; }
  const AssemblyPlan& plan() const { return *plan_; }
  Real eps_len() const { return net_->degenerate_length_eps(); }

  /// Full n x 3 positions from the free block, with X_Q filled in.
  MatX3 scatter_positions(const MatX3& x_p) const;
  /// Reference positions of the free nodes (the default initial guess).
  MatX3 reference_free_positions() const;
  /// All-unbroken state vector, one entry per bond.
  std::vector<BondState> initial_bond_states() const;

  /// Same network, laws, partition and plan; new targets. Used by load
  /// stepping.
  EquilibriumProblem with_targets(MatX3 x_q, MatX3 b_p) const;

 private:
  std::shared_ptr<const Network> net_;
  std::vector<MaterialLaw> laws_;  // one per bond
  Partition part_;
  MatX3 x_q_;  // q x 3
  MatX3 b_p_;  // p x 3
  std::shared_ptr<const AssemblyPlan> plan_;
};

/// Everything derived from one position vector: y = A X, bond forces
/// F_i = (f(e_i)/|y_i|) y_i, and the nodal sums A^T F.
struct SystemState {
  MatX3 x;          // n x 3
  MatX3 y;          // m x 3
  MatX3 f;          // m x 3
  MatX3 nodal;      // n x 3
  VecX bond_norms;  // |y_i|
  VecX extensions;  // |y_i| - rest_i
  std::vector<BondState> bond_states;
};

/// Symmetric sparse matrix stored as 3x3 dense blocks in block-CSR over the
/// free nodes.
struct BlockSparseMatrix {
  int block_rows = 0;
  std::vector<int> row_offsets;  // block_rows + 1
  std::vector<int> col_index;    // block columns, sorted within each row
  std::vector<Mat3> blocks;

  Eigen::Index dim() const { return 3 * static_cast<Eigen::Index>(block_rows); }
  /// Scalar 3p x 3p copy for factorization and tests.
  Eigen::SparseMatrix<Real> to_sparse() const;
  Eigen::MatrixXd to_dense() const;
};

/// Scatters X_P into the full configuration and evaluates the force chain.
/// Parallel over bonds, then a deterministic per-node gather.
SystemState assemble_state(const EquilibriumProblem& prob, const MatX3& x_p,
                           const std::vector<BondState>& states);

/// Free-node force imbalance, R = (A^T F) restricted to free rows - B_P.
MatX3 residual(const EquilibriumProblem& prob, const MatX3& x_p,
               const std::vector<BondState>& states);

/// Analytic derivative of the residual with respect to the free positions.
/// Per-bond block f'(e) u u^T + (f/|y|)(I - u u^T), scattered with incidence
/// signs; kink slopes use the left-limit convention.
BlockSparseMatrix jacobian(const EquilibriumProblem& prob, const MatX3& x_p,
                           const std::vector<BondState>& states);

/// Reaction block B_Q: rows of A^T F at the prescribed nodes.
MatX3 reactions(const EquilibriumProblem& prob, const SystemState& state);

}  // namespace latmech
