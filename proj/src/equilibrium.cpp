#include "latmech/equilibrium.hpp"

#include "latmech/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace latmech {

Partition Partition::from_prescribed(int node_count, std::vector<NodeId> prescribed) {
  std::sort(prescribed.begin(), prescribed.end());
  Partition part;
  part.prescribed = std::move(prescribed);
  part.free.reserve(node_count - part.prescribed.size());
  std::size_t next = 0;
  for (NodeId v = 0; v < node_count; ++v) {
    if (next < part.prescribed.size() && part.prescribed[next] == v) {
      ++next;
    } else {
      part.free.push_back(v);
    }
  }
  part.validate(node_count);
  return part;
}

void Partition::validate(int node_count) const {
  if (free.empty()) throw std::invalid_argument("partition: at least one free node required");
  if (prescribed.empty())
    throw std::invalid_argument("partition: at least one prescribed node required");
  std::vector<char> seen(node_count, 0);
  auto mark = [&](const std::vector<NodeId>& ids) {
    for (NodeId v : ids) {
      if (v < 0 || v >= node_count)
        throw std::invalid_argument("partition: node index out of range");
      if (seen[v]) throw std::invalid_argument("partition: node listed twice");
      seen[v] = 1;
    }
  };
  mark(free);
  mark(prescribed);
  if (free.size() + prescribed.size() != static_cast<std::size_t>(node_count))
    throw std::invalid_argument("partition: free and prescribed must cover all nodes");
}

AssemblyPlan AssemblyPlan::build(const Network& net, const Partition& part) {
  const int n = net.node_count();
  const int p = part.free_count();
  AssemblyPlan plan;
  plan.incident.resize(n);
  for (int i = 0; i < net.bond_count(); ++i) {
    const Bond& b = net.bonds()[i];
    plan.incident[b.start].emplace_back(i, 1.0);
    plan.incident[b.end].emplace_back(i, -1.0);
  }

  plan.block_index.assign(n, -1);
  plan.is_free.assign(n, 0);
  for (int r = 0; r < p; ++r) {
    plan.block_index[part.free[r]] = r;
    plan.is_free[part.free[r]] = 1;
  }
  for (int r = 0; r < part.prescribed_count(); ++r) plan.block_index[part.prescribed[r]] = r;

  plan.row_offsets.assign(p + 1, 0);
  std::vector<std::vector<int>> cols(p);
  for (int r = 0; r < p; ++r) {
    const NodeId node = part.free[r];
    cols[r].push_back(r);
    for (const auto& [bond, sign] : plan.incident[node]) {
      const Bond& b = net.bonds()[bond];
      const NodeId other = b.start == node ? b.end : b.start;
      if (plan.is_free[other]) cols[r].push_back(plan.block_index[other]);
    }
    std::sort(cols[r].begin(), cols[r].end());
    cols[r].erase(std::unique(cols[r].begin(), cols[r].end()), cols[r].end());
    plan.row_offsets[r + 1] = plan.row_offsets[r] + static_cast<int>(cols[r].size());
  }
  plan.col_index.reserve(plan.row_offsets[p]);
  for (int r = 0; r < p; ++r)
    plan.col_index.insert(plan.col_index.end(), cols[r].begin(), cols[r].end());
  return plan;
}

EquilibriumProblem::EquilibriumProblem(Network net, MaterialLaw law, Partition part, MatX3 x_q,
                                       MatX3 b_p)
    : EquilibriumProblem(std::make_shared<const Network>(std::move(net)),
                         std::vector<MaterialLaw>{std::move(law)}, std::move(part),
                         std::move(x_q), std::move(b_p)) {}

EquilibriumProblem::EquilibriumProblem(std::shared_ptr<const Network> net,
                                       std::vector<MaterialLaw> bond_laws, Partition part,
                                       MatX3 x_q, MatX3 b_p)
    : net_(std::move(net)),
      laws_(std::move(bond_laws)),
      part_(std::move(part)),
      x_q_(std::move(x_q)),
      b_p_(std::move(b_p)) {
  const int m = net_->bond_count();
  if (laws_.size() == 1 && m > 1) laws_.resize(m, laws_[0]);
  if (static_cast<int>(laws_.size()) != m)
    throw std::invalid_argument("equilibrium problem: need one law (or one per bond)");
  for (const MaterialLaw& law : laws_) law.validate();
  part_.validate(net_->node_count());
  if (x_q_.rows() != part_.prescribed_count())
    throw std::invalid_argument("equilibrium problem: X_Q must have one row per prescribed node");
  if (b_p_.rows() != part_.free_count())
    throw std::invalid_argument("equilibrium problem: B_P must have one row per free node");
  if (!x_q_.allFinite() || !b_p_.allFinite())
    throw std::invalid_argument("equilibrium problem: X_Q and B_P must be finite");
  plan_ = std::make_shared<const AssemblyPlan>(AssemblyPlan::build(*net_, part_));
}

MatX3 EquilibriumProblem::scatter_positions(const MatX3& x_p) const {
  if (x_p.rows() != part_.free_count())
    throw std::invalid_argument("scatter_positions: X_P must have one row per free node");
  MatX3 x(net_->node_count(), 3);
  for (int r = 0; r < part_.free_count(); ++r) x.row(part_.free[r]) = x_p.row(r);
  for (int r = 0; r < part_.prescribed_count(); ++r) x.row(part_.prescribed[r]) = x_q_.row(r);
  return x;
}

MatX3 EquilibriumProblem::reference_free_positions() const {
  MatX3 out(part_.free_count(), 3);
  for (int r = 0; r < part_.free_count(); ++r)
    out.row(r) = net_->reference_positions().row(part_.free[r]);
  return out;
}

std::vector<BondState> EquilibriumProblem::initial_bond_states() const {
  return std::vector<BondState>(net_->bond_count());
}

EquilibriumProblem EquilibriumProblem::with_targets(MatX3 x_q, MatX3 b_p) const {
  EquilibriumProblem copy(*this);
  if (x_q.rows() != part_.prescribed_count() || b_p.rows() != part_.free_count())
    throw std::invalid_argument("with_targets: block shapes do not match the partition");
  if (!x_q.allFinite() || !b_p.allFinite())
    throw std::invalid_argument("with_targets: X_Q and B_P must be finite");
  copy.x_q_ = std::move(x_q);
  copy.b_p_ = std::move(b_p);
  return copy;
}

Eigen::SparseMatrix<Real> BlockSparseMatrix::to_sparse() const {
  std::vector<Eigen::Triplet<Real>> trip;
  trip.reserve(blocks.size() * 9);
  for (int r = 0; r < block_rows; ++r) {
    for (int s = row_offsets[r]; s < row_offsets[r + 1]; ++s) {
      const int c = col_index[s];
      const Mat3& blk = blocks[s];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) trip.emplace_back(3 * r + a, 3 * c + b, blk(a, b));
    }
  }
  Eigen::SparseMatrix<Real> out(dim(), dim());
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

Eigen::MatrixXd BlockSparseMatrix::to_dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim(), dim());
  for (int r = 0; r < block_rows; ++r)
    for (int s = row_offsets[r]; s < row_offsets[r + 1]; ++s)
      out.block<3, 3>(3 * r, 3 * col_index[s]) = blocks[s];
  return out;
}

namespace {

// Bond loop body failures are recorded and re-raised serially for the lowest
// bond index, so the thrown error does not depend on thread interleaving.
template <class Fn>
void parallel_bonds_or_throw(int m, Fn&& body) {
  std::vector<char> failed(m, 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    try {
      body(i);
    } catch (...) {
      failed[i] = 1;
    }
  }
  for (int i = 0; i < m; ++i) {
    if (failed[i]) body(i);  // rethrows
  }
}

}  // namespace

SystemState assemble_state(const EquilibriumProblem& prob, const MatX3& x_p,
                           const std::vector<BondState>& states) {
  const Network& net = prob.net();
  const int m = net.bond_count();
  const int n = net.node_count();
  if (static_cast<int>(states.size()) != m)
    throw std::invalid_argument("assemble_state: one BondState per bond required");
  if (!x_p.allFinite()) throw std::invalid_argument("assemble_state: X_P must be finite");

  SystemState st;
  st.x = prob.scatter_positions(x_p);
  st.y.resize(m, 3);
  st.f.resize(m, 3);
  st.bond_norms.resize(m);
  st.extensions.resize(m);
  st.bond_states = states;

  const auto& bonds = net.bonds();
  const VecX& rest = net.rest_lengths();
  const Real eps = prob.eps_len();

  parallel_bonds_or_throw(m, [&](int i) {
    const Vec3 yi = st.x.row(bonds[i].start) - st.x.row(bonds[i].end);
    const Real norm = yi.norm();
    st.y.row(i) = yi;
    st.bond_norms[i] = norm;
    st.extensions[i] = norm - rest[i];
    const Real coeff = secant_coefficient(prob.law(i), norm, rest[i], states[i], eps);
    st.f.row(i) = coeff * yi;
  });

  // A^T F as a per-node gather with a fixed summation order, so the result is
  // identical for any thread count.
  st.nodal.resize(n, 3);
  const auto& incident = prob.plan().incident;
#pragma omp parallel for schedule(static)
  for (int v = 0; v < n; ++v) {
    Vec3 sum = Vec3::Zero();
    for (const auto& [bond, sign] : incident[v]) sum += sign * st.f.row(bond);
    st.nodal.row(v) = sum;
  }
  return st;
}

MatX3 residual(const EquilibriumProblem& prob, const MatX3& x_p,
               const std::vector<BondState>& states) {
  const SystemState st = assemble_state(prob, x_p, states);
  const Partition& part = prob.partition();
  MatX3 r(part.free_count(), 3);
  for (int i = 0; i < part.free_count(); ++i)
    r.row(i) = st.nodal.row(part.free[i]) - prob.applied_loads().row(i);
  return r;
}

BlockSparseMatrix jacobian(const EquilibriumProblem& prob, const MatX3& x_p,
                           const std::vector<BondState>& states) {
  const Network& net = prob.net();
  const int m = net.bond_count();
  if (static_cast<int>(states.size()) != m)
    throw std::invalid_argument("jacobian: one BondState per bond required");
  const MatX3 x = prob.scatter_positions(x_p);
  const auto& bonds = net.bonds();
  const VecX& rest = net.rest_lengths();
  const Real eps = prob.eps_len();

  // Per-bond 3x3 blocks f'(e) u u^T + (f/|y|)(I - u u^T).
  std::vector<Mat3> hblock(m);
  parallel_bonds_or_throw(m, [&](int i) {
    if (states[i].broken) {
      hblock[i].setZero();
      return;
    }
    const Vec3 yi = x.row(bonds[i].start) - x.row(bonds[i].end);
    const Real norm = yi.norm();
    if (norm == 0.0)
      throw DegenerateBondError("jacobian: bond " + std::to_string(i) +
                                " collapsed to zero length; direction undefined");
    // Below eps the norm is clamped, matching the secant coefficient.
    const Real coeff = secant_coefficient(prob.law(i), norm, rest[i], states[i], eps);
    const Real fprime =
        tangent_modulus_left(prob.law(i), std::max(norm, eps) - rest[i], states[i]);
    const Eigen::Vector3d u = yi.transpose() / norm;
    const Mat3 uut = u * u.transpose();
    hblock[i] = fprime * uut + coeff * (Mat3::Identity() - uut);
  });

  const AssemblyPlan& plan = prob.plan();
  const Partition& part = prob.partition();
  const int p = part.free_count();

  BlockSparseMatrix jac;
  jac.block_rows = p;
  jac.row_offsets = plan.row_offsets;
  jac.col_index = plan.col_index;
  jac.blocks.assign(plan.col_index.size(), Mat3::Zero());

#pragma omp parallel for schedule(static)
  for (int r = 0; r < p; ++r) {
    const NodeId node = part.free[r];
    const int begin = plan.row_offsets[r];
    const int end = plan.row_offsets[r + 1];
    const auto col_pos = [&](int c) {
      const auto first = plan.col_index.begin() + begin;
      const auto last = plan.col_index.begin() + end;
      return static_cast<int>(std::lower_bound(first, last, c) - plan.col_index.begin());
    };
    const int diag = col_pos(r);
    for (const auto& [bond, sign] : plan.incident[node]) {
      jac.blocks[diag] += hblock[bond];
      const Bond& b = bonds[bond];
      const NodeId other = b.start == node ? b.end : b.start;
      if (plan.is_free[other]) jac.blocks[col_pos(plan.block_index[other])] -= hblock[bond];
    }
  }
  return jac;
}

MatX3 reactions(const EquilibriumProblem& prob, const SystemState& state) {
  const Partition& part = prob.partition();
  MatX3 b_q(part.prescribed_count(), 3);
  for (int i = 0; i < part.prescribed_count(); ++i)
    b_q.row(i) = state.nodal.row(part.prescribed[i]);
  return b_q;
}

}  // namespace latmech
