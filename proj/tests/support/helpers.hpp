#pragma once

// Shared test utilities: seeded random networks/problems and a
// finite-difference Jacobian of the residual used as the derivative oracle.

#include "latmech/equilibrium.hpp"
#include "latmech/network.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <random>
#include <utility>
#include <vector>

namespace testsup {

using namespace latmech;

inline MatX3 random_positions(std::mt19937& rng, int n, Real box = 2.0, Real min_dist = 0.2) {
  std::uniform_real_distribution<Real> coord(0.0, box);
  MatX3 pos(n, 3);
  for (int i = 0; i < n;) {
    const Vec3 candidate{coord(rng), coord(rng), coord(rng)};
    bool ok = true;
    for (int j = 0; j < i && ok; ++j)
      if ((pos.row(j) - candidate).norm() < min_dist) ok = false;
    if (ok) {
      pos.row(i) = candidate;
      ++i;
    }
  }
  return pos;
}

/// Random connected graph: a random spanning tree plus extra edges.
inline Network random_network(std::mt19937& rng, int n_min = 3, int n_max = 30) {
  std::uniform_int_distribution<int> size(n_min, n_max);
  const int n = size(rng);
  const MatX3 pos = random_positions(rng, n);

  std::vector<Bond> bonds;
  std::vector<std::pair<NodeId, NodeId>> used;
  auto has = [&](NodeId a, NodeId b) {
    const auto key = std::minmax(a, b);
    return std::find(used.begin(), used.end(), std::make_pair(key.first, key.second)) != used.end();
  };
  auto add = [&](NodeId a, NodeId b) {
    const auto key = std::minmax(a, b);
    used.emplace_back(key.first, key.second);
    bonds.push_back({a, b});
  };
  for (NodeId v = 1; v < n; ++v) {
    std::uniform_int_distribution<NodeId> parent(0, v - 1);
    add(v, parent(rng));
  }
  std::uniform_int_distribution<int> extra_count(0, n);
  std::uniform_int_distribution<NodeId> pick(0, n - 1);
  const int extras = extra_count(rng);
  for (int t = 0; t < extras; ++t) {
    const NodeId a = pick(rng), b = pick(rng);
    if (a != b && !has(a, b)) add(a, b);
  }
  return build_network(pos, std::move(bonds));
}

inline Partition random_partition(std::mt19937& rng, int n) {
  std::uniform_int_distribution<int> qdist(1, n - 1);
  const int q = qdist(rng);
  std::vector<NodeId> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(q);
  return Partition::from_prescribed(n, std::move(ids));
}

struct RandomCase {
  EquilibriumProblem prob;
  MatX3 x_p;  // perturbed free positions
  std::vector<BondState> states;
};

/// Random problem with a perturbed configuration: prescribed nodes at their
/// reference positions, small random loads, free nodes displaced by
/// perturb_scale, occasionally one broken bond.
inline RandomCase random_case(std::mt19937& rng, const MaterialLaw& law,
                              Real perturb_scale = 0.05, bool maybe_break = true) {
  Network net = random_network(rng);
  const int n = net.node_count();
  Partition part = random_partition(rng, n);
  const int p = part.free_count();
  const int q = part.prescribed_count();

  MatX3 x_q(q, 3);
  for (int i = 0; i < q; ++i) x_q.row(i) = net.reference_positions().row(part.prescribed[i]);
  std::uniform_real_distribution<Real> load(-0.1, 0.1);
  MatX3 b_p(p, 3);
  for (int i = 0; i < p; ++i) b_p.row(i) = Vec3{load(rng), load(rng), load(rng)};

  MatX3 x_p(p, 3);
  std::uniform_real_distribution<Real> bump(-perturb_scale, perturb_scale);
  for (int i = 0; i < p; ++i)
    x_p.row(i) = net.reference_positions().row(part.free[i]) + Vec3{bump(rng), bump(rng), bump(rng)};

  const int m = net.bond_count();
  std::vector<BondState> states(m);
  std::uniform_real_distribution<Real> u01(0.0, 1.0);
  if (maybe_break && u01(rng) < 0.3) {
    std::uniform_int_distribution<int> pick(0, m - 1);
    states[pick(rng)].broken = true;
  }
  EquilibriumProblem prob(std::move(net), law, std::move(part), std::move(x_q), std::move(b_p));
  return RandomCase{std::move(prob), std::move(x_p), std::move(states)};
}

inline Eigen::VectorXd flatten(const MatX3& m) {
  Eigen::VectorXd v(3 * m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) v.segment<3>(3 * i) = m.row(i).transpose();
  return v;
}

/// Central finite differences of the residual, column by column.
inline Eigen::MatrixXd fd_jacobian(const EquilibriumProblem& prob, const MatX3& x_p,
                                   const std::vector<BondState>& states, Real h) {
  const Eigen::Index dim = 3 * x_p.rows();
  Eigen::MatrixXd jfd(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    MatX3 xp = x_p, xm = x_p;
    xp(col / 3, col % 3) += h;
    xm(col / 3, col % 3) -= h;
    jfd.col(col) =
        (flatten(residual(prob, xp, states)) - flatten(residual(prob, xm, states))) / (2.0 * h);
  }
  return jfd;
}

/// Relative Frobenius gap between two matrices.
inline Real rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Real denom = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / denom;
}

}  // namespace testsup
