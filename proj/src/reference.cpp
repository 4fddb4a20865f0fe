#include "latmech/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace latmech::reference {

Real piecewise_force(const MaterialLaw& law, Real extension, BondState state) {
  if (state.broken) return 0.0;
  if (!std::isfinite(extension)) throw std::invalid_argument("piecewise_force: non-finite extension");

  const Real k = law.stiffness;
  const Real ey = law.yield_extension;
  const Real ef = law.fracture_extension;
  const Real h = law.hardening_ratio;
  const Real r = law.smoothing_radius;

  if (extension < 0.0 && law.compression == CompressionMode::linear_only) return k * extension;

  const Real sign = extension < 0.0 ? -1.0 : 1.0;
  const Real a = std::fabs(extension);

  Real value;
  if (r > 0.0 && a > ey - r && a < ey + r) {
    // value at the blend entry plus the integral of the linearly varying slope
    const Real t = a - (ey - r);
    value = k * (ey - r) + k * t + (h * k - k) * t * t / (4.0 * r);
  } else if (a <= ey) {
    value = k * a;
  } else if (a <= ef) {
    value = k * ey + h * k * (a - ey);
  } else {
    value = 0.0;
  }
  return sign * value;
}

MatX3 deformed_bond_vectors(const Network& net, const MatX3& x) {
  MatX3 y(net.bond_count(), 3);
  for (int i = 0; i < net.bond_count(); ++i) {
    const Bond& b = net.bonds()[i];
    y.row(i) = x.row(b.start) - x.row(b.end);
  }
  return y;
}

Assembled assemble(const Network& net, std::span<const MaterialLaw> laws, const MatX3& x,
                   std::span<const BondState> states) {
  const int m = net.bond_count();
  if (laws.size() != static_cast<std::size_t>(m) && laws.size() != 1)
    throw std::invalid_argument("reference::assemble: need one law or one per bond");
  if (states.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("reference::assemble: one BondState per bond required");

  Assembled out;
  out.y.resize(m, 3);
  out.f.resize(m, 3);
  out.bond_norms.resize(m);
  out.extensions.resize(m);
  out.nodal = MatX3::Zero(net.node_count(), 3);

  const MatX3& d = net.reference_positions();
  for (int i = 0; i < m; ++i) {
    const Bond& b = net.bonds()[i];
    const Vec3 yi = x.row(b.start) - x.row(b.end);
    const Real norm = yi.norm();
    const Real rest = (d.row(b.start) - d.row(b.end)).norm();
    const MaterialLaw& law = laws.size() == 1 ? laws[0] : laws[i];
    const Real f = piecewise_force(law, norm - rest, states[i]);
    out.y.row(i) = yi;
    out.bond_norms[i] = norm;
    out.extensions[i] = norm - rest;
    out.f.row(i) = (f / norm) * yi;
    out.nodal.row(b.start) += out.f.row(i);
    out.nodal.row(b.end) -= out.f.row(i);
  }
  return out;
}

MatX3 residual(const EquilibriumProblem& prob, const MatX3& x_p,
               std::span<const BondState> states) {
  const MatX3 x = prob.scatter_positions(x_p);
  const Assembled a = assemble(prob.net(), prob.laws(), x, states);
  const Partition& part = prob.partition();
  MatX3 r(part.free_count(), 3);
  for (int i = 0; i < part.free_count(); ++i)
    r.row(i) = a.nodal.row(part.free[i]) - prob.applied_loads().row(i);
  return r;
}

}  // namespace latmech::reference
