#pragma once

#include "latmech/equilibrium.hpp"
#include "latmech/material_law.hpp"
#include "latmech/network.hpp"
#include "latmech/types.hpp"

#include <span>

namespace latmech::reference {

// Plain serial re-implementations of the force chain, written directly from
// the per-bond definitions with no incidence matrix, assembly plan, or
// parallelism. Tests use them as the independent oracle for the production
// kernels; the benchmark uses them as the serial baseline.

/// Naive if-chain evaluation of the piecewise force-extension curve,
/// including the quadratic yield blend (integrated from the blended slope).
Real piecewise_force(const MaterialLaw& law, Real extension, BondState state = {});

/// One row per bond, start minus end, plain loop.
MatX3 deformed_bond_vectors(const Network& net, const MatX3& x);

struct Assembled {
  MatX3 y;
  MatX3 f;
  MatX3 nodal;
  VecX bond_norms;
  VecX extensions;
};

/// Bond-by-bond evaluation with rest lengths recomputed from the reference
/// positions, and nodal sums accumulated by scattering each bond force to its
/// endpoints.
Assembled assemble(const Network& net, std::span<const MaterialLaw> laws, const MatX3& x,
                   std::span<const BondState> states);

/// Free-node imbalance computed through the scatter path above.
MatX3 residual(const EquilibriumProblem& prob, const MatX3& x_p,
               std::span<const BondState> states);

}  // namespace latmech::reference
