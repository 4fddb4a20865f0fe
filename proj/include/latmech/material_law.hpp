#pragma once

#include "latmech/types.hpp"

#include <string>

namespace latmech {

enum class CompressionMode {
  /// Compression mirrors the tension curve with sign (yield, hardening and
  /// fracture all apply at negative extensions as well).
  symmetric,
  /// Compression stays linear at the elastic stiffness, with no yield or
  /// fracture; tension is unaffected.
  linear_only,
};

const char* to_string(CompressionMode mode);
CompressionMode compression_mode_from_string(const std::string& name);

/// Trilinear force-extension law: linear elastic up to yield_extension,
/// linear hardening up to fracture_extension, zero force beyond. An optional
/// smoothing radius replaces the slope kink at the yield point by a quadratic
/// C1 blend; the fracture drop itself is never smoothed.
struct MaterialLaw {
  Real stiffness = 1.0;            // k, force per unit extension, > 0
  Real yield_extension = 0.5;      // e_y > 0
  Real hardening_ratio = 0.1;      // h in [0, 1)
  Real fracture_extension = 1.0;   // e_f > e_y
  CompressionMode compression = CompressionMode::symmetric;
  Real smoothing_radius = 0.0;     // r >= 0, r < e_y/2 and r < (e_f - e_y)/2

  /// Throws std::invalid_argument if the parameters violate the invariants
  /// above (blend zones must not straddle a regime boundary).
  void validate() const;
};

/// Per-bond damage flag. Breaking is monotone within a solve history: a
/// broken bond never carries force again.
struct BondState {
  bool broken = false;
};

/// Signed bond force f(e) for extension e = |y| - |b|. Negative under
/// compression so that F = (f(e)/|y|) y points the right way. Broken bonds
/// and extensions past the fracture point return 0.
Real force_magnitude(const MaterialLaw& law, Real extension, BondState state = {});

/// Exact slope f'(e), consistent with force_magnitude including smoothing.
/// Throws KinkAmbiguityError when the law is not differentiable at e (an
/// unsmoothed regime boundary, or the fracture drop).
Real tangent_modulus(const MaterialLaw& law, Real extension, BondState state = {});

/// Like tangent_modulus but resolves non-differentiable points with the
/// left-limit slope. This is the convention used by Jacobian assembly.
Real tangent_modulus_left(const MaterialLaw& law, Real extension, BondState state = {});

/// The C1-blended curve. Requires smoothing_radius > 0 (throws
/// SmoothingDisabledError otherwise); equal to force_magnitude away from the
/// blend zones.
Real smooth_evaluate(const MaterialLaw& law, Real extension);

/// Diagonal entry f(|y| - rest)/|y| mapping a deformed bond vector to its
/// force vector. For collapsed bonds (|y| < eps_len) the norm is clamped at
/// eps_len so the reconstructed force stays bounded; symmetric-mode laws that
/// are already past compressive fracture at collapse throw
/// DegenerateBondError. eps_len < 0 means "derive from rest_length"
/// (1e-12 * rest_length).
Real secant_coefficient(const MaterialLaw& law, Real y_norm, Real rest_length,
                        BondState state = {}, Real eps_len = -1.0);

}  // namespace latmech
