#include "latmech/material_law.hpp"

#include "latmech/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace latmech {

const char* to_string(CompressionMode mode) {
  switch (mode) {
    case CompressionMode::symmetric:
      return "symmetric";
    case CompressionMode::linear_only:
      return "linear_only";
  }
  return "unknown";
}

CompressionMode compression_mode_from_string(const std::string& name) {
  if (name == "symmetric") return CompressionMode::symmetric;
  if (name == "linear_only") return CompressionMode::linear_only;
  throw std::invalid_argument("unknown compression mode: '" + name + "'");
}

void MaterialLaw::validate() const {
  if (!(stiffness > 0.0)) throw std::invalid_argument("material law: stiffness must be > 0");
  if (!(yield_extension > 0.0))
    throw std::invalid_argument("material law: yield_extension must be > 0");
  if (!(hardening_ratio >= 0.0 && hardening_ratio < 1.0))
    throw std::invalid_argument("material law: hardening_ratio must be in [0, 1)");
  if (!(fracture_extension > yield_extension))
    throw std::invalid_argument("material law: fracture_extension must exceed yield_extension");
  if (!(smoothing_radius >= 0.0))
    throw std::invalid_argument("material law: smoothing_radius must be >= 0");
  if (smoothing_radius > 0.0) {
    if (!(smoothing_radius < yield_extension / 2.0))
      throw std::invalid_argument("material law: smoothing_radius must be < yield_extension/2");
    if (!(smoothing_radius < (fracture_extension - yield_extension) / 2.0))
      throw std::invalid_argument(
          "material law: smoothing_radius must be < (fracture_extension - yield_extension)/2");
  }
}

namespace {

// Unsmoothed tension branch, a >= 0.
Real tension_value(const MaterialLaw& law, Real a) {
  if (a <= law.yield_extension) return law.stiffness * a;
  if (a <= law.fracture_extension)
    return law.stiffness * law.yield_extension +
           law.hardening_ratio * law.stiffness * (a - law.yield_extension);
  return 0.0;
}

bool in_yield_blend(const MaterialLaw& law, Real a) {
  return law.smoothing_radius > 0.0 && std::abs(a - law.yield_extension) < law.smoothing_radius;
}

// Quadratic blend across the yield kink. Matches value and slope of the
// elastic segment at e_y - r and of the hardening segment at e_y + r.
Real yield_blend_value(const MaterialLaw& law, Real a) {
  const Real s1 = law.stiffness;
  const Real s2 = law.hardening_ratio * law.stiffness;
  const Real r = law.smoothing_radius;
  const Real d = a - law.yield_extension;
  return law.stiffness * law.yield_extension + s1 * d + (s2 - s1) / (4.0 * r) * (d + r) * (d + r);
}

Real yield_blend_slope(const MaterialLaw& law, Real a) {
  const Real s1 = law.stiffness;
  const Real s2 = law.hardening_ratio * law.stiffness;
  const Real r = law.smoothing_radius;
  return s1 + (s2 - s1) / (2.0 * r) * (a - law.yield_extension + r);
}

Real tension_value_smoothed(const MaterialLaw& law, Real a) {
  if (in_yield_blend(law, a)) return yield_blend_value(law, a);
  return tension_value(law, a);
}

// Slope of the tension branch off non-differentiable points.
Real tension_slope_smoothed(const MaterialLaw& law, Real a) {
  if (in_yield_blend(law, a)) return yield_blend_slope(law, a);
  if (a < law.yield_extension) return law.stiffness;
  if (a <= law.fracture_extension) return law.hardening_ratio * law.stiffness;
  return 0.0;
}

Real signed_value(const MaterialLaw& law, Real e) {
  if (e >= 0.0) return tension_value_smoothed(law, e);
  if (law.compression == CompressionMode::linear_only) return law.stiffness * e;
  return -tension_value_smoothed(law, -e);
}

void require_finite(Real e) {
  if (!std::isfinite(e)) throw NonFiniteExtensionError("extension is not finite");
}

// Is the current curve non-differentiable at e?
bool at_kink(const MaterialLaw& law, Real e) {
  const Real a = std::abs(e);
  if (e < 0.0 && law.compression == CompressionMode::linear_only) return false;
  if (a == law.fracture_extension) return true;  // the drop is never smoothed
  if (law.smoothing_radius == 0.0 && a == law.yield_extension) return true;
  return false;
}

}  // namespace

Real force_magnitude(const MaterialLaw& law, Real extension, BondState state) {
  require_finite(extension);
  if (state.broken) return 0.0;
  return signed_value(law, extension);
}

Real tangent_modulus(const MaterialLaw& law, Real extension, BondState state) {
  require_finite(extension);
  if (state.broken) return 0.0;
  if (at_kink(law, extension))
    throw KinkAmbiguityError("force-extension law is not differentiable at extension " +
                             std::to_string(extension) + "; use the left-limit convention");
  if (extension >= 0.0) return tension_slope_smoothed(law, extension);
  if (law.compression == CompressionMode::linear_only) return law.stiffness;
  // symmetric: d/de [-g(-e)] = g'(-e)
  return tension_slope_smoothed(law, -extension);
}

Real tangent_modulus_left(const MaterialLaw& law, Real extension, BondState state) {
  require_finite(extension);
  if (state.broken) return 0.0;
  if (!at_kink(law, extension)) return tangent_modulus(law, extension, state);
  // Left limit of f' at the boundary. Tension boundaries see the slope of the
  // segment below; mirrored compression boundaries see the segment above in
  // |e|, because e decreasing means |e| increasing.
  const Real k = law.stiffness;
  const Real hk = law.hardening_ratio * law.stiffness;
  if (extension > 0.0) return extension == law.yield_extension ? k : hk;
  return -extension == law.yield_extension ? hk : 0.0;
}

Real smooth_evaluate(const MaterialLaw& law, Real extension) {
  if (law.smoothing_radius == 0.0)
    throw SmoothingDisabledError("smooth_evaluate requires smoothing_radius > 0");
  require_finite(extension);
  return signed_value(law, extension);
}

Real secant_coefficient(const MaterialLaw& law, Real y_norm, Real rest_length, BondState state,
                        Real eps_len) {
  if (!(rest_length > 0.0)) throw std::invalid_argument("secant_coefficient: rest_length must be > 0");
  if (!std::isfinite(y_norm) || y_norm < 0.0)
    throw std::invalid_argument("secant_coefficient: y_norm must be finite and >= 0");
  if (state.broken) return 0.0;
  const Real eps = eps_len < 0.0 ? 1e-12 * rest_length : eps_len;
  if (y_norm >= eps) return signed_value(law, y_norm - rest_length) / y_norm;
  // Collapsed bond. Clamp the norm at eps so the reconstructed force
  // F = c * y stays bounded by |f(eps - rest)| instead of blowing up.
  if (law.compression == CompressionMode::symmetric && rest_length - eps > law.fracture_extension)
    throw DegenerateBondError(
        "bond collapsed to zero length past the compressive fracture point of a symmetric law");
  return signed_value(law, eps - rest_length) / eps;
}

}  // namespace latmech
