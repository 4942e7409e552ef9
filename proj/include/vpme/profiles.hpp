#pragma once

#include <array>

#include "vpme/grid.hpp"

namespace vpme {

using Vec3 = std::array<double, 3>;

/// Spatial shape used both for the confining weight g and for the ion density.
struct SpatialProfile {
  enum class Kind { Gaussian, Ball, TwoBump, Point };

  Kind kind = Kind::Gaussian;
  Vec3 center{0.0, 0.0, 0.0};
  double sigma = 0.5;
  double radius = 0.5;
  // Second Gaussian for TwoBump; `weight` is the mass fraction of the first bump.
  Vec3 center2{0.0, 0.0, 0.0};
  double sigma2 = 0.5;
  double weight = 0.5;

  static SpatialProfile gaussian(Vec3 c, double s);
  static SpatialProfile ball(Vec3 c, double r);
  static SpatialProfile two_bump(Vec3 c1, double s1, Vec3 c2, double s2, double w = 0.5);
  static SpatialProfile point(Vec3 c);

  void validate() const;
  /// Continuum probability density at x (Point has none and returns 0).
  double density(const Vec3& x) const;
  /// Upper bound on the continuum sup of the density.
  double peak_density() const;
};

/// Samples the profile at cell centres and rescales so the midpoint integral equals `mass`.
ScalarField discretize(const SpatialProfile& profile, const GridSpec& grid, double mass = 1.0);

}  // namespace vpme
