#include "vpme/profiles.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace vpme {
namespace {

double gaussian_density(const Vec3& x, const Vec3& c, double s) {
  double r2 = 0.0;
  for (int a = 0; a < 3; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
  return std::exp(-r2 / (2.0 * s * s)) / std::pow(2.0 * std::numbers::pi * s * s, 1.5);
}

}  // namespace

SpatialProfile SpatialProfile::gaussian(Vec3 c, double s) {
  SpatialProfile p;
  p.kind = Kind::Gaussian;
  p.center = c;
  p.sigma = s;
  return p;
}

SpatialProfile SpatialProfile::ball(Vec3 c, double r) {
  SpatialProfile p;
  p.kind = Kind::Ball;
  p.center = c;
  p.radius = r;
  return p;
}

SpatialProfile SpatialProfile::two_bump(Vec3 c1, double s1, Vec3 c2, double s2, double w) {
  SpatialProfile p;
  p.kind = Kind::TwoBump;
  p.center = c1;
  p.sigma = s1;
  p.center2 = c2;
  p.sigma2 = s2;
  p.weight = w;
  return p;
}

SpatialProfile SpatialProfile::point(Vec3 c) {
  SpatialProfile p;
  p.kind = Kind::Point;
  p.center = c;
  return p;
}

void SpatialProfile::validate() const {
  switch (kind) {
    case Kind::Gaussian:
      require(sigma > 0.0, ErrorCode::InvalidSpec, "gaussian sigma must be positive");
      break;
    case Kind::Ball:
      require(radius > 0.0, ErrorCode::InvalidSpec, "ball radius must be positive");
      break;
    case Kind::TwoBump:
      require(sigma > 0.0 && sigma2 > 0.0, ErrorCode::InvalidSpec, "bump widths must be positive");
      require(weight >= 0.0 && weight <= 1.0, ErrorCode::InvalidSpec, "bump weight must lie in [0,1]");
      break;
    case Kind::Point:
      break;
  }
}

double SpatialProfile::density(const Vec3& x) const {
  switch (kind) {
    case Kind::Gaussian:
      return gaussian_density(x, center, sigma);
    case Kind::Ball: {
      double r2 = 0.0;
      for (int a = 0; a < 3; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
      return r2 <= radius * radius ? 3.0 / (4.0 * std::numbers::pi * radius * radius * radius) : 0.0;
    }
    case Kind::TwoBump:
      return weight * gaussian_density(x, center, sigma) +
             (1.0 - weight) * gaussian_density(x, center2, sigma2);
    case Kind::Point:
      return 0.0;
  }
  return 0.0;
}

double SpatialProfile::peak_density() const {
  switch (kind) {
    case Kind::Gaussian:
      return gaussian_density(center, center, sigma);
    case Kind::Ball:
      return 3.0 / (4.0 * std::numbers::pi * radius * radius * radius);
    case Kind::TwoBump:
      return weight * gaussian_density(center, center, sigma) +
             (1.0 - weight) * gaussian_density(center2, center2, sigma2);
    case Kind::Point:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

ScalarField discretize(const SpatialProfile& profile, const GridSpec& grid, double mass) {
  profile.validate();
  ScalarField f(grid);
  if (profile.kind == SpatialProfile::Kind::Point) {
    const double h = grid.spacing();
    int idx[3];
    for (int a = 0; a < 3; ++a) {
      idx[a] = static_cast<int>(std::floor((profile.center[a] + grid.half_width()) / h));
      require(idx[a] >= 0 && idx[a] < grid.cells(), ErrorCode::InvalidSpec, "point lies outside the grid");
    }
    f.at(idx[0], idx[1], idx[2]) = mass / grid.cell_volume();
    return f;
  }
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = profile.density(grid.position(i));
  const double total = f.integral();
  require(total > 0.0, ErrorCode::InvalidSpec, "profile has no mass on this grid");
  f *= mass / total;
  return f;
}

}  // namespace vpme
