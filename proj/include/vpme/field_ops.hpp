#pragma once

#include <limits>

#include "vpme/grid.hpp"

namespace vpme {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// E = -∇u: second-order central differences inside, second-order one-sided on faces.
VectorField negative_gradient(const ScalarField& u);

/// 7-point Laplacian on interior cells; the one-cell face layer is left at zero.
ScalarField laplacian_7pt(const ScalarField& u);

/// true for cells not touching a face of the box.
bool is_interior(const GridSpec& grid, int i, int j, int k) noexcept;

/// Midpoint-rule L^p norm, p in [1, inf].
double lp_norm(const ScalarField& u, double p);
double lp_norm(const VectorField& e, double p);

/// Weak-L^p quasi-norm sup_t t * |{|u| > t}|^{1/p}, with t swept over sample magnitudes.
double weak_lp_quasinorm(const ScalarField& u, double p);
double weak_lp_quasinorm(const VectorField& e, double p);

struct NormReport {
  double l1 = 0.0;
  double l53 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double weak_l3 = 0.0;
  double weak_l32 = 0.0;
};

NormReport norm_report(const ScalarField& u);

/// Sampled C^{0,alpha} seminorm over cell pairs at most `reach` cells apart per axis.
double holder_quotient(const VectorField& e, double alpha, int reach = 2);

/// Sum over box edges of (u_i - u_j)^2 h: the discrete ∫|∇u|^2 whose variation is -2 Δ_7 u.
double dirichlet_energy(const ScalarField& u);

/// Discrete ∫ ∇a · ∇b over box edges.
double dirichlet_product(const ScalarField& a, const ScalarField& b);

/// Midpoint-rule ∫ a b.
double inner_product(const ScalarField& a, const ScalarField& b);

}  // namespace vpme
