#pragma once

#include <vector>

#include "vpme/electrostatics.hpp"
#include "vpme/kinetics.hpp"

namespace vpme {

struct EnergyReport {
  double t = 0.0;
  /// ∫|v|² f, a particle sum.
  double kinetic = 0.0;
  /// ∫|E|² by midpoint quadrature.
  double field = 0.0;
  /// 2∫(U-1) g e^U.
  double electron_V = 0.0;
  /// 2∫φ g e^φ with φ = U - log m.
  double electron_F = 0.0;
  double total_V = 0.0;
  double total_F = 0.0;
  double electron_mass = 0.0;

  double total(ChargeMode mode) const {
    return mode == ChargeMode::VariableCharge ? total_V : total_F;
  }
};

EnergyReport energy(const PotentialSplit& split, const ScalarField& g, const ParticleEnsemble& ens,
                    double t = 0.0);
/// Throws StaleState unless the cached field matches the current positions.
EnergyReport energy(const SimulationState& state);

struct MomentReport {
  std::vector<double> orders;
  std::vector<double> times;
  /// values[i][j] = M_{orders[j]} at times[i].
  std::vector<std::vector<double>> values;
  /// Running sup over times[0..i].
  std::vector<std::vector<double>> sup_values;

  void append(double t, const ParticleEnsemble& ens);
  std::vector<double> series(std::size_t order_index) const;
};

/// M_k = Σ w |V|^k for each order.
std::vector<double> moment_values(const ParticleEnsemble& ens, const std::vector<double>& orders);
MomentReport moments(const ParticleEnsemble& ens, const std::vector<double>& orders, double t = 0.0);

/// Constant in ‖ρ‖_{(k+3)/3} <= C M_k^{3/(k+3)} obtained by optimising the split radius R.
double interpolation_constant(double k, double f_inf_bound);

struct InterpolationVerdict {
  double k = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double constant = 0.0;
  double moment = 0.0;
  /// rhs / lhs (infinite when lhs is 0).
  double margin = 0.0;
  bool holds = false;
};

InterpolationVerdict interpolation_check(const ScalarField& rho, const ParticleEnsemble& ens, double k,
                                         double f_inf_bound, double tolerance = 1e-12);

/// exp[C(1 + log(1 + M_k(0))) e^{Ct}].
double moment_envelope(double C, double m0, double t);

struct EnvelopeFit {
  double order = 0.0;
  double fitted_C = 0.0;
  bool feasible = true;
};

struct MomentEnvelopeVerdict {
  std::vector<EnvelopeFit> fits;
  double fitted_C = 0.0;
  double battery_C = 0.0;
  bool holds = false;
};

inline constexpr double kEnvelopeSearchLow = 1e-3;
inline constexpr double kEnvelopeSearchHigh = 1e3;

/// Smallest C in [1e-3, 1e3] such that the envelope dominates the series; infinity if none.
double fit_moment_envelope(const std::vector<double>& times, const std::vector<double>& values);

MomentEnvelopeVerdict moment_envelope_check(const MomentReport& history, double battery_C);

}  // namespace vpme
