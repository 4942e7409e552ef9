#pragma once

#include <optional>
#include <vector>

#include "vpme/electrostatics.hpp"
#include "vpme/kinetics.hpp"
#include "vpme/transport.hpp"

namespace vpme {

/// Pairing of particle ids between two ensembles.
struct Coupling {
  /// partner[id] is the id in the second ensemble paired with `id`; empty means identity.
  std::vector<std::size_t> partner;

  static Coupling identity() { return {}; }
  static Coupling explicit_pairing(std::vector<std::size_t> partner);
  bool is_identity() const { return partner.empty(); }
  void validate(const ParticleEnsemble& a, const ParticleEnsemble& b) const;
};

/// D = Σ w (|X¹-X²|² + |V¹-V²|²) over coupled pairs.
double coupled_distance(const ParticleEnsemble& a, const ParticleEnsemble& b,
                        const Coupling& coupling = Coupling::identity());

/// H(s) = s (log s)² for s <= e^{-2}, 4e^{-2} beyond, H(0) = 0.
double h_modulus(double s);

/// Time at which the double-exponential branch reaches 1/2 (0 when w2_0 >= 1/2).
double gronwall_switch_time(double w2_0, double C);
double gronwall_envelope(double w2_0, double C, double t);

/// Smallest C in [0, 1e3] with w2[i] <= gronwall_envelope(w2[0], C, t[i] - t[0]); infinity if none.
double fit_gronwall_constant(const std::vector<double>& times, const std::vector<double>& w2,
                             double relative_tolerance = 1e-12);

/// One recorded time of a run: particles plus, optionally, the field they generated.
struct RunFrame {
  double t = 0.0;
  ParticleEnsemble ensemble;
  std::optional<PotentialSplit> split;
};

struct FieldTerms {
  double I1 = 0.0, I2 = 0.0, I3 = 0.0, I4 = 0.0;
  /// H(D) and D, the shapes bounding I₁, I₃ and I₂, I₄.
  double H_of_D = 0.0;
  double D = 0.0;
};

/// The four field-difference integrals evaluated as particle sums over the coupling.
FieldTerms field_terms(const RunFrame& a, const RunFrame& b, const Coupling& coupling);

struct StabilitySample {
  double t = 0.0;
  double D = 0.0;
  double w2 = 0.0;
  bool exact = true;
  /// Certified width of the W₂ interval when the entropic surrogate was used.
  double w2_gap = 0.0;
  double envelope = 0.0;
  bool d_controls_w2 = true;
  std::optional<FieldTerms> terms;
};

struct StabilityOptions {
  std::size_t exact_cap = kExactW2Cap;
  double battery_C = 10.0;
  EntropicSettings entropic;
  bool field_terms = true;
};

struct StabilityReport {
  std::vector<StabilitySample> samples;
  double fitted_C = 0.0;
  double switch_time = 0.0;
  double battery_C = 0.0;
  /// Largest W₂/envelope ratio before and after the switch time.
  double residual_early = 0.0;
  double residual_late = 0.0;
  bool d_controls_w2 = true;
  bool envelope_holds = false;

  bool passed() const { return d_controls_w2 && envelope_holds; }
};

StabilityReport verify_stability(const std::vector<RunFrame>& run_a, const std::vector<RunFrame>& run_b,
                                 const Coupling& coupling = Coupling::identity(),
                                 const StabilityOptions& options = {});

struct FieldStabilitySample {
  double t = 0.0;
  double w2_rho = 0.0;
  double rho_inf = 0.0;
  double bar_difference = 0.0;
  double hat_difference = 0.0;
  /// (max ‖ρᵢ‖_∞)^{1/2} W₂(ρ₁, ρ₂).
  double loeper_scale = 0.0;
};

/// ‖∇Ū₁-∇Ū₂‖₂ and ‖∇Û₁-∇Û₂‖₂ against the position-marginal W₂ and the deposited ‖ρ‖_∞.
FieldStabilitySample field_stability_sample(const RunFrame& a, const RunFrame& b,
                                            std::size_t exact_cap = kExactW2Cap);

struct FieldStabilityVerdict {
  std::vector<FieldStabilitySample> samples;
  double bar_ratio_max = 0.0;
  double fitted_hat_C = 0.0;
  double battery_C = 0.0;
  bool bar_holds = false;
  bool hat_holds = false;

  bool passed() const { return bar_holds && hat_holds; }
};

inline constexpr double kLoeperSlack = 1.1;

FieldStabilityVerdict field_stability_check(std::vector<FieldStabilitySample> samples,
                                            double battery_C);

}  // namespace vpme
