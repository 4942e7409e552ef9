#pragma once

#include <cstddef>
#include <vector>

#include "vpme/kinetics.hpp"

namespace vpme {

enum class Marginal { PhaseSpace, Position };

inline constexpr std::size_t kExactW2Cap = 2048;

struct Assignment {
  /// target[i] is the column matched with row i.
  std::vector<std::size_t> target;
  double total_cost = 0.0;
};

/// Minimum-cost perfect matching on a dense n×n row-major cost matrix (shortest augmenting paths).
Assignment solve_assignment(const std::vector<double>& cost, std::size_t n);

/// Squared distances between the points of two equally weighted ensembles.
std::vector<double> squared_cost_matrix(const ParticleEnsemble& a, const ParticleEnsemble& b,
                                        Marginal marginal);

struct ExactTransport {
  double w2 = 0.0;
  /// Optimal Σ w |z_i - z'_σ(i)|².
  double w2_squared = 0.0;
  std::vector<std::size_t> plan;
};

ExactTransport w2_exact_plan(const ParticleEnsemble& a, const ParticleEnsemble& b,
                             Marginal marginal = Marginal::PhaseSpace, std::size_t cap = kExactW2Cap);
double w2_exact(const ParticleEnsemble& a, const ParticleEnsemble& b,
                Marginal marginal = Marginal::PhaseSpace, std::size_t cap = kExactW2Cap);

struct EntropicSettings {
  /// Final regularisation as a fraction of the mean pairwise cost.
  double epsilon = 3e-3;
  int iterations = 20000;
  /// L1 marginal violation accepted at the final regularisation.
  double tolerance = 1e-4;
};

struct EntropicResult {
  /// √ of the c-transformed dual objective; never above the exact value.
  double value = 0.0;
  /// √ of the cost of the rounded (feasible) plan; never below the exact value.
  double upper_bound = 0.0;
  /// upper_bound - value, so value <= W₂ <= value + gap.
  double gap = 0.0;
  double marginal_error = 0.0;
  double epsilon = 0.0;
  int iterations = 0;
};

EntropicResult w2_entropic(const ParticleEnsemble& a, const ParticleEnsemble& b,
                           const EntropicSettings& settings = {},
                           Marginal marginal = Marginal::PhaseSpace);

}  // namespace vpme
