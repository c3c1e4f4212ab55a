#pragma once

#include <cstdint>
#include <vector>

#include "dpl/graph.hpp"
#include "dpl/types.hpp"

namespace dpl {

struct SbmConfig {
  std::size_t num_nodes = 0;
  std::size_t num_blocks = 0;
  std::vector<double> pi;
  Matrix theta;
  std::uint64_t seed = 0;
  /// When set, validate() also requires max off-diagonal < min diagonal.
  bool require_assortative = false;

  /// Throws std::invalid_argument on a malformed configuration.
  void validate() const;
};

/// Degree-corrected configuration. Degree parameters are either supplied
/// explicitly (alpha) or drawn from the two-point law
/// P(alpha = m x) = P(alpha = x) = 1/2 with x = 2 / (m + 1).
struct DcsbmConfig {
  SbmConfig base;
  std::vector<double> alpha;
  double heterogeneity = 1.0;

  void validate() const;
};

struct PlantedNetwork {
  SparseGraph graph;
  LabelVector truth;
  /// Degree parameters (DCSBM only).
  std::vector<double> alpha;
  /// DCSBM: number of unordered pairs whose Poisson rate reached 1.
  std::size_t saturated_pairs = 0;
};

/// rho * ((1 - beta) 11^T + beta I).
Matrix make_planted_theta(double rho, double beta, std::size_t num_blocks);

PlantedNetwork generate_sbm(const SbmConfig &cfg);

/// Edges are 1{Poisson(alpha_i theta alpha_j) >= 1}, i.e. Bernoulli(1 - exp(-rate)).
PlantedNetwork generate_dcsbm(const DcsbmConfig &cfg);

/// Draws N degree parameters from the two-point law with level m.
std::vector<double> draw_two_point_alpha(std::size_t num_nodes, double heterogeneity, std::uint64_t seed);

} // namespace dpl
