#pragma once

#include <span>

#include "dpl/graph.hpp"
#include "dpl/types.hpp"

namespace dpl {

/// M(k, l) = #{i : est_i = k, truth_i = l} / N.
struct ConfusionMatrix {
  Matrix joint;
  Vector est_marginal;
  Vector truth_marginal;
};

ConfusionMatrix confusion_matrix(std::span<const Label> truth, std::span<const Label> est);

/// Mutual information over joint entropy, with 0 log 0 = 0. Two single-block
/// partitions score 1. Throws std::invalid_argument on length mismatch.
double nmi(std::span<const Label> truth, std::span<const Label> est);

/// Between-community edge density over within-community edge density, both over
/// unordered pairs. Returns +inf when no within-community edge exists but a
/// between-community edge does. Throws std::invalid_argument for a single-cluster
/// labeling or when no within-community pair exists.
double red(const SparseGraph &g, std::span<const Label> est);

} // namespace dpl
