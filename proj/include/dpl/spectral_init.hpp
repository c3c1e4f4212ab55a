#pragma once

#include <cstdint>
#include <span>

#include "dpl/partition.hpp"
#include "dpl/types.hpp"

namespace dpl {

struct SpectralOptions {
  int oversampling = 10;
  int min_power_iterations = 2;
  int max_power_iterations = 30;
  /// Stop power iteration once the relative subspace residual drops below this.
  double tolerance = 1e-6;
  int kmeans_restarts = 10;
  int kmeans_max_iterations = 100;
  /// Scale rows and columns by inverse square-root regularized degrees.
  bool degree_normalize = true;
};

struct KMeansResult {
  std::vector<std::uint32_t> assignment;
  Matrix centers;
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding and `restarts` independent runs; the
/// lowest-inertia run wins. Empty clusters are reseeded at the point farthest
/// from its current center.
KMeansResult kmeans(const Matrix &points, std::size_t k, std::uint64_t seed, int restarts, int max_iterations);

struct Embedding {
  /// N x K right singular vectors of the regularized shard.
  Matrix values;
  Vector singular_values;
  /// Columns of the shard with no nonzero entry.
  std::vector<bool> isolated;
  /// Fewer than K numerically nonzero singular values.
  bool rank_deficient = false;
  int power_iterations = 0;
};

/// Top-K right singular vectors of the degree-normalized D_r^{-1/2}(A_r + (tau/N) J)D_c^{-1/2},
/// tau the average column degree of the shard, by randomized subspace iteration.
Embedding spectral_embedding(const WorkerShard &shard, std::size_t k, std::uint64_t seed,
                             const SpectralOptions &opts = {});

/// Clusters embedding rows with k-means. Rows flagged isolated are left out and
/// receive the label of the largest cluster. With `spherical`, rows are scaled
/// to unit length first.
LabelVector cluster_embedding(const Matrix &embedding, const std::vector<bool> &isolated, std::size_t k,
                              std::uint64_t seed, bool spherical, const SpectralOptions &opts = {});

struct InitResult {
  LabelVector labels;
  /// Rank collapse forced a random labeling.
  bool fell_back = false;
};

/// Regularized spectral clustering of all N columns of the shard.
InitResult init_labels_scp(const WorkerShard &shard, std::size_t k, std::uint64_t seed,
                           const SpectralOptions &opts = {});

/// Spherical variant: embedding rows are normalized before k-means.
InitResult init_labels_ssc(const WorkerShard &shard, std::size_t k, std::uint64_t seed,
                           const SpectralOptions &opts = {});

} // namespace dpl
