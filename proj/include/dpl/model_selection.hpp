#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dpl/master.hpp"
#include "dpl/partition.hpp"

namespace dpl {

struct WorkerLoglik {
  double value = 0.0;
  /// Some theta estimate was undefined (empty column cluster).
  bool degenerate = false;
};

/// Bernoulli log-likelihood of one shard under the block estimates
/// theta_lk = O_lk / (n_l * N_k), pairs counted as n_l * N_k, with theta clamped
/// to [1e-12, 1 - 1e-12].
WorkerLoglik worker_loglik(const WorkerShard &shard, std::span<const Label> labels, std::size_t k);

/// N log K' + K'(K'+1)/2 log N.
double bic_penalty(std::size_t num_nodes, std::size_t k);

struct KCandidateScore {
  std::size_t k = 0;
  LabelVector labels;
  std::vector<double> worker_loglik;
  double penalty = 0.0;
  /// sum(worker_loglik) - penalty; -inf when the fit aborted.
  double score = 0.0;
  bool failed = false;
  bool degenerate = false;
};

struct SelectConfig {
  FitConfig fit;
  /// Fit candidates concurrently (each with its own transport and threads).
  bool parallel_candidates = false;
};

struct SelectionResult {
  std::size_t best_k = 0;
  std::vector<KCandidateScore> scores;
};

/// Fits every candidate K' with the distributed algorithm and returns the
/// argmax of the corrected BIC; ties go to the smaller K'.
SelectionResult select_k(const SparseGraph &g, std::span<const std::size_t> candidates, const SelectConfig &cfg);

} // namespace dpl
