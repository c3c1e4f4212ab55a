#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dpl/partition.hpp"
#include "dpl/types.hpp"

namespace dpl {

enum class ModelKind { sbm, dcsbm };

/// Edge counts from each in-worker node to every current label.
struct CountStats {
  /// n x K; b(i', k) = number of neighbors of local node i' labeled k.
  CountMatrix b;
  /// Row sums of b (the node degrees).
  CountVector d;
};

/// Mixing proportions and rate matrix. `rates` holds Lambda (Poisson means) in
/// SBM mode and the row-stochastic Psi in DCSBM mode.
struct ModelParams {
  ModelKind kind = ModelKind::sbm;
  Vector pi;
  Matrix rates;

  [[nodiscard]] std::size_t num_blocks() const noexcept { return static_cast<std::size_t>(pi.size()); }
};

struct Responsibilities {
  /// n x K posterior label probabilities; rows sum to one.
  Matrix tau;
};

struct EmOptions {
  /// Relative change of the objective that ends the EM loop.
  double tolerance = 1e-6;
  int max_iterations = 100;
  /// Added to every rate before taking logs.
  double floor = 1e-10;
  /// Relative slack used when counting ascent violations.
  double ascent_slack = 1e-8;
};

struct EmResult {
  ModelParams params;
  Responsibilities responsibilities;
  int iterations = 0;
  bool converged = false;
  /// Some cluster's total responsibility fell below floor * n; its row was frozen.
  bool degenerate = false;
  /// Objective at every visited parameter value, starting with the initial one.
  std::vector<double> objective_trace;
  /// Steps where the objective dropped by more than ascent_slack (relative).
  std::size_t ascent_violations = 0;
  std::uint64_t ops = 0;

  [[nodiscard]] double objective() const { return objective_trace.back(); }
};

/// b(i', k) = sum_j a_{i'j} 1{e_j = k}. `labels` is the global vector (length N).
CountStats count_stats(const WorkerShard &shard, std::span<const Label> labels, std::size_t k,
                       OpCounter *ops = nullptr);

/// Poisson pseudo log-likelihood (Poisson factorials dropped).
double pseudo_loglik_sbm(const CountStats &stats, const ModelParams &params, double floor = 1e-10);

/// Multinomial pseudo log-likelihood conditional on node degrees (multinomial
/// coefficients dropped).
double conditional_pseudo_loglik(const CountStats &stats, const ModelParams &params, double floor = 1e-10);

/// Log-space E-step; returns the objective at `params` and fills `tau`.
double e_step(const CountStats &stats, const ModelParams &params, double floor, Matrix &tau,
              OpCounter *ops = nullptr);

/// EM for the Poisson mixture over count rows.
EmResult em_sbm(const CountStats &stats, const ModelParams &init, const EmOptions &opts = {});

/// EM for the degree-conditional multinomial mixture over count rows.
EmResult em_dcsbm(const CountStats &stats, const ModelParams &init, const EmOptions &opts = {});

/// Dispatches on init.kind.
EmResult run_em(const CountStats &stats, const ModelParams &init, const EmOptions &opts = {});

/// Row-wise argmax; ties resolve to the smallest label.
LabelVector local_label_update(const Responsibilities &resp);

/// Block summary sent to the master.
struct WorkerSummary {
  /// O(l, k): edges from in-worker nodes labeled l to nodes labeled k.
  CountMatrix block_edges;
  /// n_l: in-worker nodes labeled l.
  CountVector block_sizes;
};

WorkerSummary worker_summary(const WorkerShard &shard, std::span<const Label> labels, std::size_t k,
                             OpCounter *ops = nullptr);

} // namespace dpl
