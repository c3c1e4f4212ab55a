#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpl/graph.hpp"
#include "dpl/partition.hpp"
#include "dpl/spectral_init.hpp"
#include "dpl/worker.hpp"

namespace dpl {

enum class InitMode { automatic, scp, ssc, provided };

struct FitConfig {
  ModelKind kind = ModelKind::sbm;
  std::size_t num_workers = 1;
  std::uint64_t seed = 0;
  /// automatic picks SCP for SBM and SSC for DCSBM.
  InitMode init = InitMode::automatic;
  /// Used when init == provided (length N, zero-based labels).
  LabelVector initial_labels;
  int max_rounds = 10;
  /// Relative change of the summed pseudo log-likelihood that ends the run.
  double tolerance = 1e-6;
  EmOptions em;
  SpectralOptions spectral;
  /// Run each worker on its own thread; otherwise the master drives workers
  /// one after another in `sequential_order` (identity when empty).
  bool parallel_workers = true;
  std::vector<std::size_t> sequential_order;
  /// Keep every round's global label vector in FitResult::trajectory.
  bool record_trajectory = false;
  /// Called by a worker before it answers a parameter broadcast (tests use it to
  /// perturb completion order).
  std::function<void(std::size_t worker, std::size_t round)> worker_hook;
};

struct RoundRecord {
  std::size_t round = 0;
  std::uint64_t bits_broadcast = 0;
  std::uint64_t bits_gathered = 0;
  /// Multiply-adds summed over workers.
  std::uint64_t ops = 0;
  std::uint64_t max_worker_ops = 0;
  std::vector<int> em_iterations;
  double objective = 0.0;
  std::size_t label_changes = 0;
  std::size_t messages = 0;
  bool degenerate = false;
};

struct RoundLedger {
  std::vector<RoundRecord> rounds;

  [[nodiscard]] std::uint64_t total_bits() const;
  [[nodiscard]] std::uint64_t total_ops() const;
  /// Rounds whose objective fell below the previous round's.
  [[nodiscard]] std::size_t non_monotone_rounds() const;
  /// CSV with columns round,bits_broadcast,bits_gathered,ops,objective.
  [[nodiscard]] std::string to_csv() const;
};

struct FitResult {
  LabelVector labels;
  ModelParams params;
  RoundLedger ledger;
  std::size_t rounds = 0;
  bool converged = false;
  std::vector<bool> degenerate_flags;
  bool init_fell_back = false;
  LabelVector initial_labels;
  std::size_t em_invocations = 0;
  std::size_t ascent_violations = 0;
  /// Global labels after every round (round 0 = initialization), when requested.
  std::vector<LabelVector> trajectory;
};

/// A worker failed mid-run; carries the ledger of the rounds completed so far.
class FitAborted : public std::runtime_error {
public:
  FitAborted(const std::string &what, RoundLedger partial)
      : std::runtime_error(what), ledger(std::move(partial)) {}
  RoundLedger ledger;
};

struct AggregateResult {
  ModelParams params;
  bool degenerate = false;
};

/// pi_l = sum_r n_{r,l} / N, lambda_lk = sum_r O_{r,lk} / sum_r n_{r,l}. In DCSBM
/// mode the rows are then normalized to Psi. Summation runs in worker order.
AggregateResult aggregate_global_params(std::span<const WorkerSummary> summaries, std::size_t num_nodes,
                                        ModelKind kind = ModelKind::sbm);

/// Initial global labels from the first shard.
InitResult initialize_labels(const WorkerShard &first_shard, std::size_t k, const FitConfig &cfg);

/// Multi-round master/worker fit over prepared shards.
FitResult run_fit(const SplitResult &split, std::size_t k, const FitConfig &cfg);

/// Splits g with cfg.num_workers and cfg.seed, then runs the distributed fit.
FitResult run_dpl(const SparseGraph &g, std::size_t k, FitConfig cfg);
FitResult run_dcpl(const SparseGraph &g, std::size_t k, FitConfig cfg);

/// Single-machine pseudo-likelihood fit on the whole graph with no shards or
/// messages. Initial labels come from the same spectral routine applied to A.
FitResult run_pl_reference(const SparseGraph &g, std::size_t k, const FitConfig &cfg);

struct ScalingPoint {
  std::size_t num_nodes = 0;
  std::size_t block_size = 0;
  std::size_t num_workers = 0;
  double density = 0.0;
  double bits_per_round = 0.0;
  double ops_per_round = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct ScalingReport {
  /// bits per round against N * R.
  LinearFit bits;
  /// ops per round against N * n * density.
  LinearFit ops;
};

/// Needs at least three settings.
ScalingReport ledger_scaling_report(std::span<const ScalingPoint> points);

} // namespace dpl
