#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dpl/master.hpp"
#include "dpl/sbm_sim.hpp"

namespace dpl::bench {

enum class Method {
  dpl,  ///< distributed, Poisson pseudo-likelihood
  dcpl, ///< distributed, degree-conditional pseudo-likelihood
  pl,   ///< single machine, Poisson pseudo-likelihood
  cpl,  ///< single machine, degree-conditional pseudo-likelihood
};

std::string method_name(Method m);
Method parse_method(const std::string &name);

enum class Splitting { block_wise, random };

/// One simulated network plus how to fit it.
struct PointSpec {
  bool degree_corrected = false;
  std::size_t num_nodes = 10'000;
  std::size_t num_blocks = 3;
  std::vector<double> pi{0.2, 0.3, 0.5};
  Matrix theta;
  double heterogeneity = 1.0;
  std::size_t block_size = 1'000;
  int max_rounds = 10;
  Splitting splitting = Splitting::block_wise;
};

struct BenchRow {
  std::string example;
  std::string case_name;
  std::string param;
  double value = 0.0;
  std::string method;
  int rep = 0;
  std::uint64_t seed = 0;
  std::size_t num_nodes = 0;
  std::size_t block_size = 0;
  std::size_t num_workers = 0;
  double nmi = 0.0;
  double red = 0.0;
  double wall_ms = 0.0;
  std::size_t rounds = 0;
  std::size_t em_invocations = 0;
  std::size_t ascent_violations = 0;
  double bits_per_round = 0.0;
  double ops_per_round = 0.0;
  double density = 0.0;
};

struct SummaryRow {
  std::string case_name;
  std::string param;
  double value = 0.0;
  std::string method;
  int reps = 0;
  double mean_nmi = 0.0;
  double sd_nmi = 0.0;
  double mean_red = 0.0;
  double mean_wall_ms = 0.0;
};

/// A direction/threshold assertion evaluated over measured output.
struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct BenchTable {
  std::vector<BenchRow> rows;
  std::vector<Check> checks;

  [[nodiscard]] std::vector<SummaryRow> summary() const;
  /// Mean and sample sd of NMI for one (case, value, method) cell.
  [[nodiscard]] std::optional<SummaryRow> cell(const std::string &case_name, double value,
                                               const std::string &method) const;
  void write_csv(const std::filesystem::path &path) const;
  void write_summary_csv(const std::filesystem::path &path) const;
};

/// Generates the network for `seed`, fits it with `method`, and measures it.
/// Deterministic in (point, method, seed) apart from wall time.
BenchRow run_point(const PointSpec &point, Method method, std::uint64_t seed);

/// Shards whose rows keep only columns inside the worker's own block
/// (the ablation's random-splitting baseline).
SplitResult make_within_block_shards(const SparseGraph &g, std::size_t num_workers, std::uint64_t seed);

struct ExperimentSpec {
  int replications = 20;
  std::uint64_t seed = 20240101;
  std::filesystem::path out_dir;
  bool plots = true;
  /// Concurrent grid cells; 0 picks the hardware concurrency.
  unsigned threads = 0;
  /// Methods; empty picks the example's default set.
  std::vector<Method> methods;

  // Example 1
  std::vector<std::size_t> ex1_block_sizes{100, 200, 250, 500, 1000};
  std::vector<std::size_t> ex1_network_sizes{2000, 5000, 10000, 20000, 30000};
  // Example 2
  std::vector<double> ex2_rhos{0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.007, 0.008, 0.009, 0.01};
  std::vector<double> ex2_betas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  // Example 3
  std::vector<double> ex3_levels{1, 2, 4, 6, 8, 10};
  // Ablation
  std::vector<std::size_t> ablation_block_sizes{1000, 2000};
  double ablation_heterogeneity = 4.0;

  /// Reads overrides from a JSON file; unknown keys are rejected.
  static ExperimentSpec from_json(const std::filesystem::path &path);

  /// Seed of replication `rep` at grid cell `cell`; distinct across both.
  [[nodiscard]] std::uint64_t seed_for(std::uint64_t cell, int rep) const;
};

BenchTable run_example1(const ExperimentSpec &spec);
BenchTable run_example2(const ExperimentSpec &spec);
BenchTable run_example3(const ExperimentSpec &spec);
BenchTable run_ablation(const ExperimentSpec &spec);

/// Writes rows.csv, summary.csv, and SVG plots into spec.out_dir (when set).
void emit(const BenchTable &table, const ExperimentSpec &spec, const std::string &stem);

} // namespace dpl::bench
