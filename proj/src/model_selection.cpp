#include "dpl/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "dpl/worker.hpp"

namespace dpl {

namespace {
constexpr double kThetaClamp = 1e-12;
} // namespace

WorkerLoglik worker_loglik(const WorkerShard &shard, std::span<const Label> labels, std::size_t k) {
  const WorkerSummary s = worker_summary(shard, labels, k);
  std::vector<double> column_sizes(k, 0.0);
  for (Label l : labels) {
    column_sizes[l] += 1.0;
  }
  WorkerLoglik out;
  for (std::size_t l = 0; l < k; ++l) {
    const auto rows = static_cast<double>(s.block_sizes(static_cast<Eigen::Index>(l)));
    if (rows == 0.0) {
      continue;
    }
    for (std::size_t m = 0; m < k; ++m) {
      const double edges = static_cast<double>(s.block_edges(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(m)));
      const double pairs = rows * column_sizes[m];
      double theta = 0.0;
      if (column_sizes[m] == 0.0) {
        out.degenerate = true;
      } else {
        theta = (edges / rows) / column_sizes[m];
      }
      theta = std::clamp(theta, kThetaClamp, 1.0 - kThetaClamp);
      out.value += edges * std::log(theta / (1.0 - theta)) + pairs * std::log1p(-theta);
    }
  }
  return out;
}

double bic_penalty(std::size_t num_nodes, std::size_t k) {
  const auto n = static_cast<double>(num_nodes);
  const auto kk = static_cast<double>(k);
  return n * std::log(kk) + kk * (kk + 1.0) / 2.0 * std::log(n);
}

namespace {

KCandidateScore score_candidate(const SparseGraph &g, const SplitResult &split, std::size_t k,
                                const SelectConfig &cfg) {
  KCandidateScore sc;
  sc.k = k;
  sc.penalty = bic_penalty(g.num_nodes(), k);
  try {
    const FitResult fit = run_fit(split, k, cfg.fit);
    sc.labels = fit.labels;
    double total = 0.0;
    for (const auto &shard : split.shards) {
      const WorkerLoglik ll = worker_loglik(shard, fit.labels, k);
      sc.worker_loglik.push_back(ll.value);
      sc.degenerate = sc.degenerate || ll.degenerate;
      total += ll.value;
    }
    sc.score = total - sc.penalty;
  } catch (const std::exception &) {
    sc.failed = true;
    sc.score = -std::numeric_limits<double>::infinity();
  }
  return sc;
}

} // namespace

SelectionResult select_k(const SparseGraph &g, std::span<const std::size_t> candidates, const SelectConfig &cfg) {
  if (candidates.empty()) {
    throw std::invalid_argument("candidate set is empty");
  }
  std::vector<std::size_t> ks(candidates.begin(), candidates.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  const SplitResult split = block_split(g, cfg.fit.num_workers, cfg.fit.seed);

  SelectionResult out;
  if (cfg.parallel_candidates) {
    std::vector<std::future<KCandidateScore>> futures;
    for (std::size_t k : ks) {
      futures.push_back(std::async(std::launch::async, [&, k] { return score_candidate(g, split, k, cfg); }));
    }
    for (auto &f : futures) {
      out.scores.push_back(f.get());
    }
  } else {
    for (std::size_t k : ks) {
      out.scores.push_back(score_candidate(g, split, k, cfg));
    }
  }
  // Candidates are ascending, so strict > keeps the smaller K' on ties.
  const KCandidateScore *best = &out.scores.front();
  for (const auto &s : out.scores) {
    if (s.score > best->score) {
      best = &s;
    }
  }
  out.best_k = best->k;
  return out;
}

} // namespace dpl
