#include "dpl/sbm_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace dpl {

void SbmConfig::validate() const {
  if (num_nodes == 0 || num_blocks == 0) {
    throw std::invalid_argument("N and K must be positive");
  }
  if (pi.size() != num_blocks) {
    throw std::invalid_argument("pi must have K entries");
  }
  double total = 0.0;
  for (double p : pi) {
    if (!(p > 0.0)) {
      throw std::invalid_argument("pi entries must be positive");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("pi must sum to 1");
  }
  if (theta.rows() != static_cast<Eigen::Index>(num_blocks) || theta.cols() != theta.rows()) {
    throw std::invalid_argument("theta must be K x K");
  }
  for (Eigen::Index k = 0; k < theta.rows(); ++k) {
    for (Eigen::Index l = 0; l < theta.cols(); ++l) {
      if (!(theta(k, l) >= 0.0 && theta(k, l) < 1.0)) {
        throw std::invalid_argument("theta entries must lie in [0, 1)");
      }
      if (theta(k, l) != theta(l, k)) {
        throw std::invalid_argument("theta must be symmetric");
      }
    }
  }
  if (require_assortative && num_blocks > 1) {
    double max_off = 0.0;
    double min_diag = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < theta.rows(); ++k) {
      min_diag = std::min(min_diag, theta(k, k));
      for (Eigen::Index l = 0; l < theta.cols(); ++l) {
        if (k != l) {
          max_off = std::max(max_off, theta(k, l));
        }
      }
    }
    if (!(max_off < min_diag)) {
      throw std::invalid_argument("theta is not assortative");
    }
  }
}

void DcsbmConfig::validate() const {
  base.validate();
  if (alpha.empty()) {
    if (!(heterogeneity >= 1.0)) {
      throw std::invalid_argument("heterogeneity level m must be >= 1");
    }
    return;
  }
  if (alpha.size() != base.num_nodes) {
    throw std::invalid_argument("alpha must have N entries");
  }
  double sum = 0.0;
  for (double a : alpha) {
    if (!(a > 0.0)) {
      throw std::invalid_argument("alpha entries must be positive");
    }
    sum += a;
  }
  if (std::abs(sum / static_cast<double>(alpha.size()) - 1.0) > 1e-6) {
    throw std::invalid_argument("alpha must average to 1");
  }
}

Matrix make_planted_theta(double rho, double beta, std::size_t num_blocks) {
  if (rho < 0.0 || rho >= 1.0 || beta < 0.0 || beta > 1.0) {
    throw std::invalid_argument("need 0 <= rho < 1 and 0 <= beta <= 1");
  }
  const auto k = static_cast<Eigen::Index>(num_blocks);
  Matrix theta = Matrix::Constant(k, k, rho * (1.0 - beta));
  theta.diagonal().array() = rho;
  return theta;
}

namespace {

LabelVector draw_labels(std::size_t n, const std::vector<double> &pi, std::mt19937_64 &rng) {
  std::discrete_distribution<Label> dist(pi.begin(), pi.end());
  LabelVector z(n);
  for (auto &l : z) {
    l = dist(rng);
  }
  return z;
}

std::vector<std::vector<NodeId>> group_by_label(const LabelVector &z, std::size_t k) {
  std::vector<std::vector<NodeId>> groups(k);
  for (NodeId i = 0; i < z.size(); ++i) {
    groups[z[i]].push_back(i);
  }
  return groups;
}

// Enumerates candidate pairs of block pair (k, l) with geometric skips at
// probability p. For k == l only pairs a < b inside the block are visited.
template <class Visit>
void skip_sample(const std::vector<NodeId> &rows, const std::vector<NodeId> &cols, bool same_block, double p,
                 std::mt19937_64 &rng, Visit &&visit) {
  if (p <= 0.0 || rows.empty() || cols.empty()) {
    return;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double log_q = std::log1p(-p);
  const std::size_t nr = rows.size();
  const std::size_t nc = cols.size();
  std::size_t a = 0;
  std::size_t b = same_block ? 1 : 0;
  auto row_end = [&]() { return nc; };
  if (same_block && nr < 2) {
    return;
  }
  while (true) {
    // skip ~ Geometric(p) failures before the next success.
    double u = 1.0 - unif(rng);
    auto skip = static_cast<double>(std::floor(std::log(u) / log_q));
    if (p >= 1.0) {
      skip = 0.0;
    }
    // advance (a, b) by skip positions
    while (skip > 0.0) {
      const double left = static_cast<double>(row_end() - b);
      if (skip < left) {
        b += static_cast<std::size_t>(skip);
        skip = 0.0;
      } else {
        skip -= left;
        ++a;
        if (a >= nr) {
          return;
        }
        b = same_block ? a + 1 : 0;
        if (b >= nc) {
          return;
        }
      }
    }
    if (a >= nr || b >= nc) {
      return;
    }
    visit(rows[a], cols[b]);
    ++b;
    if (b >= row_end()) {
      ++a;
      if (a >= nr) {
        return;
      }
      b = same_block ? a + 1 : 0;
      if (b >= nc) {
        return;
      }
    }
  }
}

} // namespace

PlantedNetwork generate_sbm(const SbmConfig &cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  PlantedNetwork out;
  out.truth = draw_labels(cfg.num_nodes, cfg.pi, rng);
  const auto groups = group_by_label(out.truth, cfg.num_blocks);

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t k = 0; k < cfg.num_blocks; ++k) {
    for (std::size_t l = k; l < cfg.num_blocks; ++l) {
      const double p = cfg.theta(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
      skip_sample(groups[k], groups[l], k == l, p, rng, [&](NodeId u, NodeId v) { edges.emplace_back(u, v); });
    }
  }
  out.graph = SparseGraph::from_edges(cfg.num_nodes, edges);
  return out;
}

std::vector<double> draw_two_point_alpha(std::size_t num_nodes, double heterogeneity, std::uint64_t seed) {
  const double x = 2.0 / (heterogeneity + 1.0);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> alpha(num_nodes);
  for (auto &a : alpha) {
    a = coin(rng) ? heterogeneity * x : x;
  }
  return alpha;
}

PlantedNetwork generate_dcsbm(const DcsbmConfig &cfg) {
  cfg.validate();
  const SbmConfig &base = cfg.base;
  std::mt19937_64 rng(base.seed);
  PlantedNetwork out;
  out.truth = draw_labels(base.num_nodes, base.pi, rng);
  if (cfg.alpha.empty()) {
    const double x = 2.0 / (cfg.heterogeneity + 1.0);
    std::bernoulli_distribution coin(0.5);
    out.alpha.resize(base.num_nodes);
    for (auto &a : out.alpha) {
      a = coin(rng) ? cfg.heterogeneity * x : x;
    }
  } else {
    out.alpha = cfg.alpha;
  }
  const auto groups = group_by_label(out.truth, base.num_blocks);

  std::vector<double> max_alpha(base.num_blocks, 0.0);
  std::vector<std::vector<double>> sorted_alpha(base.num_blocks);
  for (std::size_t k = 0; k < base.num_blocks; ++k) {
    for (NodeId v : groups[k]) {
      max_alpha[k] = std::max(max_alpha[k], out.alpha[v]);
      sorted_alpha[k].push_back(out.alpha[v]);
    }
    std::sort(sorted_alpha[k].begin(), sorted_alpha[k].end());
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t k = 0; k < base.num_blocks; ++k) {
    for (std::size_t l = k; l < base.num_blocks; ++l) {
      const double theta = base.theta(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
      const double p_max = -std::expm1(-max_alpha[k] * max_alpha[l] * theta);
      skip_sample(groups[k], groups[l], k == l, p_max, rng, [&](NodeId u, NodeId v) {
        const double p = -std::expm1(-out.alpha[u] * theta * out.alpha[v]);
        if (unif(rng) * p_max < p) {
          edges.emplace_back(u, v);
        }
      });

      // Pairs with rate >= 1: for each alpha_i in k, count alpha_j in l with alpha_j >= 1 / (alpha_i theta).
      if (theta > 0.0) {
        std::size_t count = 0;
        for (double ai : sorted_alpha[k]) {
          const double need = 1.0 / (ai * theta);
          const auto &col = sorted_alpha[l];
          count += static_cast<std::size_t>(col.end() - std::lower_bound(col.begin(), col.end(), need));
        }
        if (k == l) {
          // Remove i == j and halve the ordered count.
          for (double ai : sorted_alpha[k]) {
            if (ai * theta * ai >= 1.0) {
              --count;
            }
          }
          count /= 2;
        }
        out.saturated_pairs += count;
      }
    }
  }
  out.graph = SparseGraph::from_edges(base.num_nodes, edges);
  return out;
}

} // namespace dpl
