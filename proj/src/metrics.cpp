#include "dpl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpl {

namespace {

std::size_t label_count(std::span<const Label> labels) {
  return labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

} // namespace

ConfusionMatrix confusion_matrix(std::span<const Label> truth, std::span<const Label> est) {
  if (truth.size() != est.size()) {
    throw std::invalid_argument("label vectors differ in length");
  }
  if (truth.empty()) {
    throw std::invalid_argument("label vectors are empty");
  }
  const auto kt = static_cast<Eigen::Index>(label_count(truth));
  const auto ke = static_cast<Eigen::Index>(label_count(est));
  ConfusionMatrix m;
  m.joint = Matrix::Zero(ke, kt);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    m.joint(est[i], truth[i]) += 1.0;
  }
  m.joint /= static_cast<double>(truth.size());
  m.est_marginal = m.joint.rowwise().sum();
  m.truth_marginal = m.joint.colwise().sum().transpose();
  return m;
}

double nmi(std::span<const Label> truth, std::span<const Label> est) {
  const ConfusionMatrix m = confusion_matrix(truth, est);
  double mutual = 0.0;
  double joint_entropy = 0.0;
  for (Eigen::Index k = 0; k < m.joint.rows(); ++k) {
    for (Eigen::Index l = 0; l < m.joint.cols(); ++l) {
      const double p = m.joint(k, l);
      if (p > 0.0) {
        mutual += p * std::log(p / (m.est_marginal(k) * m.truth_marginal(l)));
        joint_entropy -= p * std::log(p);
      }
    }
  }
  if (joint_entropy <= 0.0) {
    return 1.0;
  }
  double v = mutual / joint_entropy;
  if (v < 0.0 && v >= -1e-12) {
    v = 0.0;
  }
  return std::min(v, 1.0);
}

double red(const SparseGraph &g, std::span<const Label> est) {
  if (est.size() != g.num_nodes()) {
    throw std::invalid_argument("label vector does not cover every node");
  }
  const std::size_t k = label_count(est);
  std::vector<double> sizes(k, 0.0);
  for (Label l : est) {
    sizes[l] += 1.0;
  }
  const auto distinct = std::count_if(sizes.begin(), sizes.end(), [](double s) { return s > 0.0; });
  if (distinct < 2) {
    throw std::invalid_argument("relative density needs at least two communities");
  }
  const auto n = static_cast<double>(est.size());
  double within_pairs = 0.0;
  double sum_sq = 0.0;
  for (double s : sizes) {
    within_pairs += s * (s - 1.0) / 2.0;
    sum_sq += s * s;
  }
  const double between_pairs = (n * n - sum_sq) / 2.0;
  if (within_pairs <= 0.0) {
    throw std::invalid_argument("relative density needs at least one within-community pair");
  }

  double within_edges = 0.0;
  double between_edges = 0.0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    for (NodeId j : g.neighbors(i)) {
      if (i < j) {
        (est[i] == est[j] ? within_edges : between_edges) += 1.0;
      }
    }
  }
  const double c_between = between_edges / between_pairs;
  const double c_within = within_edges / within_pairs;
  if (c_within == 0.0) {
    return c_between > 0.0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
  }
  return c_between / c_within;
}

} // namespace dpl
