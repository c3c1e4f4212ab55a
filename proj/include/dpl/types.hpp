#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace dpl {

using NodeId = std::uint32_t;
using EdgeIndex = std::uint64_t;

/// Community label. Stored zero-based (0..K-1); files and CLI output use 1..K.
using Label = std::uint32_t;
using LabelVector = std::vector<Label>;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Multiply-add tally used for the per-round computation ledger.
struct OpCounter {
  std::uint64_t madds = 0;
  void add(std::uint64_t n) { madds += n; }
};

} // namespace dpl

namespace dpl {

/// SplitMix64 step; used to derive independent RNG streams from one user seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace dpl
