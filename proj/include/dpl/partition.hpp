#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dpl/graph.hpp"
#include "dpl/types.hpp"

namespace dpl {

/// Global <-> (worker, local position) mapping of a block-wise split.
/// Worker ids and local positions are zero-based here; files use 1-based values.
struct IndexMap {
  std::size_t num_nodes = 0;
  std::size_t block_size = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> block_of;
  std::vector<std::uint32_t> local_of;
  /// members[r][i'] is the global node stored at local row i' of worker r.
  std::vector<std::vector<NodeId>> members;

  [[nodiscard]] std::size_t num_workers() const noexcept { return members.size(); }

  /// Builds a map from explicit equal-size blocks; validates the partition property.
  static IndexMap from_blocks(std::size_t num_nodes, std::vector<std::vector<NodeId>> blocks,
                              std::uint64_t seed = 0);

  /// Throws std::logic_error if blocks overlap, miss nodes, or differ in size.
  void validate() const;
};

/// One worker's n x N slice of the adjacency matrix: rows are in-worker nodes in
/// local order, columns are global node ids.
class WorkerShard {
public:
  WorkerShard(std::size_t worker_id, std::size_t num_cols, std::vector<EdgeIndex> row_offsets,
              std::vector<NodeId> col_indices, std::shared_ptr<const IndexMap> index_map);

  [[nodiscard]] std::size_t worker_id() const noexcept { return worker_id_; }
  [[nodiscard]] std::size_t num_rows() const noexcept { return row_offsets_.size() - 1; }
  [[nodiscard]] std::size_t num_cols() const noexcept { return num_cols_; }
  [[nodiscard]] std::size_t nnz() const noexcept { return col_indices_.size(); }
  [[nodiscard]] std::span<const NodeId> row(std::size_t local) const noexcept {
    return {col_indices_.data() + row_offsets_[local],
            static_cast<std::size_t>(row_offsets_[local + 1] - row_offsets_[local])};
  }
  [[nodiscard]] NodeId global_node(std::size_t local) const { return index_map_->members[worker_id_][local]; }
  [[nodiscard]] const IndexMap &index_map() const noexcept { return *index_map_; }
  [[nodiscard]] std::shared_ptr<const IndexMap> shared_index_map() const noexcept { return index_map_; }

private:
  std::size_t worker_id_;
  std::size_t num_cols_;
  std::vector<EdgeIndex> row_offsets_;
  std::vector<NodeId> col_indices_;
  std::shared_ptr<const IndexMap> index_map_;
};

struct SplitResult {
  std::shared_ptr<const IndexMap> index_map;
  std::vector<WorkerShard> shards;
};

/// Uniformly random block-wise split into R equal blocks. Members of each block
/// are kept in ascending global order, so R = 1 reproduces A row for row.
/// Throws std::invalid_argument when R is 0, R > N, or R does not divide N.
SplitResult block_split(const SparseGraph &g, std::size_t num_workers, std::uint64_t seed);

/// Shards for a caller-provided map.
SplitResult make_shards(const SparseGraph &g, std::shared_ptr<const IndexMap> map);

/// Stacks shard rows back into an N x N adjacency using the index map.
SparseGraph stack_shards(std::span<const WorkerShard> shards);

/// Largest R' <= R dividing N and smallest R' >= R dividing N (for CLI hints).
std::pair<std::size_t, std::size_t> nearest_valid_worker_counts(std::size_t num_nodes, std::size_t num_workers);

/// e_i = locals[r_i][w_i]. Throws std::invalid_argument on count or length mismatch.
LabelVector reassemble_labels(std::span<const LabelVector> locals, const IndexMap &map);

/// Inverse of reassemble_labels.
std::vector<LabelVector> scatter_labels(std::span<const Label> global, const IndexMap &map);

/// True for worker r iff every label 0..K-1 occurs among its in-worker nodes.
std::vector<bool> shard_coverage_check(const IndexMap &map, std::span<const Label> truth, std::size_t num_labels);

} // namespace dpl
