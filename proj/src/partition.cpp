#include "dpl/partition.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace dpl {

IndexMap IndexMap::from_blocks(std::size_t num_nodes, std::vector<std::vector<NodeId>> blocks,
                               std::uint64_t seed) {
  IndexMap map;
  map.num_nodes = num_nodes;
  map.seed = seed;
  map.block_size = blocks.empty() ? 0 : blocks.front().size();
  map.members = std::move(blocks);
  map.block_of.assign(num_nodes, UINT32_MAX);
  map.local_of.assign(num_nodes, UINT32_MAX);
  for (std::size_t r = 0; r < map.members.size(); ++r) {
    for (std::size_t i = 0; i < map.members[r].size(); ++i) {
      const NodeId v = map.members[r][i];
      if (v >= num_nodes) {
        throw std::invalid_argument("block member out of range");
      }
      map.block_of[v] = static_cast<std::uint32_t>(r);
      map.local_of[v] = static_cast<std::uint32_t>(i);
    }
  }
  map.validate();
  return map;
}

void IndexMap::validate() const {
  if (members.empty()) {
    throw std::logic_error("index map has no blocks");
  }
  if (block_of.size() != num_nodes || local_of.size() != num_nodes) {
    throw std::logic_error("index map arrays have wrong length");
  }
  std::size_t total = 0;
  std::vector<char> seen(num_nodes, 0);
  for (std::size_t r = 0; r < members.size(); ++r) {
    if (members[r].size() != block_size) {
      throw std::logic_error("block " + std::to_string(r) + " has unequal size");
    }
    for (std::size_t i = 0; i < members[r].size(); ++i) {
      const NodeId v = members[r][i];
      if (v >= num_nodes || seen[v]) {
        throw std::logic_error("blocks overlap or reference invalid node");
      }
      seen[v] = 1;
      if (block_of[v] != r || local_of[v] != i) {
        throw std::logic_error("block_of/local_of disagree with members");
      }
    }
    total += members[r].size();
  }
  if (total != num_nodes) {
    throw std::logic_error("blocks do not cover every node");
  }
}

WorkerShard::WorkerShard(std::size_t worker_id, std::size_t num_cols, std::vector<EdgeIndex> row_offsets,
                         std::vector<NodeId> col_indices, std::shared_ptr<const IndexMap> index_map)
    : worker_id_(worker_id), num_cols_(num_cols), row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)), index_map_(std::move(index_map)) {}

SplitResult make_shards(const SparseGraph &g, std::shared_ptr<const IndexMap> map) {
  if (map->num_nodes != g.num_nodes()) {
    throw std::invalid_argument("index map does not match graph size");
  }
  SplitResult out;
  out.index_map = map;
  out.shards.reserve(map->num_workers());
  for (std::size_t r = 0; r < map->num_workers(); ++r) {
    std::vector<EdgeIndex> offsets{0};
    std::vector<NodeId> cols;
    for (NodeId v : map->members[r]) {
      auto row = g.neighbors(v);
      cols.insert(cols.end(), row.begin(), row.end());
      offsets.push_back(cols.size());
    }
    out.shards.emplace_back(r, g.num_nodes(), std::move(offsets), std::move(cols), map);
  }
  return out;
}

SplitResult block_split(const SparseGraph &g, std::size_t num_workers, std::uint64_t seed) {
  const std::size_t n_nodes = g.num_nodes();
  if (num_workers == 0) {
    throw std::invalid_argument("number of workers must be positive");
  }
  if (num_workers > n_nodes) {
    throw std::invalid_argument("more workers (" + std::to_string(num_workers) + ") than nodes (" +
                                std::to_string(n_nodes) + ")");
  }
  if (n_nodes % num_workers != 0) {
    const auto [lo, hi] = nearest_valid_worker_counts(n_nodes, num_workers);
    throw std::invalid_argument("R=" + std::to_string(num_workers) + " does not divide N=" +
                                std::to_string(n_nodes) + "; pad the graph or use R=" + std::to_string(lo) +
                                " or R=" + std::to_string(hi));
  }
  const std::size_t block = n_nodes / num_workers;

  std::vector<NodeId> perm(n_nodes);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<std::vector<NodeId>> blocks(num_workers);
  for (std::size_t r = 0; r < num_workers; ++r) {
    blocks[r].assign(perm.begin() + static_cast<std::ptrdiff_t>(r * block),
                     perm.begin() + static_cast<std::ptrdiff_t>((r + 1) * block));
    std::sort(blocks[r].begin(), blocks[r].end());
  }
  auto map = std::make_shared<const IndexMap>(IndexMap::from_blocks(n_nodes, std::move(blocks), seed));
  return make_shards(g, std::move(map));
}

SparseGraph stack_shards(std::span<const WorkerShard> shards) {
  if (shards.empty()) {
    throw std::invalid_argument("no shards to stack");
  }
  const IndexMap &map = shards.front().index_map();
  const std::size_t n_nodes = map.num_nodes;
  std::vector<EdgeIndex> offsets(n_nodes + 1, 0);
  for (NodeId v = 0; v < n_nodes; ++v) {
    offsets[v + 1] = offsets[v] + shards[map.block_of[v]].row(map.local_of[v]).size();
  }
  std::vector<NodeId> cols(offsets.back());
  for (NodeId v = 0; v < n_nodes; ++v) {
    auto row = shards[map.block_of[v]].row(map.local_of[v]);
    std::copy(row.begin(), row.end(), cols.begin() + static_cast<std::ptrdiff_t>(offsets[v]));
  }
  return SparseGraph::from_csr(n_nodes, std::move(offsets), std::move(cols));
}

std::pair<std::size_t, std::size_t> nearest_valid_worker_counts(std::size_t num_nodes, std::size_t num_workers) {
  std::size_t lo = std::min(num_workers, num_nodes);
  while (lo > 1 && num_nodes % lo != 0) {
    --lo;
  }
  std::size_t hi = std::max<std::size_t>(num_workers, 1);
  while (hi < num_nodes && num_nodes % hi != 0) {
    ++hi;
  }
  return {std::max<std::size_t>(lo, 1), std::min(hi, num_nodes)};
}

LabelVector reassemble_labels(std::span<const LabelVector> locals, const IndexMap &map) {
  if (locals.size() != map.num_workers()) {
    throw std::invalid_argument("expected " + std::to_string(map.num_workers()) + " local label vectors, got " +
                                std::to_string(locals.size()));
  }
  for (const auto &l : locals) {
    if (l.size() != map.block_size) {
      throw std::invalid_argument("local label vector has length " + std::to_string(l.size()) + ", expected " +
                                  std::to_string(map.block_size));
    }
  }
  LabelVector global(map.num_nodes);
  for (std::size_t i = 0; i < map.num_nodes; ++i) {
    global[i] = locals[map.block_of[i]][map.local_of[i]];
  }
  return global;
}

std::vector<LabelVector> scatter_labels(std::span<const Label> global, const IndexMap &map) {
  if (global.size() != map.num_nodes) {
    throw std::invalid_argument("global label vector length does not match index map");
  }
  std::vector<LabelVector> locals(map.num_workers());
  for (std::size_t r = 0; r < map.num_workers(); ++r) {
    locals[r].reserve(map.block_size);
    for (NodeId v : map.members[r]) {
      locals[r].push_back(global[v]);
    }
  }
  return locals;
}

std::vector<bool> shard_coverage_check(const IndexMap &map, std::span<const Label> truth, std::size_t num_labels) {
  std::vector<bool> out(map.num_workers(), false);
  std::vector<char> present(num_labels);
  for (std::size_t r = 0; r < map.num_workers(); ++r) {
    std::fill(present.begin(), present.end(), 0);
    std::size_t distinct = 0;
    for (NodeId v : map.members[r]) {
      const Label l = truth[v];
      if (l < num_labels && !present[l]) {
        present[l] = 1;
        ++distinct;
      }
    }
    out[r] = distinct == num_labels;
  }
  return out;
}

} // namespace dpl
