#include "doctest.h"

#include <random>
#include <set>

#include "dpl/partition.hpp"
#include "test_util.hpp"

using namespace dpl;

namespace {

// Row i' of shard r must equal row members[r][i'] of A.
void check_rows_match(const SparseGraph &g, const SplitResult &s) {
  for (const auto &shard : s.shards) {
    for (std::size_t i = 0; i < shard.num_rows(); ++i) {
      const auto a = shard.row(i);
      const auto b = g.neighbors(shard.global_node(i));
      REQUIRE(std::vector<NodeId>(a.begin(), a.end()) == std::vector<NodeId>(b.begin(), b.end()));
    }
  }
}

} // namespace

TEST_CASE("eight-node example: explicit blocks give the expected shard rows") {
  const auto g = testutil::eight_node_graph();
  // Blocks {1,2,3,5} and {4,6,7,8} in 1-based node ids.
  auto map = std::make_shared<const IndexMap>(IndexMap::from_blocks(8, {{0, 1, 2, 4}, {3, 5, 6, 7}}));
  const auto split = make_shards(g, map);
  REQUIRE(split.shards.size() == 2);
  const auto &a1 = split.shards[0];
  CHECK(a1.num_rows() == 4);
  CHECK(a1.num_cols() == 8);
  CHECK(a1.global_node(3) == 4);
  check_rows_match(g, split);
  CHECK(stack_shards(split.shards).edge_list() == g.edge_list());
}

TEST_CASE("eight-node example: combining local labels") {
  const IndexMap map = IndexMap::from_blocks(8, {{0, 1, 2, 4}, {3, 5, 6, 7}});
  const std::vector<LabelVector> locals{{0, 0, 0, 1}, {0, 1, 1, 1}};
  CHECK(reassemble_labels(locals, map) == LabelVector{0, 0, 0, 0, 1, 1, 1, 1});
}

TEST_CASE("single worker reproduces A row for row") {
  const auto g = testutil::random_graph(30, 0.2, 3);
  const auto split = block_split(g, 1, 99);
  REQUIRE(split.shards.size() == 1);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(split.shards[0].global_node(i) == i);
  }
  check_rows_match(g, split);
  const LabelVector labels = testutil::random_labels(30, 3, 1);
  CHECK(reassemble_labels(std::vector<LabelVector>{labels}, *split.index_map) == labels);
}

TEST_CASE("six nodes, three workers: exact reassembly") {
  const auto g = testutil::random_graph(6, 0.6, 11);
  const auto split = block_split(g, 3, 5);
  split.index_map->validate();
  CHECK(split.index_map->block_size == 2);
  check_rows_match(g, split);
  CHECK(stack_shards(split.shards).edge_list() == g.edge_list());
}

TEST_CASE("block split: partition property, sizes and determinism") {
  const auto g = testutil::random_graph(60, 0.1, 2);
  for (std::size_t r : {1, 2, 3, 4, 5, 6, 10, 12, 15, 20, 30, 60}) {
    const auto s = block_split(g, r, 42);
    const auto &m = *s.index_map;
    m.validate();
    std::set<NodeId> seen;
    for (std::size_t w = 0; w < r; ++w) {
      CHECK(m.members[w].size() == 60 / r);
      for (std::size_t i = 0; i < m.members[w].size(); ++i) {
        const NodeId v = m.members[w][i];
        CHECK(m.block_of[v] == w);
        CHECK(m.local_of[v] == i);
        seen.insert(v);
      }
    }
    CHECK(seen.size() == 60);
    CHECK(block_split(g, r, 42).index_map->members == m.members);
  }
  CHECK(block_split(g, 6, 1).index_map->members != block_split(g, 6, 2).index_map->members);
}

TEST_CASE("block split: invalid worker counts") {
  const auto g = testutil::random_graph(10, 0.3, 1);
  CHECK_THROWS_AS(block_split(g, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(block_split(g, 11, 1), std::invalid_argument);
  CHECK_THROWS_AS(block_split(g, 3, 1), std::invalid_argument);
  try {
    block_split(g, 3, 1);
  } catch (const std::invalid_argument &e) {
    const std::string msg = e.what();
    CHECK(msg.find('2') != std::string::npos);
    CHECK(msg.find('5') != std::string::npos);
  }
  CHECK(nearest_valid_worker_counts(10, 3) == std::pair<std::size_t, std::size_t>{2, 5});
  CHECK(nearest_valid_worker_counts(12, 4) == std::pair<std::size_t, std::size_t>{4, 4});
}

TEST_CASE("reassemble_labels rejects mismatched input") {
  const IndexMap map = IndexMap::from_blocks(4, {{0, 1}, {2, 3}});
  CHECK_THROWS_AS(reassemble_labels(std::vector<LabelVector>{{0, 1}}, map), std::invalid_argument);
  CHECK_THROWS_AS(reassemble_labels(std::vector<LabelVector>{{0, 1}, {0}}, map), std::invalid_argument);
  CHECK_THROWS(IndexMap::from_blocks(4, {{0, 1}, {1, 2}}));
  CHECK_THROWS(IndexMap::from_blocks(4, {{0, 1, 2}, {3}}));
}

TEST_CASE("scatter then reassemble is the identity") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const std::size_t r = 1 + rng() % 6;
    const std::size_t n = r * (1 + rng() % 8);
    const auto g = testutil::random_graph(n, 0.2, rng());
    const auto s = block_split(g, r, rng());
    const LabelVector labels = testutil::random_labels(n, 4, rng());
    const auto locals = scatter_labels(labels, *s.index_map);
    CHECK(reassemble_labels(locals, *s.index_map) == labels);
  }
}

TEST_CASE("shard coverage") {
  const IndexMap map = IndexMap::from_blocks(6, {{0, 1}, {2, 3}, {4, 5}});
  const LabelVector zeros(6, 0);
  for (bool covered : shard_coverage_check(map, zeros, 1)) {
    CHECK(covered);
  }
  // n = 2 cannot cover three labels.
  const LabelVector three{0, 1, 2, 0, 1, 2};
  for (bool covered : shard_coverage_check(map, three, 3)) {
    CHECK_FALSE(covered);
  }
  const LabelVector two{0, 1, 1, 1, 1, 0};
  CHECK(shard_coverage_check(map, two, 2) == std::vector<bool>{true, false, true});
}
