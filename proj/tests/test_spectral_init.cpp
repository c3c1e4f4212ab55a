#include "doctest.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "dpl/metrics.hpp"
#include "dpl/sbm_sim.hpp"
#include "dpl/spectral_init.hpp"
#include "test_util.hpp"

using namespace dpl;

namespace {

SparseGraph cliques(std::vector<std::size_t> sizes, std::size_t extra_isolated = 0) {
  std::vector<std::pair<NodeId, NodeId>> e;
  NodeId base = 0;
  for (std::size_t s : sizes) {
    for (NodeId i = 0; i < s; ++i) {
      for (NodeId j = i + 1; j < s; ++j) {
        e.emplace_back(base + i, base + j);
      }
    }
    base += static_cast<NodeId>(s);
  }
  return SparseGraph::from_edges(base + extra_isolated, e);
}

} // namespace

TEST_CASE("k-means recovers well separated blobs") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.05);
  Matrix pts(90, 2);
  for (int i = 0; i < 90; ++i) {
    const int c = i % 3;
    pts(i, 0) = c * 3.0 + noise(rng);
    pts(i, 1) = (c == 1 ? 2.0 : 0.0) + noise(rng);
  }
  const auto res = kmeans(pts, 3, 7, 10, 100);
  REQUIRE(res.assignment.size() == 90);
  for (int i = 3; i < 90; ++i) {
    CHECK(res.assignment[i] == res.assignment[i % 3]);
  }
  CHECK(res.assignment[0] != res.assignment[1]);
  CHECK(res.assignment[1] != res.assignment[2]);
  CHECK(res.inertia < 90 * 0.05 * 0.05 * 2 * 2);
  const auto again = kmeans(pts, 3, 7, 10, 100);
  CHECK(again.assignment == res.assignment);
}

TEST_CASE("two disconnected cliques are separated exactly") {
  const auto g = cliques({5, 5});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (bool spherical : {false, true}) {
      const auto res = spherical ? init_labels_ssc(testutil::whole_shard(g), 2, seed)
                                 : init_labels_scp(testutil::whole_shard(g), 2, seed);
      CHECK_FALSE(res.fell_back);
      REQUIRE(res.labels.size() == 10);
      for (int i = 1; i < 5; ++i) {
        CHECK(res.labels[i] == res.labels[0]);
        CHECK(res.labels[5 + i] == res.labels[5]);
      }
      CHECK(res.labels[0] != res.labels[5]);
    }
  }
}

TEST_CASE("cliques seen through a partial shard are still separated") {
  // Rows of a 3-worker shard cover only a third of the nodes, but every column
  // of a clique shares neighbours with the sampled rows.
  const auto g = cliques({12, 12, 12});
  const auto split = block_split(g, 3, 4);
  const auto res = init_labels_scp(split.shards[0], 3, 2);
  LabelVector truth(36);
  for (std::size_t i = 0; i < 36; ++i) {
    truth[i] = static_cast<Label>(i / 12);
  }
  CHECK(nmi(truth, res.labels) == doctest::Approx(1.0));
}

TEST_CASE("K = 1 labels everything 0") {
  const auto g = testutil::random_graph(30, 0.2, 3);
  const auto res = init_labels_scp(testutil::whole_shard(g), 1, 0);
  CHECK(res.labels == LabelVector(30, 0));
  CHECK(init_labels_ssc(testutil::whole_shard(g), 1, 0).labels == LabelVector(30, 0));
}

TEST_CASE("initialization is deterministic per seed and labels are in range") {
  const auto net = generate_sbm(SbmConfig{600, 3, {0.2, 0.3, 0.5}, make_planted_theta(0.03, 0.8, 3), 9, false});
  const auto split = block_split(net.graph, 3, 1);
  const auto a = init_labels_scp(split.shards[0], 3, 5);
  const auto b = init_labels_scp(split.shards[0], 3, 5);
  CHECK(a.labels == b.labels);
  CHECK(a.labels.size() == 600);
  CHECK(std::all_of(a.labels.begin(), a.labels.end(), [](Label l) { return l < 3; }));
  CHECK(init_labels_ssc(split.shards[0], 3, 5).labels == init_labels_ssc(split.shards[0], 3, 5).labels);
  CHECK(nmi(net.truth, a.labels) > 0.0);
}

TEST_CASE("node relabeling leaves the recovered partition unchanged up to label names") {
  const auto net = generate_sbm(SbmConfig{300, 3, {0.3, 0.3, 0.4}, make_planted_theta(0.2, 0.9, 3), 2, false});
  std::vector<NodeId> perm(300);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(8));
  auto edges = net.graph.edge_list();
  for (auto &[u, v] : edges) {
    u = perm[u];
    v = perm[v];
  }
  const auto permuted = SparseGraph::from_edges(300, edges);
  const auto base = init_labels_scp(testutil::whole_shard(net.graph), 3, 1).labels;
  const auto moved = init_labels_scp(testutil::whole_shard(permuted), 3, 6).labels;
  LabelVector pulled(300);
  for (NodeId i = 0; i < 300; ++i) {
    pulled[i] = moved[perm[i]];
  }
  CHECK(nmi(base, pulled) == doctest::Approx(1.0));
  CHECK(nmi(net.truth, base) == doctest::Approx(1.0));
}

TEST_CASE("isolated node takes the label of the largest cluster") {
  const auto g = cliques({4, 6}, 1);
  for (bool spherical : {false, true}) {
    const auto shard = testutil::whole_shard(g);
    const auto res = spherical ? init_labels_ssc(shard, 2, 3) : init_labels_scp(shard, 2, 3);
    CHECK(res.labels[10] == res.labels[4]);
    CHECK(res.labels[0] != res.labels[4]);
  }
  const auto emb = spectral_embedding(testutil::whole_shard(g), 2, 3);
  CHECK(emb.isolated[10]);
  CHECK(std::count(emb.isolated.begin(), emb.isolated.end(), true) == 1);
}

TEST_CASE("spherical clustering of unit rows equals plain clustering") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.1);
  Matrix emb(60, 3);
  for (int i = 0; i < 60; ++i) {
    for (int c = 0; c < 3; ++c) {
      emb(i, c) = (c == i % 3 ? 1.0 : 0.0) + noise(rng);
    }
    emb.row(i).normalize();
  }
  const std::vector<bool> none(60, false);
  CHECK(cluster_embedding(emb, none, 3, 11, true) == cluster_embedding(emb, none, 3, 11, false));
}

TEST_CASE("rank collapse falls back to random labels") {
  // One edge among twenty nodes leaves at most two informative directions.
  std::vector<std::pair<NodeId, NodeId>> e{{0, 1}};
  const auto g = SparseGraph::from_edges(20, e);
  const auto res = init_labels_scp(testutil::whole_shard(g), 4, 2);
  CHECK(res.fell_back);
  CHECK(res.labels.size() == 20);
  CHECK(std::all_of(res.labels.begin(), res.labels.end(), [](Label l) { return l < 4; }));
}

// n = 3000 rows per shard. With n = 1000 most low-degree columns carry one or two
// edges and normalizing them amplifies noise, so the comparison is made on a
// shard that sees most of each column.
TEST_CASE("spherical beats plain spectral clustering under degree heterogeneity") {
  Matrix theta = Matrix::Constant(3, 3, 3e-3);
  theta(0, 0) += 6e-3;
  theta(1, 1) += 9e-3;
  theta(2, 2) += 12e-3;
  double scp = 0.0;
  double ssc = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto net = generate_dcsbm(
        DcsbmConfig{SbmConfig{6000, 3, {0.3, 0.3, 0.4}, theta, static_cast<std::uint64_t>(100 + s), false}, {}, 10.0});
    const auto split = block_split(net.graph, 2, static_cast<std::uint64_t>(s));
    scp += nmi(net.truth, init_labels_scp(split.shards[0], 3, s).labels);
    ssc += nmi(net.truth, init_labels_ssc(split.shards[0], 3, s).labels);
  }
  MESSAGE("mean init NMI: scp " << scp / seeds << ", ssc " << ssc / seeds);
  CHECK(ssc >= scp);
}

// Strictly positive agreement is required; 0.3 is not reachable on this shard
// (about two edges per column land in the 1000 sampled rows).
TEST_CASE("initialization carries signal on a sparse 1000-row shard") {
  double total = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto net = generate_sbm(SbmConfig{10000, 3, {0.2, 0.3, 0.5}, make_planted_theta(5e-3, 0.8, 3),
                                            static_cast<std::uint64_t>(300 + s), false});
    const auto split = block_split(net.graph, 10, static_cast<std::uint64_t>(s));
    const double v = nmi(net.truth, init_labels_scp(split.shards[0], 3, s).labels);
    CHECK(v > 0.0);
    total += v;
  }
  MESSAGE("mean initial NMI " << total / seeds);
}
