#include "doctest.h"

#include <chrono>
#include <random>
#include <thread>

#include "dpl/master.hpp"
#include "dpl/metrics.hpp"
#include "dpl/protocol.hpp"
#include "dpl/sbm_sim.hpp"
#include "test_util.hpp"

using namespace dpl;

namespace {

PlantedNetwork planted(std::size_t n, double rho, double beta, std::uint64_t seed) {
  return generate_sbm(SbmConfig{n, 3, {0.2, 0.3, 0.5}, make_planted_theta(rho, beta, 3), seed, false});
}

void check_same_fit(const FitResult &a, const FitResult &b, bool same_traffic = true) {
  CHECK(a.labels == b.labels);
  CHECK(a.rounds == b.rounds);
  CHECK(a.params.pi == b.params.pi);
  CHECK(a.params.rates == b.params.rates);
  REQUIRE(a.ledger.rounds.size() == b.ledger.rounds.size());
  for (std::size_t s = 0; s < a.ledger.rounds.size(); ++s) {
    CHECK(a.ledger.rounds[s].objective == b.ledger.rounds[s].objective);
    if (same_traffic) {
      CHECK(a.ledger.rounds[s].bits_broadcast == b.ledger.rounds[s].bits_broadcast);
      CHECK(a.ledger.rounds[s].ops == b.ledger.rounds[s].ops);
    }
  }
}

} // namespace

TEST_CASE("aggregation on the eight-node example") {
  const auto g = testutil::eight_node_graph();
  auto map = std::make_shared<const IndexMap>(IndexMap::from_blocks(8, {{0, 1, 2, 4}, {3, 5, 6, 7}}));
  const auto split = make_shards(g, map);
  // Five nodes in block 1 and three in block 2.
  const LabelVector labels{0, 0, 0, 0, 0, 1, 1, 1};
  std::vector<WorkerSummary> s;
  for (const auto &shard : split.shards) {
    s.push_back(worker_summary(shard, labels, 2));
  }
  const auto agg = aggregate_global_params(s, 8);
  CHECK(agg.params.pi(0) == doctest::Approx(5.0 / 8));
  CHECK(agg.params.pi(1) == doctest::Approx(3.0 / 8));
  CHECK_FALSE(agg.degenerate);
  // Global block edge counts: O(1,1) = 2*(6 + 1) = 14 endpoints; O(1,2) = O(2,1) = 4; O(2,2) = 6.
  CHECK(agg.params.rates(0, 0) == doctest::Approx(14.0 / 5));
  CHECK(agg.params.rates(0, 1) == doctest::Approx(4.0 / 5));
  CHECK(agg.params.rates(1, 0) == doctest::Approx(4.0 / 3));
  CHECK(agg.params.rates(1, 1) == doctest::Approx(6.0 / 3));

  const auto dc = aggregate_global_params(s, 8, ModelKind::dcsbm);
  CHECK(dc.params.rates(0, 0) == doctest::Approx(14.0 / 18));
  CHECK(dc.params.rates(1, 1) == doctest::Approx(6.0 / 10));
  CHECK(dc.params.rates.rowwise().sum().isApproxToConstant(1.0, 1e-12));
}

TEST_CASE("aggregation repairs empty and edgeless blocks") {
  WorkerSummary s;
  s.block_edges = CountMatrix::Zero(3, 3);
  s.block_edges << 4, 2, 0, 2, 6, 0, 0, 0, 0;
  s.block_sizes = CountVector(3);
  s.block_sizes << 2, 2, 0;
  const auto agg = aggregate_global_params(std::vector<WorkerSummary>{s}, 4);
  CHECK(agg.degenerate);
  CHECK(agg.params.pi(2) == 0.0);
  // Empty block takes the mean of the populated rows.
  CHECK(agg.params.rates(2, 0) == doctest::Approx((2.0 + 1.0) / 2));
  CHECK(agg.params.rates(2, 1) == doctest::Approx((1.0 + 3.0) / 2));

  WorkerSummary zero;
  zero.block_edges = CountMatrix::Zero(2, 2);
  zero.block_sizes = CountVector::Constant(2, 3);
  const auto dc = aggregate_global_params(std::vector<WorkerSummary>{zero}, 6, ModelKind::dcsbm);
  CHECK(dc.degenerate);
  CHECK(dc.params.rates.isApproxToConstant(0.5));

  CHECK_THROWS(aggregate_global_params(std::vector<WorkerSummary>{}, 4));
  WorkerSummary other;
  other.block_edges = CountMatrix::Zero(2, 2);
  other.block_sizes = CountVector::Zero(2);
  CHECK_THROWS(aggregate_global_params(std::vector<WorkerSummary>{s, other}, 4));
}

TEST_CASE("one worker reproduces the single-machine fit round by round") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto net = planted(600, 0.04, 0.7, seed);
    for (ModelKind kind : {ModelKind::sbm, ModelKind::dcsbm}) {
      FitConfig cfg;
      cfg.kind = kind;
      cfg.num_workers = 1;
      cfg.seed = seed;
      cfg.record_trajectory = true;
      const auto dist = run_fit(block_split(net.graph, 1, seed), 3, cfg);
      const auto ref = run_pl_reference(net.graph, 3, cfg);
      CHECK(dist.trajectory == ref.trajectory);
      CHECK(dist.initial_labels == ref.initial_labels);
      // The reference sends no messages, so only the estimates are compared.
      check_same_fit(dist, ref, false);
    }
  }
}

TEST_CASE("worker scheduling does not change the result") {
  const auto net = planted(600, 0.03, 0.8, 11);
  FitConfig cfg;
  cfg.num_workers = 6;
  cfg.seed = 3;
  cfg.parallel_workers = true;
  const auto threaded = run_dpl(net.graph, 3, cfg);

  cfg.parallel_workers = false;
  const auto sequential = run_dpl(net.graph, 3, cfg);
  check_same_fit(threaded, sequential);

  cfg.sequential_order = {5, 3, 1, 0, 2, 4};
  check_same_fit(threaded, run_dpl(net.graph, 3, cfg));

  // Threads finishing in scrambled order.
  cfg.parallel_workers = true;
  cfg.sequential_order.clear();
  cfg.worker_hook = [](std::size_t worker, std::size_t round) {
    std::this_thread::sleep_for(std::chrono::microseconds(((worker * 7 + round * 3) % 6) * 300));
  };
  check_same_fit(threaded, run_dpl(net.graph, 3, cfg));
}

TEST_CASE("planted fit recovers the communities and meters every round") {
  const auto net = planted(1200, 0.03, 0.8, 5);
  FitConfig cfg;
  cfg.num_workers = 4;
  cfg.seed = 1;
  const auto fit = run_dpl(net.graph, 3, cfg);
  CHECK(nmi(net.truth, fit.labels) > 0.9);
  CHECK(fit.ascent_violations == 0);
  CHECK(fit.rounds >= 1);
  CHECK(fit.rounds <= 10);
  CHECK(fit.ledger.rounds.size() == fit.rounds);
  CHECK(fit.params.pi.sum() == doctest::Approx(1.0));

  const WireContext ctx{3, 1200, 300};
  for (const auto &rec : fit.ledger.rounds) {
    CHECK(rec.messages == 4 * 4);
    CHECK(rec.bits_broadcast == 4 * (1200 * 2 + 64 * (3 + 9)));
    CHECK(rec.bits_broadcast == 4 * (label_broadcast_bits(ctx) + params_bits(ctx)));
    CHECK(rec.bits_gathered == 4 * (summary_bits(ctx) + local_labels_bits(ctx)));
    CHECK(rec.em_iterations.size() == 4);
    CHECK(rec.ops >= rec.max_worker_ops);
  }
  CHECK(fit.ledger.total_bits() > 0);
  const std::string csv = fit.ledger.to_csv();
  CHECK(csv.rfind("round,bits_broadcast,bits_gathered,ops,objective\n", 0) == 0);
}

TEST_CASE("no-signal graph and isolated nodes still produce a valid labeling") {
  const auto flat = planted(300, 0.05, 0.0, 2);
  FitConfig cfg;
  cfg.num_workers = 3;
  const auto fit = run_dpl(flat.graph, 3, cfg);
  CHECK(fit.labels.size() == 300);
  CHECK(fit.ascent_violations == 0);

  // Half the nodes have no edges at all.
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < 20; ++i) {
    for (NodeId j = i + 1; j < 20; ++j) {
      if ((i < 10) == (j < 10)) {
        e.emplace_back(i, j);
      }
    }
  }
  const auto sparse = SparseGraph::from_edges(40, e);
  for (ModelKind kind : {ModelKind::sbm, ModelKind::dcsbm}) {
    cfg.kind = kind;
    cfg.num_workers = 2;
    const auto res = run_fit(block_split(sparse, 2, 0), 2, cfg);
    REQUIRE(res.labels.size() == 40);
    for (Label l : res.labels) {
      CHECK(l < 2);
    }
    CHECK(res.labels[0] != res.labels[10]);
  }
}

TEST_CASE("provided initial labels are used as given") {
  const auto net = planted(300, 0.1, 0.9, 4);
  FitConfig cfg;
  cfg.num_workers = 3;
  cfg.init = InitMode::provided;
  cfg.initial_labels = net.truth;
  cfg.max_rounds = 1;
  const auto fit = run_dpl(net.graph, 3, cfg);
  CHECK(fit.initial_labels == net.truth);
  CHECK(fit.rounds == 1);
  cfg.initial_labels.pop_back();
  CHECK_THROWS(run_dpl(net.graph, 3, cfg));
  cfg.initial_labels = LabelVector(300, 3);
  CHECK_THROWS(run_dpl(net.graph, 3, cfg));
}

TEST_CASE("a failing worker aborts the fit with the completed rounds") {
  const auto net = planted(300, 0.05, 0.8, 6);
  FitConfig cfg;
  cfg.num_workers = 3;
  cfg.tolerance = 0.0;
  cfg.worker_hook = [](std::size_t worker, std::size_t round) {
    if (worker == 1 && round == 3) {
      throw std::runtime_error("disk on fire");
    }
  };
  for (bool parallel : {true, false}) {
    cfg.parallel_workers = parallel;
    try {
      run_dpl(net.graph, 3, cfg);
      FAIL("expected FitAborted");
    } catch (const FitAborted &ex) {
      CHECK(ex.ledger.rounds.size() == 2);
      CHECK(std::string(ex.what()).find("disk on fire") != std::string::npos);
    }
  }
}

TEST_CASE("invalid fit requests") {
  const auto g = testutil::random_graph(30, 0.2, 1);
  FitConfig cfg;
  cfg.num_workers = 4;
  CHECK_THROWS_AS(run_dpl(g, 2, cfg), std::invalid_argument);
  cfg.num_workers = 3;
  CHECK_THROWS(run_dpl(g, 0, cfg));
}

TEST_CASE("least squares and scaling report") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{3, 5, 7, 9};
  const auto fit = least_squares(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK_THROWS(least_squares(std::vector<double>{1}, std::vector<double>{1}));

  std::vector<ScalingPoint> pts;
  for (std::size_t r : {2, 5, 10}) {
    ScalingPoint p;
    p.num_nodes = 1000;
    p.num_workers = r;
    p.block_size = 1000 / r;
    p.density = 0.01;
    p.bits_per_round = 3.0 * 1000 * r;
    p.ops_per_round = 0.5 * 1000 * p.block_size * 0.01 + 4;
    pts.push_back(p);
  }
  const auto rep = ledger_scaling_report(pts);
  CHECK(rep.bits.slope == doctest::Approx(3.0));
  CHECK(rep.bits.r_squared == doctest::Approx(1.0));
  CHECK(rep.ops.slope == doctest::Approx(0.5));
  CHECK(rep.ops.intercept == doctest::Approx(4.0));
  pts.pop_back();
  CHECK_THROWS(ledger_scaling_report(pts));
}
