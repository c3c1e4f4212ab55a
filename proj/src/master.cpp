#include "dpl/master.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include "dpl/protocol.hpp"

namespace dpl {

std::uint64_t RoundLedger::total_bits() const {
  std::uint64_t t = 0;
  for (const auto &r : rounds) {
    t += r.bits_broadcast + r.bits_gathered;
  }
  return t;
}

std::uint64_t RoundLedger::total_ops() const {
  std::uint64_t t = 0;
  for (const auto &r : rounds) {
    t += r.ops;
  }
  return t;
}

std::size_t RoundLedger::non_monotone_rounds() const {
  std::size_t c = 0;
  for (std::size_t i = 1; i < rounds.size(); ++i) {
    if (rounds[i].objective < rounds[i - 1].objective) {
      ++c;
    }
  }
  return c;
}

std::string RoundLedger::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "round,bits_broadcast,bits_gathered,ops,objective\n";
  for (const auto &r : rounds) {
    out << r.round << ',' << r.bits_broadcast << ',' << r.bits_gathered << ',' << r.ops << ',' << r.objective
        << '\n';
  }
  return out.str();
}

AggregateResult aggregate_global_params(std::span<const WorkerSummary> summaries, std::size_t num_nodes,
                                        ModelKind kind) {
  if (summaries.empty()) {
    throw std::invalid_argument("no worker summaries");
  }
  const Eigen::Index k = summaries.front().block_sizes.size();
  CountMatrix edges = CountMatrix::Zero(k, k);
  CountVector sizes = CountVector::Zero(k);
  for (const auto &s : summaries) {
    if (s.block_sizes.size() != k || s.block_edges.rows() != k || s.block_edges.cols() != k) {
      throw std::invalid_argument("worker summaries disagree on K");
    }
    edges += s.block_edges;
    sizes += s.block_sizes;
  }

  AggregateResult out;
  out.params.kind = kind;
  out.params.pi.resize(k);
  out.params.rates = Matrix::Zero(k, k);
  for (Eigen::Index l = 0; l < k; ++l) {
    out.params.pi(l) = static_cast<double>(sizes(l)) / static_cast<double>(num_nodes);
  }
  Vector mean_row = Vector::Zero(k);
  Eigen::Index populated = 0;
  for (Eigen::Index l = 0; l < k; ++l) {
    if (sizes(l) == 0) {
      out.degenerate = true;
      continue;
    }
    for (Eigen::Index m = 0; m < k; ++m) {
      out.params.rates(l, m) = static_cast<double>(edges(l, m)) / static_cast<double>(sizes(l));
    }
    mean_row += out.params.rates.row(l).transpose();
    ++populated;
  }
  if (out.degenerate && populated > 0) {
    mean_row /= static_cast<double>(populated);
    for (Eigen::Index l = 0; l < k; ++l) {
      if (sizes(l) == 0) {
        out.params.rates.row(l) = mean_row.transpose();
      }
    }
  }
  if (kind == ModelKind::dcsbm) {
    for (Eigen::Index l = 0; l < k; ++l) {
      const double s = out.params.rates.row(l).sum();
      if (s > 0.0) {
        out.params.rates.row(l) /= s;
      } else {
        out.params.rates.row(l).setConstant(1.0 / static_cast<double>(k));
        out.degenerate = true;
      }
    }
  }
  return out;
}

InitResult initialize_labels(const WorkerShard &first_shard, std::size_t k, const FitConfig &cfg) {
  const std::uint64_t seed = derive_seed(cfg.seed, 1);
  InitMode mode = cfg.init;
  if (mode == InitMode::automatic) {
    mode = cfg.kind == ModelKind::sbm ? InitMode::scp : InitMode::ssc;
  }
  switch (mode) {
  case InitMode::scp:
    return init_labels_scp(first_shard, k, seed, cfg.spectral);
  case InitMode::ssc:
    return init_labels_ssc(first_shard, k, seed, cfg.spectral);
  case InitMode::provided: {
    if (cfg.initial_labels.size() != first_shard.num_cols()) {
      throw std::invalid_argument("provided initial labels have wrong length");
    }
    for (Label l : cfg.initial_labels) {
      if (l >= k) {
        throw std::invalid_argument("provided initial label out of range");
      }
    }
    return InitResult{cfg.initial_labels, false};
  }
  case InitMode::automatic:
    break;
  }
  throw std::logic_error("unreachable init mode");
}

namespace {

struct WorkerRoundStats {
  std::uint64_t ops = 0;
  int em_iterations = 0;
  bool degenerate = false;
  std::size_t ascent_violations = 0;
};

// One worker process: reacts to master messages and replies through the transport.
class WorkerNode {
public:
  WorkerNode(const WorkerShard &shard, std::size_t k, const FitConfig &cfg, const WireContext &ctx)
      : shard_(shard), k_(k), cfg_(cfg), ctx_(ctx) {}

  // Returns false on shutdown. Failures are reported to the master as error messages.
  bool step(Transport &transport, std::size_t round) {
    const std::size_t self = shard_.worker_id() + 1;
    Envelope msg = transport.receive(self);
    try {
      return handle(transport, msg, round);
    } catch (const std::exception &ex) {
      const std::string what = ex.what();
      Packet p;
      p.bytes.assign(what.begin(), what.end());
      transport.send(0, Envelope{MessageKind::error, shard_.worker_id(), std::move(p)});
      return true;
    }
  }

  [[nodiscard]] const WorkerRoundStats &stats() const noexcept { return stats_; }

private:
  bool handle(Transport &transport, const Envelope &msg, std::size_t round) {
    switch (msg.kind) {
    case MessageKind::labels: {
      labels_ = decode_labels(msg.packet, ctx_.num_nodes, ctx_);
      stats_ = WorkerRoundStats{};
      OpCounter ops;
      const WorkerSummary s = worker_summary(shard_, labels_, k_, &ops);
      stats_.ops += ops.madds;
      transport.send(0, Envelope{MessageKind::summary, shard_.worker_id(), encode_summary(s, ctx_)});
      return true;
    }
    case MessageKind::params: {
      const ModelParams init = decode_params(msg.packet, cfg_.kind, ctx_);
      OpCounter ops;
      const CountStats b = count_stats(shard_, labels_, k_, &ops);
      const EmResult em = run_em(b, init, cfg_.em);
      LocalLabelsMessage reply{local_label_update(em.responsibilities), em.objective()};
      stats_.ops += ops.madds + em.ops + static_cast<std::uint64_t>(shard_.num_rows() * k_);
      stats_.em_iterations = em.iterations;
      stats_.degenerate = em.degenerate;
      stats_.ascent_violations = em.ascent_violations;
      if (cfg_.worker_hook) {
        cfg_.worker_hook(shard_.worker_id(), round);
      }
      transport.send(0, Envelope{MessageKind::local_labels, shard_.worker_id(), encode_local_labels(reply, ctx_)});
      return true;
    }
    case MessageKind::shutdown:
      return false;
    default:
      throw std::runtime_error("worker received unexpected message");
    }
  }

  const WorkerShard &shard_;
  std::size_t k_;
  const FitConfig &cfg_;
  WireContext ctx_;
  LabelVector labels_;
  WorkerRoundStats stats_;
};

} // namespace

FitResult run_fit(const SplitResult &split, std::size_t k, const FitConfig &cfg) {
  if (k == 0) {
    throw std::invalid_argument("K must be positive");
  }
  if (split.shards.empty()) {
    throw std::invalid_argument("no shards");
  }
  const IndexMap &map = *split.index_map;
  const std::size_t num_workers = split.shards.size();
  const WireContext ctx{k, map.num_nodes, map.block_size};

  FitResult result;
  const InitResult init = initialize_labels(split.shards.front(), k, cfg);
  result.init_fell_back = init.fell_back;
  result.initial_labels = init.labels;
  LabelVector labels = init.labels;
  if (cfg.record_trajectory) {
    result.trajectory.push_back(labels);
  }

  InProcessTransport transport(num_workers);
  std::vector<WorkerNode> nodes;
  nodes.reserve(num_workers);
  for (const auto &shard : split.shards) {
    nodes.emplace_back(shard, k, cfg, ctx);
  }

  // Round counter visible to worker threads (written before each round's broadcasts).
  std::atomic<std::size_t> round_no{0};
  std::vector<std::jthread> threads;
  if (cfg.parallel_workers) {
    threads.reserve(num_workers);
    for (std::size_t r = 0; r < num_workers; ++r) {
      threads.emplace_back([&, r] {
        while (nodes[r].step(transport, round_no.load())) {
        }
      });
    }
  }
  std::vector<std::size_t> order = cfg.sequential_order;
  if (order.empty()) {
    order.resize(num_workers);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  auto drive_workers = [&] {
    if (!cfg.parallel_workers) {
      for (std::size_t r : order) {
        nodes[r].step(transport, round_no.load());
      }
    }
  };
  auto shutdown = [&] {
    for (std::size_t r = 0; r < num_workers; ++r) {
      transport.send(r + 1, Envelope{MessageKind::shutdown, 0, {}});
    }
    drive_workers();
    threads.clear();
  };

  try {
    std::optional<double> previous_objective;
    for (int s = 1; s <= cfg.max_rounds; ++s) {
      round_no.store(static_cast<std::size_t>(s));
      transport.reset_counters();
      RoundRecord rec;
      rec.round = static_cast<std::size_t>(s);

      // Current global labels to every worker; workers answer with (O_r, n_r).
      const Packet label_packet = encode_labels(labels, ctx);
      for (std::size_t r = 0; r < num_workers; ++r) {
        transport.send(r + 1, Envelope{MessageKind::labels, 0, label_packet});
      }
      drive_workers();
      std::vector<WorkerSummary> summaries(num_workers);
      for (std::size_t got = 0; got < num_workers; ++got) {
        Envelope e = transport.receive(0);
        if (e.kind == MessageKind::error) {
          throw FitAborted("worker " + std::to_string(e.sender) + " failed: " +
                               std::string(e.packet.bytes.begin(), e.packet.bytes.end()),
                           result.ledger);
        }
        if (e.kind != MessageKind::summary) {
          throw std::runtime_error("master expected a summary message");
        }
        summaries[e.sender] = decode_summary(e.packet, ctx);
      }

      AggregateResult agg = aggregate_global_params(summaries, map.num_nodes, cfg.kind);
      rec.degenerate = agg.degenerate;
      const Packet param_packet = encode_params(agg.params, ctx);
      for (std::size_t r = 0; r < num_workers; ++r) {
        transport.send(r + 1, Envelope{MessageKind::params, 0, param_packet});
      }
      drive_workers();
      std::vector<LabelVector> locals(num_workers);
      std::vector<double> objectives(num_workers, 0.0);
      for (std::size_t got = 0; got < num_workers; ++got) {
        Envelope e = transport.receive(0);
        if (e.kind == MessageKind::error) {
          throw FitAborted("worker " + std::to_string(e.sender) + " failed: " +
                               std::string(e.packet.bytes.begin(), e.packet.bytes.end()),
                           result.ledger);
        }
        if (e.kind != MessageKind::local_labels) {
          throw std::runtime_error("master expected a local label message");
        }
        LocalLabelsMessage m = decode_local_labels(e.packet, ctx);
        locals[e.sender] = std::move(m.labels);
        objectives[e.sender] = m.objective;
      }

      rec.bits_broadcast = transport.downstream_bits();
      rec.bits_gathered = transport.upstream_bits();
      rec.messages = transport.messages_sent();
      rec.objective = 0.0;
      for (std::size_t r = 0; r < num_workers; ++r) {
        const auto &st = nodes[r].stats();
        rec.objective += objectives[r];
        rec.ops += st.ops;
        rec.max_worker_ops = std::max(rec.max_worker_ops, st.ops);
        rec.em_iterations.push_back(st.em_iterations);
        rec.degenerate = rec.degenerate || st.degenerate;
        result.ascent_violations += st.ascent_violations;
      }
      result.em_invocations += num_workers;

      LabelVector next = reassemble_labels(locals, map);
      for (std::size_t i = 0; i < next.size(); ++i) {
        rec.label_changes += next[i] != labels[i] ? 1 : 0;
      }
      labels = std::move(next);
      if (cfg.record_trajectory) {
        result.trajectory.push_back(labels);
      }
      result.params = std::move(agg.params);
      result.degenerate_flags.push_back(rec.degenerate);
      result.ledger.rounds.push_back(std::move(rec));
      result.rounds = static_cast<std::size_t>(s);

      const double value = result.ledger.rounds.back().objective;
      if (previous_objective &&
          std::abs(value - *previous_objective) <= cfg.tolerance * std::abs(*previous_objective)) {
        result.converged = true;
        break;
      }
      previous_objective = value;
    }
  } catch (...) {
    shutdown();
    throw;
  }
  shutdown();
  result.labels = std::move(labels);
  return result;
}

FitResult run_dpl(const SparseGraph &g, std::size_t k, FitConfig cfg) {
  cfg.kind = ModelKind::sbm;
  const SplitResult split = block_split(g, cfg.num_workers, cfg.seed);
  return run_fit(split, k, cfg);
}

FitResult run_dcpl(const SparseGraph &g, std::size_t k, FitConfig cfg) {
  cfg.kind = ModelKind::dcsbm;
  const SplitResult split = block_split(g, cfg.num_workers, cfg.seed);
  return run_fit(split, k, cfg);
}

FitResult run_pl_reference(const SparseGraph &g, std::size_t k, const FitConfig &cfg) {
  const std::size_t n = g.num_nodes();
  const auto kk = static_cast<Eigen::Index>(k);

  // Initialization sees the whole adjacency as a single shard.
  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), NodeId{0});
  auto whole = std::make_shared<const IndexMap>(IndexMap::from_blocks(n, {all}));
  const SplitResult single = make_shards(g, whole);

  FitResult result;
  const InitResult init = initialize_labels(single.shards.front(), k, cfg);
  result.init_fell_back = init.fell_back;
  result.initial_labels = init.labels;
  LabelVector labels = init.labels;
  if (cfg.record_trajectory) {
    result.trajectory.push_back(labels);
  }

  std::optional<double> previous_objective;
  for (int s = 1; s <= cfg.max_rounds; ++s) {
    // Block counts of (A, e) straight from the graph.
    WorkerSummary whole_counts;
    whole_counts.block_edges = CountMatrix::Zero(kk, kk);
    whole_counts.block_sizes = CountVector::Zero(kk);
    CountStats stats;
    stats.b = CountMatrix::Zero(static_cast<Eigen::Index>(n), kk);
    stats.d = CountVector::Zero(static_cast<Eigen::Index>(n));
    for (NodeId i = 0; i < n; ++i) {
      ++whole_counts.block_sizes(labels[i]);
      for (NodeId j : g.neighbors(i)) {
        ++whole_counts.block_edges(labels[i], labels[j]);
        ++stats.b(i, labels[j]);
      }
      stats.d(i) = static_cast<std::int64_t>(g.degree(i));
    }
    AggregateResult agg = aggregate_global_params(std::span<const WorkerSummary>(&whole_counts, 1), n, cfg.kind);
    const EmResult em = run_em(stats, agg.params, cfg.em);
    ++result.em_invocations;
    result.ascent_violations += em.ascent_violations;

    RoundRecord rec;
    rec.round = static_cast<std::size_t>(s);
    rec.objective = em.objective();
    rec.degenerate = agg.degenerate || em.degenerate;
    rec.em_iterations.push_back(em.iterations);
    LabelVector next = local_label_update(em.responsibilities);
    for (std::size_t i = 0; i < n; ++i) {
      rec.label_changes += next[i] != labels[i] ? 1 : 0;
    }
    labels = std::move(next);
    if (cfg.record_trajectory) {
      result.trajectory.push_back(labels);
    }
    result.params = std::move(agg.params);
    result.degenerate_flags.push_back(rec.degenerate);
    result.ledger.rounds.push_back(std::move(rec));
    result.rounds = static_cast<std::size_t>(s);

    const double value = result.ledger.rounds.back().objective;
    if (previous_objective &&
        std::abs(value - *previous_objective) <= cfg.tolerance * std::abs(*previous_objective)) {
      result.converged = true;
      break;
    }
    previous_objective = value;
  }
  result.labels = std::move(labels);
  return result;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("least squares needs at least two paired points");
  }
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

ScalingReport ledger_scaling_report(std::span<const ScalingPoint> points) {
  if (points.size() < 3) {
    throw std::invalid_argument("scaling report needs at least three settings");
  }
  std::vector<double> nr;
  std::vector<double> bits;
  std::vector<double> nnr;
  std::vector<double> ops;
  for (const auto &p : points) {
    nr.push_back(static_cast<double>(p.num_nodes) * static_cast<double>(p.num_workers));
    bits.push_back(p.bits_per_round);
    nnr.push_back(static_cast<double>(p.num_nodes) * static_cast<double>(p.block_size) * p.density);
    ops.push_back(p.ops_per_round);
  }
  return ScalingReport{least_squares(nr, bits), least_squares(nnr, ops)};
}

} // namespace dpl
