#include "dpl/worker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpl {

CountStats count_stats(const WorkerShard &shard, std::span<const Label> labels, std::size_t k, OpCounter *ops) {
  if (labels.size() != shard.num_cols()) {
    throw std::invalid_argument("label vector length must equal the number of graph nodes");
  }
  const auto n = static_cast<Eigen::Index>(shard.num_rows());
  CountStats s;
  s.b = CountMatrix::Zero(n, static_cast<Eigen::Index>(k));
  s.d = CountVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = shard.row(static_cast<std::size_t>(i));
    for (NodeId j : row) {
      ++s.b(i, labels[j]);
    }
    s.d(i) = static_cast<std::int64_t>(row.size());
  }
  if (ops != nullptr) {
    ops->add(shard.nnz());
  }
  return s;
}

namespace {

struct LogRates {
  Matrix log_rate;   // K x K, log(rate + floor)
  Vector base;       // per-block constant: log pi_l - lambda_l (SBM) or log pi_l (DCSBM)
};

LogRates prepare(const ModelParams &params, double floor) {
  LogRates lr;
  lr.log_rate = (params.rates.array() + floor).log().matrix();
  lr.base.resize(params.pi.size());
  for (Eigen::Index l = 0; l < params.pi.size(); ++l) {
    const double lp = params.pi(l) > 0.0 ? std::log(params.pi(l)) : -std::numeric_limits<double>::infinity();
    lr.base(l) = params.kind == ModelKind::sbm ? lp - params.rates.row(l).sum() : lp;
  }
  return lr;
}

} // namespace

double e_step(const CountStats &stats, const ModelParams &params, double floor, Matrix &tau, OpCounter *ops) {
  const Eigen::Index n = stats.b.rows();
  const Eigen::Index k = stats.b.cols();
  if (params.pi.size() != k || params.rates.rows() != k || params.rates.cols() != k) {
    throw std::invalid_argument("parameter dimensions do not match count statistics");
  }
  const LogRates lr = prepare(params, floor);
  tau.resize(n, k);
  double objective = 0.0;
  std::uint64_t madds = 0;
  Vector logits(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index l = 0; l < k; ++l) {
      double s = lr.base(l);
      for (Eigen::Index m = 0; m < k; ++m) {
        const auto c = stats.b(i, m);
        if (c != 0) {
          s += static_cast<double>(c) * lr.log_rate(l, m);
          ++madds;
        }
      }
      logits(l) = s;
      top = std::max(top, s);
    }
    double z = 0.0;
    for (Eigen::Index l = 0; l < k; ++l) {
      const double e = std::exp(logits(l) - top);
      tau(i, l) = e;
      z += e;
    }
    for (Eigen::Index l = 0; l < k; ++l) {
      tau(i, l) /= z;
    }
    madds += static_cast<std::uint64_t>(2 * k);
    objective += top + std::log(z);
  }
  if (ops != nullptr) {
    ops->add(madds);
  }
  return objective;
}

double pseudo_loglik_sbm(const CountStats &stats, const ModelParams &params, double floor) {
  ModelParams p = params;
  p.kind = ModelKind::sbm;
  Matrix tau;
  return e_step(stats, p, floor, tau);
}

double conditional_pseudo_loglik(const CountStats &stats, const ModelParams &params, double floor) {
  ModelParams p = params;
  p.kind = ModelKind::dcsbm;
  Matrix tau;
  return e_step(stats, p, floor, tau);
}

namespace {

// M-step shared by both models. For SBM the denominator of row l is sum_i tau_il;
// for DCSBM it is sum_i tau_il d_i.
bool m_step(const CountStats &stats, const Matrix &tau, double floor, ModelParams &params, OpCounter &ops) {
  const Eigen::Index n = tau.rows();
  const Eigen::Index k = tau.cols();
  Vector mass = Vector::Zero(k);
  Vector denom = Vector::Zero(k);
  Matrix numer = Matrix::Zero(k, k);
  std::uint64_t madds = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double di = static_cast<double>(stats.d(i));
    for (Eigen::Index l = 0; l < k; ++l) {
      const double t = tau(i, l);
      mass(l) += t;
      denom(l) += params.kind == ModelKind::sbm ? t : t * di;
      for (Eigen::Index m = 0; m < k; ++m) {
        const auto c = stats.b(i, m);
        if (c != 0) {
          numer(l, m) += t * static_cast<double>(c);
          ++madds;
        }
      }
    }
    madds += static_cast<std::uint64_t>(2 * k);
  }
  ops.add(madds + static_cast<std::uint64_t>(k * k + k));

  bool degenerate = false;
  const double min_mass = floor * static_cast<double>(n);
  for (Eigen::Index l = 0; l < k; ++l) {
    const bool frozen = mass(l) < min_mass || !(denom(l) > 0.0);
    if (frozen) {
      degenerate = true;
      continue;
    }
    params.rates.row(l) = numer.row(l) / denom(l);
    if (params.kind == ModelKind::dcsbm) {
      const double row_sum = params.rates.row(l).sum();
      if (row_sum > 0.0) {
        params.rates.row(l) /= row_sum;
      }
    }
  }
  params.pi = mass / static_cast<double>(n);
  params.pi /= params.pi.sum();
  return degenerate;
}

EmResult em_impl(const CountStats &stats, const ModelParams &init, const EmOptions &opts) {
  if (stats.b.rows() == 0) {
    throw std::invalid_argument("EM needs at least one node");
  }
  EmResult res;
  res.params = init;
  OpCounter ops;
  Matrix tau;
  double current = e_step(stats, res.params, opts.floor, tau, &ops);
  res.objective_trace.push_back(current);
  for (int t = 0; t < opts.max_iterations; ++t) {
    ModelParams next = res.params;
    res.degenerate |= m_step(stats, tau, opts.floor, next, ops);
    Matrix next_tau;
    const double value = e_step(stats, next, opts.floor, next_tau, &ops);
    res.params = std::move(next);
    tau = std::move(next_tau);
    res.objective_trace.push_back(value);
    ++res.iterations;
    if (value < current - opts.ascent_slack * std::abs(current) - 1e-12) {
      ++res.ascent_violations;
    }
    const bool done = std::abs(value - current) <= opts.tolerance * std::abs(current);
    current = value;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.responsibilities.tau = std::move(tau);
  res.ops = ops.madds;
  return res;
}

} // namespace

EmResult em_sbm(const CountStats &stats, const ModelParams &init, const EmOptions &opts) {
  if (init.kind != ModelKind::sbm) {
    throw std::invalid_argument("em_sbm requires SBM parameters");
  }
  return em_impl(stats, init, opts);
}

EmResult em_dcsbm(const CountStats &stats, const ModelParams &init, const EmOptions &opts) {
  if (init.kind != ModelKind::dcsbm) {
    throw std::invalid_argument("em_dcsbm requires DCSBM parameters");
  }
  return em_impl(stats, init, opts);
}

EmResult run_em(const CountStats &stats, const ModelParams &init, const EmOptions &opts) {
  return init.kind == ModelKind::sbm ? em_sbm(stats, init, opts) : em_dcsbm(stats, init, opts);
}

LabelVector local_label_update(const Responsibilities &resp) {
  const Eigen::Index n = resp.tau.rows();
  LabelVector out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < resp.tau.cols(); ++l) {
      if (resp.tau(i, l) > resp.tau(i, best)) {
        best = l;
      }
    }
    out[static_cast<std::size_t>(i)] = static_cast<Label>(best);
  }
  return out;
}

WorkerSummary worker_summary(const WorkerShard &shard, std::span<const Label> labels, std::size_t k,
                             OpCounter *ops) {
  if (labels.size() != shard.num_cols()) {
    throw std::invalid_argument("label vector length must equal the number of graph nodes");
  }
  const auto kk = static_cast<Eigen::Index>(k);
  WorkerSummary s;
  s.block_edges = CountMatrix::Zero(kk, kk);
  s.block_sizes = CountVector::Zero(kk);
  for (std::size_t i = 0; i < shard.num_rows(); ++i) {
    const Label row_label = labels[shard.global_node(i)];
    ++s.block_sizes(row_label);
    for (NodeId j : shard.row(i)) {
      ++s.block_edges(row_label, labels[j]);
    }
  }
  if (ops != nullptr) {
    ops->add(shard.nnz());
  }
  return s;
}

} // namespace dpl
