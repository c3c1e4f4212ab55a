#include "dpl/spectral_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace dpl {

namespace {

double sq_dist(const Matrix &points, Eigen::Index i, const Matrix &centers, Eigen::Index c) {
  return (points.row(i) - centers.row(c)).squaredNorm();
}

KMeansResult kmeans_once(const Matrix &points, std::size_t k, std::mt19937_64 &rng, int max_iterations) {
  const Eigen::Index n = points.rows();
  const auto kk = static_cast<Eigen::Index>(k);
  KMeansResult res;
  res.centers.resize(kk, points.cols());
  res.assignment.assign(static_cast<std::size_t>(n), 0);

  // k-means++ seeding
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  res.centers.row(0) = points.row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (Eigen::Index c = 1; c < kk; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(points, i, res.centers, c - 1));
      total += d2[i];
    }
    Eigen::Index chosen = pick(rng);
    if (total > 0.0) {
      double target = unif(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    res.centers.row(c) = points.row(chosen);
  }

  std::vector<Eigen::Index> sizes(k);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = iter == 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < kk; ++c) {
        const double d = sq_dist(points, i, res.centers, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (res.assignment[i] != static_cast<std::uint32_t>(best)) {
        res.assignment[i] = static_cast<std::uint32_t>(best);
        changed = true;
      }
    }

    res.centers.setZero();
    std::fill(sizes.begin(), sizes.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      res.centers.row(res.assignment[i]) += points.row(i);
      ++sizes[res.assignment[i]];
    }
    for (Eigen::Index c = 0; c < kk; ++c) {
      if (sizes[c] > 0) {
        res.centers.row(c) /= static_cast<double>(sizes[c]);
      }
    }
    // Empty-cluster repair: move the empty center to the point farthest from its own center.
    for (Eigen::Index c = 0; c < kk; ++c) {
      if (sizes[c] > 0) {
        continue;
      }
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (sizes[res.assignment[i]] <= 1) {
          continue;
        }
        const double d = sq_dist(points, i, res.centers, res.assignment[i]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far_d < 0.0) {
        continue;
      }
      --sizes[res.assignment[far]];
      res.assignment[far] = static_cast<std::uint32_t>(c);
      sizes[c] = 1;
      res.centers.row(c) = points.row(far);
      changed = true;
    }
    if (!changed) {
      break;
    }
  }

  res.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    res.inertia += sq_dist(points, i, res.centers, res.assignment[i]);
  }
  return res;
}

// M = D_r^{-1/2} (A + c J) D_c^{-1/2}, with D_r, D_c the regularized row and column degrees.
struct Operator {
  const WorkerShard &shard;
  double c = 0.0;
  Vector row_scale;
  Vector col_scale;
};

Operator make_operator(const WorkerShard &shard, bool normalize) {
  const auto rows = static_cast<Eigen::Index>(shard.num_rows());
  const auto cols = static_cast<Eigen::Index>(shard.num_cols());
  // tau is the average column degree of the shard.
  const double tau = static_cast<double>(shard.nnz()) / static_cast<double>(cols);
  Operator op{shard, tau / static_cast<double>(cols), Vector(rows), Vector::Zero(cols)};
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto r = shard.row(static_cast<std::size_t>(i));
    op.row_scale(i) = 1.0 / std::sqrt(static_cast<double>(r.size()) + op.c * static_cast<double>(cols));
    for (NodeId j : r) {
      op.col_scale(j) += 1.0;
    }
  }
  op.col_scale = (op.col_scale.array() + op.c * static_cast<double>(rows)).rsqrt();
  if (!normalize) {
    op.row_scale.setOnes();
    op.col_scale.setOnes();
  }
  return op;
}

// y = M x. x is N x l, y is n x l.
Matrix apply(const Operator &op, const Matrix &x_in) {
  const Matrix x = op.col_scale.asDiagonal() * x_in;
  const auto rows = static_cast<Eigen::Index>(op.shard.num_rows());
  Matrix y(rows, x.cols());
  const Eigen::RowVectorXd colsum = x.colwise().sum();
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::RowVectorXd acc = op.c * colsum;
    for (NodeId j : op.shard.row(static_cast<std::size_t>(i))) {
      acc += x.row(j);
    }
    y.row(i) = op.row_scale(i) * acc;
  }
  return y;
}

// x = M^T y. y is n x l, x is N x l.
Matrix apply_transpose(const Operator &op, const Matrix &y_in) {
  const Matrix y = op.row_scale.asDiagonal() * y_in;
  const auto cols = static_cast<Eigen::Index>(op.shard.num_cols());
  Matrix x = Matrix::Zero(cols, y.cols());
  for (std::size_t i = 0; i < op.shard.num_rows(); ++i) {
    for (NodeId j : op.shard.row(i)) {
      x.row(j) += y.row(static_cast<Eigen::Index>(i));
    }
  }
  const Eigen::RowVectorXd ysum = y.colwise().sum();
  x.rowwise() += op.c * ysum;
  return op.col_scale.asDiagonal() * x;
}

Matrix orthonormalize(const Matrix &a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

LabelVector random_labels(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<Label> dist(0, static_cast<Label>(k - 1));
  LabelVector out(n);
  for (auto &l : out) {
    l = dist(rng);
  }
  return out;
}

InitResult init_impl(const WorkerShard &shard, std::size_t k, std::uint64_t seed, const SpectralOptions &opts,
                     bool spherical) {
  if (k == 0) {
    throw std::invalid_argument("K must be positive");
  }
  InitResult out;
  if (k == 1) {
    out.labels.assign(shard.num_cols(), 0);
    return out;
  }
  const Embedding emb = spectral_embedding(shard, k, seed, opts);
  if (emb.rank_deficient) {
    out.labels = random_labels(shard.num_cols(), k, seed);
    out.fell_back = true;
    return out;
  }
  out.labels = cluster_embedding(emb.values, emb.isolated, k, seed, spherical, opts);
  return out;
}

} // namespace

KMeansResult kmeans(const Matrix &points, std::size_t k, std::uint64_t seed, int restarts, int max_iterations) {
  if (k == 0 || points.rows() < static_cast<Eigen::Index>(k)) {
    throw std::invalid_argument("k-means needs at least k points");
  }
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    KMeansResult run = kmeans_once(points, k, rng, max_iterations);
    if (run.inertia < best.inertia) {
      best = std::move(run);
    }
  }
  return best;
}

Embedding spectral_embedding(const WorkerShard &shard, std::size_t k, std::uint64_t seed,
                             const SpectralOptions &opts) {
  const auto big_n = static_cast<Eigen::Index>(shard.num_cols());
  const auto small_n = static_cast<Eigen::Index>(shard.num_rows());
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::Index width = std::min<Eigen::Index>(kk + opts.oversampling, std::min(big_n, small_n));
  if (width < kk) {
    throw std::invalid_argument("shard too small for the requested number of singular vectors");
  }

  Embedding emb;
  emb.isolated.assign(shard.num_cols(), true);
  for (std::size_t i = 0; i < shard.num_rows(); ++i) {
    for (NodeId j : shard.row(i)) {
      emb.isolated[j] = false;
    }
  }
  const Operator op = make_operator(shard, opts.degree_normalize);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix omega(small_n, width);
  for (Eigen::Index i = 0; i < omega.size(); ++i) {
    omega.data()[i] = gauss(rng);
  }

  // Q spans an approximation of the row space of M (N x width).
  Matrix q = orthonormalize(apply_transpose(op, omega));
  int it = 0;
  for (; it < opts.max_power_iterations; ++it) {
    const Matrix mq = apply(op, q);
    const Matrix mtmq = apply_transpose(op, mq);
    q = orthonormalize(mtmq);
    if (it + 1 < opts.min_power_iterations) {
      continue;
    }
    // Residual of the leading K directions as an invariant subspace of M^T M.
    Eigen::JacobiSVD<Matrix> svd(apply(op, q), Eigen::ComputeThinV);
    const Matrix vk = q * svd.matrixV().leftCols(kk);
    const Matrix g = apply_transpose(op, apply(op, vk));
    const Vector s2 = svd.singularValues().head(kk).array().square();
    const double top = s2(0);
    const double resid = top > 0.0 ? (g - vk * s2.asDiagonal()).norm() / top : 0.0;
    if (resid < opts.tolerance) {
      ++it;
      break;
    }
  }
  emb.power_iterations = it;

  Eigen::JacobiSVD<Matrix> svd(apply(op, q), Eigen::ComputeThinV);
  emb.singular_values = svd.singularValues().head(kk);
  emb.values = q * svd.matrixV().leftCols(kk);
  const double s0 = emb.singular_values(0);
  for (Eigen::Index i = 0; i < kk; ++i) {
    if (!(emb.singular_values(i) > 1e-10 * std::max(s0, 1e-300))) {
      emb.rank_deficient = true;
    }
  }
  return emb;
}

LabelVector cluster_embedding(const Matrix &embedding, const std::vector<bool> &isolated, std::size_t k,
                              std::uint64_t seed, bool spherical, const SpectralOptions &opts) {
  const auto n = static_cast<std::size_t>(embedding.rows());
  std::vector<Eigen::Index> active;
  active.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool skip = (!isolated.empty() && isolated[i]) ||
                      (spherical && embedding.row(static_cast<Eigen::Index>(i)).norm() == 0.0);
    if (!skip) {
      active.push_back(static_cast<Eigen::Index>(i));
    }
  }

  LabelVector labels(n, 0);
  if (active.size() < k) {
    return labels;
  }
  Matrix pts(static_cast<Eigen::Index>(active.size()), embedding.cols());
  for (std::size_t a = 0; a < active.size(); ++a) {
    pts.row(static_cast<Eigen::Index>(a)) = embedding.row(active[a]);
    if (spherical) {
      pts.row(static_cast<Eigen::Index>(a)).normalize();
    }
  }
  const KMeansResult km = kmeans(pts, k, seed, opts.kmeans_restarts, opts.kmeans_max_iterations);

  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t a = 0; a < active.size(); ++a) {
    labels[static_cast<std::size_t>(active[a])] = km.assignment[a];
    ++sizes[km.assignment[a]];
  }
  // Ties go to the smallest label.
  const auto largest = static_cast<Label>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<char> is_active(n, 0);
  for (auto a : active) {
    is_active[static_cast<std::size_t>(a)] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_active[i]) {
      labels[i] = largest;
    }
  }
  return labels;
}

InitResult init_labels_scp(const WorkerShard &shard, std::size_t k, std::uint64_t seed,
                           const SpectralOptions &opts) {
  return init_impl(shard, k, seed, opts, false);
}

InitResult init_labels_ssc(const WorkerShard &shard, std::size_t k, std::uint64_t seed,
                           const SpectralOptions &opts) {
  return init_impl(shard, k, seed, opts, true);
}

} // namespace dpl
