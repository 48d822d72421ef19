#include "lmi/embed.hpp"

#include <cmath>
#include <limits>

#include "lmi/error.hpp"
#include "lmi/parallel.hpp"
#include "lmi/rng.hpp"

namespace lmi {

namespace {

constexpr double kPFloor = 1e-12;
constexpr double kEntropyTol = 1e-5;
constexpr int kMaxBisections = 100;

Eigen::MatrixXd pairwise_sq_dist(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = sq.replicate(1, x.rows()) + sq.transpose().replicate(x.rows(), 1) - 2.0 * x * x.transpose();
  return d2.cwiseMax(0.0);
}

// Conditional row entropy at precision tau (natural log), with the row
// probabilities written into prob. Exponents are shifted for stability.
double row_entropy(const Eigen::VectorXd& d2, Eigen::Index self, double tau, Eigen::VectorXd& prob) {
  const Eigen::Index n = d2.size();
  double dmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j != self) dmin = std::min(dmin, d2(j));
  }
  double z = 0.0, ed = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == self) {
      prob(j) = 0.0;
      continue;
    }
    const double w = std::exp(-tau * (d2(j) - dmin));
    prob(j) = w;
    z += w;
    ed += w * d2(j);
  }
  prob /= z;
  // H = log Z' + tau * E[d^2 - dmin], with Z' the shifted partition sum.
  return std::log(z) + tau * (ed / z - dmin);
}

}  // namespace

void TsneConfig::validate(int n_points) const {
  if (n_points < 4) throw Error("tsne: need at least 4 points");
  if (perplexity < 1.0 || perplexity > (n_points - 1) / 3.0) {
    throw Error("tsne: perplexity must be in [1, (D-1)/3]");
  }
  if (iters <= 250) throw Error("tsne: iters must exceed 250");
  if (learning_rate <= 0.0) throw Error("tsne: learning_rate must be positive");
  if (early_exaggeration < 1.0) throw Error("tsne: early_exaggeration must be >= 1");
}

Affinities input_affinities(const Eigen::MatrixXd& points, double perplexity, TsneConfig::Metric metric) {
  const int n = static_cast<int>(points.rows());
  if (n < 4) throw Error("input_affinities: need at least 4 points");
  if (perplexity < 1.0 || perplexity > (n - 1) / 3.0) {
    throw Error("input_affinities: perplexity must be in [1, (D-1)/3]");
  }

  Eigen::MatrixXd x = points;
  if (metric == TsneConfig::Metric::kHellinger) {
    // sqrt-transformed rows make Euclidean distance the Hellinger distance
    x = (points.cwiseMax(0.0).array().sqrt() / std::sqrt(2.0)).matrix();
  }
  const Eigen::MatrixXd d2 = pairwise_sq_dist(x);
  const double target = std::log(perplexity);

  Affinities out;
  out.P.resize(n, n);
  out.clamped.assign(static_cast<std::size_t>(n), 0);

  Eigen::MatrixXd cond(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const Eigen::VectorXd row_d2 = d2.row(static_cast<Eigen::Index>(i)).transpose();
    Eigen::VectorXd prob(n);
    double tau = 1.0;
    double h = row_entropy(row_d2, static_cast<Eigen::Index>(i), tau, prob);

    // Bracket the target entropy, then bisect. Entropy decreases in tau.
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    bool ok = std::abs(h - target) <= kEntropyTol;
    for (int step = 0; step < kMaxBisections && !ok; ++step) {
      if (h > target) {
        lo = tau;
        tau = std::isinf(hi) ? tau * 2.0 : 0.5 * (tau + hi);
      } else {
        hi = tau;
        tau = lo > 0.0 ? 0.5 * (tau + lo) : tau * 0.5;
      }
      h = row_entropy(row_d2, static_cast<Eigen::Index>(i), tau, prob);
      ok = std::abs(h - target) <= kEntropyTol;
    }
    if (!ok) out.clamped[i] = 1;  // duplicate-heavy row: keep bound bandwidth
    cond.row(static_cast<Eigen::Index>(i)) = prob.transpose();
  });

  out.conditional = cond;
  out.P = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && out.P(i, j) < kPFloor) out.P(i, j) = kPFloor;
    }
    out.P(i, i) = 0.0;
  }
  out.P /= out.P.sum();
  return out;
}

double tsne_kl(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y) {
  const Eigen::Index n = Y.rows();
  const Eigen::MatrixXd d2 = pairwise_sq_dist(Y);
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) z += 1.0 / (1.0 + d2(i, j));
    }
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = P(i, j);
      if (p <= 0.0) continue;
      const double q = 1.0 / (1.0 + d2(i, j)) / z;
      kl += p * std::log(p / q);
    }
  }
  return kl;
}

Eigen::MatrixXd tsne_gradient(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y) {
  const Eigen::Index n = Y.rows();
  const Eigen::MatrixXd d2 = pairwise_sq_dist(Y);
  Eigen::MatrixXd w(n, n);
  std::vector<double> row_sums(static_cast<std::size_t>(n), 0.0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = static_cast<Eigen::Index>(i) == j ? 0.0 : 1.0 / (1.0 + d2(static_cast<Eigen::Index>(i), j));
      w(static_cast<Eigen::Index>(i), j) = v;
      s += v;
    }
    row_sums[i] = s;
  });
  double z = 0.0;
  for (double s : row_sums) z += s;

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, Y.cols());
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t iu) {
    const Eigen::Index i = static_cast<Eigen::Index>(iu);
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(Y.cols());
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double wij = w(i, j);
      const double coeff = (P(i, j) - wij / z) * wij;
      g += coeff * (Y.row(i) - Y.row(j));
    }
    grad.row(i) = 4.0 * g;
  });
  return grad;
}

Embedding tsne(const Eigen::MatrixXd& theta, const TsneConfig& config) {
  config.validate(static_cast<int>(theta.rows()));
  Rng rng(config.seed);
  Eigen::MatrixXd init(theta.rows(), 2);
  for (Eigen::Index i = 0; i < init.rows(); ++i) {
    for (Eigen::Index c = 0; c < 2; ++c) init(i, c) = 1e-2 * rng.normal();
  }
  return tsne(theta, config, init);
}

Embedding tsne(const Eigen::MatrixXd& theta, const TsneConfig& config, const Eigen::MatrixXd& init) {
  const int n = static_cast<int>(theta.rows());
  config.validate(n);
  if (init.rows() != n || init.cols() != 2) throw Error("tsne: init must be D x 2");

  const Affinities aff = input_affinities(theta, config.perplexity, config.metric);
  const Eigen::MatrixXd& P = aff.P;

  Embedding out;
  out.clamped_rows = aff.clamped;
  out.dominant_topic.resize(static_cast<std::size_t>(n));
  for (int d = 0; d < n; ++d) {
    int best = 0;
    for (int k = 1; k < theta.cols(); ++k) {
      if (theta(d, k) > theta(d, best)) best = k;  // strict > keeps lower index on ties
    }
    out.dominant_topic[static_cast<std::size_t>(d)] = best;
  }

  Eigen::MatrixXd y = init;
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
  out.kl_trace.reserve(static_cast<std::size_t>(config.iters));
  for (int iter = 1; iter <= config.iters; ++iter) {
    const bool exaggerate = iter <= config.exaggeration_iters;
    const Eigen::MatrixXd grad = exaggerate ? tsne_gradient((config.early_exaggeration * P).eval(), y)
                                            : tsne_gradient(P, y);
    const double momentum = iter <= config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;
    velocity = momentum * velocity - config.learning_rate * grad;
    y += velocity;
    y.rowwise() -= y.colwise().mean();  // keep the embedding centered
    if (!y.allFinite()) throw Error("tsne: non-finite coordinates at iteration " + std::to_string(iter));
    out.kl_trace.push_back(tsne_kl(P, y));
  }
  out.coords = y;
  return out;
}

}  // namespace lmi
