#pragma once

// Independent test oracles. Everything here recomputes expected values from
// first principles and never calls the implementation paths under test.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace lmi_test {

// Exact posterior mean of the topic-word matrix for a tiny collapsed LDA
// instance, by exhaustive enumeration over all K^N topic assignments.
// docs[d] lists the word index of every token in document d.
inline Eigen::MatrixXd enumerate_posterior_beta(const std::vector<std::vector<int>>& docs,
                                                int V, int K, double alpha, double eta) {
  struct Token {
    int doc;
    int word;
  };
  std::vector<Token> tokens;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (int w : docs[d]) tokens.push_back({static_cast<int>(d), w});
  }
  const int N = static_cast<int>(tokens.size());
  const int D = static_cast<int>(docs.size());

  long total_assignments = 1;
  for (int i = 0; i < N; ++i) total_assignments *= K;

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(K, V);
  double weight_sum = 0.0;

  std::vector<int> z(static_cast<std::size_t>(N), 0);
  for (long code = 0; code < total_assignments; ++code) {
    long rem = code;
    for (int i = 0; i < N; ++i) {
      z[static_cast<std::size_t>(i)] = static_cast<int>(rem % K);
      rem /= K;
    }
    Eigen::MatrixXd n_dk = Eigen::MatrixXd::Zero(D, K);
    Eigen::MatrixXd n_kv = Eigen::MatrixXd::Zero(K, V);
    Eigen::VectorXd n_k = Eigen::VectorXd::Zero(K);
    for (int i = 0; i < N; ++i) {
      n_dk(tokens[static_cast<std::size_t>(i)].doc, z[static_cast<std::size_t>(i)]) += 1.0;
      n_kv(z[static_cast<std::size_t>(i)], tokens[static_cast<std::size_t>(i)].word) += 1.0;
      n_k(z[static_cast<std::size_t>(i)]) += 1.0;
    }
    // log p(w, z) under symmetric Dirichlet priors
    double logp = 0.0;
    for (int d = 0; d < D; ++d) {
      const double n_d = n_dk.row(d).sum();
      logp += std::lgamma(K * alpha) - std::lgamma(n_d + K * alpha);
      for (int k = 0; k < K; ++k) logp += std::lgamma(n_dk(d, k) + alpha) - std::lgamma(alpha);
    }
    for (int k = 0; k < K; ++k) {
      logp += std::lgamma(V * eta) - std::lgamma(n_k(k) + V * eta);
      for (int v = 0; v < V; ++v) logp += std::lgamma(n_kv(k, v) + eta) - std::lgamma(eta);
    }
    const double w = std::exp(logp);
    weight_sum += w;
    for (int k = 0; k < K; ++k) {
      for (int v = 0; v < V; ++v) acc(k, v) += w * (n_kv(k, v) + eta) / (n_k(k) + V * eta);
    }
  }
  return acc / weight_sum;
}

// KL(P || Q) for a Student-t low-dimensional layout, written independently
// of the implementation (plain loops straight from the definition).
inline double reference_tsne_kl(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y) {
  const int n = static_cast<int>(Y.rows());
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      z += 1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm());
    }
  }
  double kl = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || P(i, j) <= 0.0) continue;
      const double q = 1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm()) / z;
      kl += P(i, j) * std::log(P(i, j) / q);
    }
  }
  return kl;
}

// Central finite differences of reference_tsne_kl.
inline Eigen::MatrixXd fd_tsne_gradient(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y, double h) {
  Eigen::MatrixXd grad(Y.rows(), Y.cols());
  Eigen::MatrixXd work = Y;
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      work(i, c) = Y(i, c) + h;
      const double up = reference_tsne_kl(P, work);
      work(i, c) = Y(i, c) - h;
      const double down = reference_tsne_kl(P, work);
      work(i, c) = Y(i, c);
      grad(i, c) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

// Shannon entropy of one conditional affinity row, straight from -sum p log p.
inline double reference_row_entropy(const Eigen::VectorXd& row) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (row(j) > 0.0) h -= row(j) * std::log(row(j));
  }
  return h;
}

}  // namespace lmi_test
