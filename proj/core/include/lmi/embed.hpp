#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace lmi {

struct TsneConfig {
  double perplexity = 30.0;
  int iters = 1000;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  double learning_rate = 200.0;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  enum class Metric { kEuclidean, kHellinger } metric = Metric::kEuclidean;
  std::uint64_t seed = 1;

  void validate(int n_points) const;
};

/// Symmetrized input affinities. P is D x D with zero diagonal, entries
/// >= 0, total 1; conditional holds the per-row distributions the entropy
/// search produced. clamped marks rows whose entropy target was unreachable
/// (duplicate points) and got the search-bound bandwidth.
struct Affinities {
  Eigen::MatrixXd P;
  Eigen::MatrixXd conditional;
  std::vector<std::uint8_t> clamped;
};

/// Per-row Gaussian bandwidths are found by binary search (<= 100 steps)
/// until the conditional entropy matches log(perplexity) within 1e-5; the
/// conditionals are then symmetrized, floored at 1e-12 off the diagonal,
/// and renormalized.
Affinities input_affinities(const Eigen::MatrixXd& points, double perplexity,
                            TsneConfig::Metric metric = TsneConfig::Metric::kEuclidean);

/// KL(P || Q) with Student-t Q over the embedding Y.
double tsne_kl(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y);

/// Analytic t-SNE gradient: 4 * sum_j (p_ij - q_ij) (y_i - y_j) / (1 + d^2).
Eigen::MatrixXd tsne_gradient(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y);

struct Embedding {
  Eigen::MatrixXd coords;            // D x 2
  std::vector<int> dominant_topic;   // argmax of each theta row
  std::vector<double> kl_trace;      // true (un-exaggerated) KL per iteration
  std::vector<std::uint8_t> clamped_rows;
};

/// Gradient descent on KL(P||Q) with early exaggeration and the two-phase
/// momentum schedule; init is seeded Gaussian(0, 1e-4). NaN coordinates
/// raise an error naming the iteration.
Embedding tsne(const Eigen::MatrixXd& theta, const TsneConfig& config);

/// Same optimization from an explicit initial layout (tests, restarts).
Embedding tsne(const Eigen::MatrixXd& theta, const TsneConfig& config, const Eigen::MatrixXd& init);

}  // namespace lmi
