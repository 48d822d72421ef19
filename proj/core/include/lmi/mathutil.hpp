#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace lmi {

/// Digamma via recurrence shift below 6 plus the asymptotic series;
/// absolute accuracy ~1e-12 for x > 0.
double digamma(double x);

/// Total-variation distance between two discrete distributions (0.5 * L1).
double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// algorithm, O(n^3)). Returns perm with perm[row] = assigned column.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

/// FNV-1a 64-bit digest of a byte string, as 16 hex characters.
std::string fnv1a64_hex(const std::string& bytes);

/// FNV-1a 64-bit digest of a file's contents.
std::string fnv1a64_file_hex(const std::string& path);

}  // namespace lmi
