#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "twotruths/gmm.hpp"

namespace twotruths {

/// Profile-likelihood elbow of a scree plot.
struct ElbowReport {
  std::vector<double> scree;
  /// profile_ll[d-1] for each split d = 1..len(scree)-1 of the full scree.
  /// A split where both groups are constant scores +infinity.
  std::vector<double> profile_ll;
  std::size_t chosen_d = 0;
  std::size_t elbow_index = 1;
  /// Cumulative position of each elbow found on the way to elbow_index.
  std::vector<std::size_t> elbows;
};

/// Two-group equal-variance Gaussian profile log-likelihood at split d.
double profile_log_likelihood(std::span<const double> scree, std::size_t d);

/// Requires at least 3 nonincreasing, nonnegative values (at every
/// recursion level). Ties in the profile go to the smallest d.
ElbowReport profile_likelihood_d(std::span<const double> scree, std::size_t elbow_index = 1);

struct KCandidate {
  std::size_t K = 0;
  bool included = false;
  double bic = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  std::string note;  // why the candidate was excluded
};

struct KSelectionReport {
  std::vector<KCandidate> candidates;
  std::size_t chosen_K = 0;
  gmm::Model model;  // fit at chosen_K
};

/// Fits every candidate K (duplicates allowed) with seed derive_seed(seed, K)
/// and returns the BIC argmax over converged fits; first on ties.
KSelectionReport select_k_bic(const Eigen::MatrixXd& X, std::span<const std::size_t> k_values, std::uint64_t seed,
                              const gmm::Options& opts = {});
KSelectionReport select_k_bic(const Eigen::MatrixXd& X, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                              const gmm::Options& opts = {});

}  // namespace twotruths
