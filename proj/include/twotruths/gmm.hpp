#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace twotruths::gmm {

struct Options {
  std::size_t max_iter = 500;
  /// Stop when (LL_t - LL_{t-1}) < ll_tol * |LL_{t-1}|.
  double ll_tol = 1e-8;
  /// Defaults to 1e-6 times the mean per-dimension variance of the data.
  std::optional<double> reg_floor;
  std::size_t n_init = 5;
  std::size_t lloyd_iters = 10;
};

/// Full-covariance Gaussian mixture.
struct Model {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  double log_likelihood = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  /// Log-likelihood of the parameters entering each EM iteration, then the final one.
  std::vector<double> ll_history;
  double reg_floor = 0.0;
  /// EM runs abandoned because a component lost all responsibility.
  std::size_t failed_inits = 0;

  std::size_t components() const noexcept { return static_cast<std::size_t>(weights.size()); }
  std::size_t dim() const noexcept { return means.empty() ? 0 : static_cast<std::size_t>(means[0].size()); }
};

/// Best of opts.n_init EM runs (by final log-likelihood, first on ties).
Model fit(const Eigen::MatrixXd& X, std::size_t K, std::uint64_t seed, const Options& opts = {});

/// (K-1) + K d + K d (d+1) / 2.
std::size_t parameter_count(std::size_t K, std::size_t d);

/// Entry (i, k) = log w_k + log phi(x_i; mu_k, Sigma_k).
Eigen::MatrixXd weighted_log_densities(const Model& model, const Eigen::MatrixXd& X);

double log_likelihood(const Model& model, const Eigen::MatrixXd& X);
/// 2 LL - parameter_count * ln n; larger is better.
double bic(const Model& model, const Eigen::MatrixXd& X);
/// n x K posterior probabilities; rows sum to 1.
Eigen::MatrixXd responsibilities(const Model& model, const Eigen::MatrixXd& X);
/// argmax posterior per row, lowest index on ties.
std::vector<std::uint32_t> hard_assign(const Model& model, const Eigen::MatrixXd& X);

}  // namespace twotruths::gmm
