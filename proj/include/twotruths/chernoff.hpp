#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "twotruths/sbm.hpp"
#include "twotruths/spectral.hpp"

namespace twotruths {

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

struct ChernoffResult {
  double value = 0.0;
  double t_star = 0.5;
  /// (t, h(t)) on the coarse search grid when requested.
  std::vector<std::pair<double, double>> h_curve;
};

/// t(1-t)/2 dmu' S_t^{-1} dmu + 1/2 log(|S_t| / (|S1|^t |S2|^{1-t})), S_t = t S1 + (1-t) S2.
double h_t(double t, const Gaussian& f1, const Gaussian& f2);
/// d/dt of h_t; h is concave on (0, 1).
double h_t_derivative(double t, const Gaussian& f1, const Gaussian& f2);

/// sup over (0,1) of h_t: a 101-point grid, then bisection on the derivative
/// inside the bracket around the best grid point until it is narrower than opt_tol.
ChernoffResult chernoff_information(const Gaussian& f1, const Gaussian& f2, double opt_tol = 1e-8,
                                    bool keep_curve = false);

/// Per-block Gaussians of one large embedded SBM sample.
struct LimitParams {
  EmbeddingMethod method = EmbeddingMethod::ase;
  std::size_t n_big = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::size_t embedded_vertices = 0;  // size of the largest connected component
  std::vector<double> weights;        // pi
  std::vector<std::size_t> block_sizes;
  /// Sample mean and sample covariance of each block's embedded rows.
  std::vector<Gaussian> sample;
  /// Same means, covariances multiplied by cov_scale (= n_big).
  std::vector<Gaussian> scaled;
  double cov_scale = 1.0;
};

/// Samples at n_big, restricts to the largest connected component, embeds at
/// dimension d and summarizes each block. Every pi_k * n_big must be >= 50 d.
LimitParams empirical_limit_params(const SbmParams& params, EmbeddingMethod method, std::size_t n_big,
                                   std::size_t d, std::uint64_t seed, const SolverOptions& solver = {});

struct ChernoffRatio {
  double rho = 0.0;  // rho_ase / rho_lse
  ChernoffResult ase;
  ChernoffResult lse;
};

/// rho_A / rho_L for a 2-block model, both from the same sampled graph at
/// n_big with d = 2. Blocks are put in a canonical order first, so relabeling
/// the blocks leaves the result unchanged.
ChernoffRatio chernoff_ratio(const SbmParams& params, std::size_t n_big = 4000, std::uint64_t seed = 0,
                             const SolverOptions& solver = {});

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Gaussian> components;

  std::size_t dim() const noexcept { return components.empty() ? 0 : components[0].dim(); }
};

struct KlEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  /// Samples whose log q fell below the floor and were clamped.
  std::size_t floored = 0;
};

double mixture_log_density(const GaussianMixture& mix, const Eigen::VectorXd& x);

/// Monte Carlo KL(p || q) = E_p[log p - log q] from n_samples draws of p.
KlEstimate mixture_kl(const GaussianMixture& p, const GaussianMixture& q, std::size_t n_samples = 200000,
                      std::uint64_t seed = 0, double log_density_floor = -1e4);

/// KL(p || q) for two Gaussians.
double gaussian_kl(const Gaussian& p, const Gaussian& q);

struct BipartitionScore {
  std::vector<std::size_t> side_a;  // always holds component 0
  std::vector<std::size_t> side_b;
  KlEstimate kl_ab;  // KL(a || b)
  KlEstimate kl_ba;
  double score = 0.0;  // (kl_ab + kl_ba) / 2
};

struct DirectedScore {
  std::vector<std::size_t> subset;  // one or two components, scored against the rest
  KlEstimate kl;
};

struct GroupingReport {
  std::string method;
  /// The 7 unordered bipartitions, ranked by symmetrized score.
  std::vector<BipartitionScore> partitions;
  /// The 10 subsets of size 1 or 2, ranked by KL(subset || rest).
  std::vector<DirectedScore> directed;
  std::size_t n_samples = 0;

  const BipartitionScore& best() const { return partitions.front(); }
  const DirectedScore& best_directed() const { return directed.front(); }
};

/// Scores every split of four weighted Gaussians into two weight-renormalized
/// sub-mixtures.
GroupingReport two_truths_grouping(const std::vector<double>& weights, const std::vector<Gaussian>& components,
                                   const std::string& method, std::size_t n_samples = 200000,
                                   std::uint64_t seed = 0);

}  // namespace twotruths
