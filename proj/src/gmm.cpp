#include "twotruths/gmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "twotruths/error.hpp"
#include "twotruths/rng.hpp"

namespace twotruths::gmm {

namespace {

constexpr std::string_view kModule = "gmm";
constexpr double kCollapseFraction = 1e-8;

struct RunFailed {};

// Correctly rounded sum (Shewchuk partials with half-way correction).
class ExactSum {
 public:
  void add(double x) {
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  double value() const {
    std::size_t n = partials_.size();
    if (n == 0) return 0.0;
    double hi = partials_[--n], lo = 0.0;
    while (n > 0) {
      const double x = hi, y = partials_[--n];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0, x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

void check_dim(const Model& model, const Eigen::MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != model.dim()) {
    throw Error(Errc::dimension_mismatch, kModule,
                "data has " + std::to_string(X.cols()) + " columns, model has dimension " +
                    std::to_string(model.dim()));
  }
}

Eigen::MatrixXd regularize(Eigen::MatrixXd S, double floor) {
  S = 0.5 * (S + S.transpose());
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues()[0];
  if (!(min_eig >= floor)) S.diagonal().array() += floor;
  return S;
}

// Column k holds log w_k + log phi(x_i; mu_k, Sigma_k). Throws RunFailed on a
// non-positive-definite covariance.
Eigen::MatrixXd log_joint(const Eigen::MatrixXd& X, const Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& mu,
                          const std::vector<Eigen::MatrixXd>& cov) {
  const auto n = X.rows(), d = X.cols();
  const auto K = w.size();
  Eigen::MatrixXd out(n, K);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (Eigen::Index k = 0; k < K; ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov[static_cast<std::size_t>(k)]);
    if (llt.info() != Eigen::Success) throw RunFailed{};
    const Eigen::MatrixXd L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    Eigen::MatrixXd centered = (X.rowwise() - mu[static_cast<std::size_t>(k)].transpose()).transpose();
    L.triangularView<Eigen::Lower>().solveInPlace(centered);
    const Eigen::VectorXd maha = centered.colwise().squaredNorm().transpose();
    out.col(k) = (std::log(w[k]) - 0.5 * (static_cast<double>(d) * log2pi + logdet)) - 0.5 * maha.array();
  }
  return out;
}

// Row-wise log-sum-exp; also overwrites `lj` with normalized responsibilities.
double normalize_rows(Eigen::MatrixXd& lj) {
  ExactSum total;
  for (Eigen::Index i = 0; i < lj.rows(); ++i) {
    const double mx = lj.row(i).maxCoeff();
    const double lse = mx + std::log((lj.row(i).array() - mx).exp().sum());
    total.add(lse);
    lj.row(i) = (lj.row(i).array() - lse).exp();
  }
  return total.value();
}

Eigen::MatrixXd kmeans_pp_centers(const Eigen::MatrixXd& X, std::size_t K, Rng& rng, std::size_t lloyd_iters) {
  const auto n = X.rows();
  Eigen::MatrixXd C(static_cast<Eigen::Index>(K), X.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  C.row(0) = X.row(pick(rng));
  Eigen::VectorXd d2 = (X.rowwise() - C.row(0)).rowwise().squaredNorm();
  for (std::size_t k = 1; k < K; ++k) {
    const double total = d2.sum();
    Eigen::Index chosen = pick(rng);
    if (total > 0.0) {
      const double target = unif(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          chosen = i;
          break;
        }
      }
    }
    C.row(static_cast<Eigen::Index>(k)) = X.row(chosen);
    d2 = d2.cwiseMin((X.rowwise() - C.row(static_cast<Eigen::Index>(k))).rowwise().squaredNorm());
  }
  std::vector<Eigen::Index> assign(static_cast<std::size_t>(n), -1);
  for (std::size_t it = 0; it < lloyd_iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (C.rowwise() - X.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (assign[static_cast<std::size_t>(i)] != best) changed = true;
      assign[static_cast<std::size_t>(i)] = best;
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(C.rows(), C.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(C.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
      counts[assign[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (Eigen::Index k = 0; k < C.rows(); ++k) {
      if (counts[k] > 0.0) C.row(k) = sums.row(k) / counts[k];
    }
  }
  return C;
}

Model run_em(const Eigen::MatrixXd& X, std::size_t K, std::uint64_t seed, const Options& opts, double floor,
             const Eigen::MatrixXd& global_cov) {
  const auto n = X.rows();
  const auto KK = static_cast<Eigen::Index>(K);
  Rng rng(seed);

  Model m;
  m.reg_floor = floor;
  m.weights.resize(KK);
  if (K == 1) {
    m.weights[0] = 1.0;
    m.means.push_back(X.colwise().mean().transpose());
    m.covariances.push_back(global_cov);
  } else {
    const Eigen::MatrixXd C = kmeans_pp_centers(X, K, rng, opts.lloyd_iters);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(KK);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (C.rowwise() - X.row(i)).rowwise().squaredNorm().minCoeff(&best);
      counts[best] += 1.0;
    }
    m.weights = counts.cwiseMax(1.0) / counts.cwiseMax(1.0).sum();
    for (Eigen::Index k = 0; k < KK; ++k) {
      m.means.push_back(C.row(k).transpose());
      m.covariances.push_back(global_cov);
    }
  }

  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0;; ++iter) {
    Eigen::MatrixXd resp = log_joint(X, m.weights, m.means, m.covariances);
    const double ll = normalize_rows(resp);
    if (!std::isfinite(ll)) throw RunFailed{};
    m.ll_history.push_back(ll);
    m.log_likelihood = ll;
    m.iterations = iter;
    if (iter > 0 && ll - prev < opts.ll_tol * std::abs(prev)) {
      m.converged = true;
      return m;
    }
    if (iter >= opts.max_iter) return m;
    prev = ll;

    const Eigen::VectorXd Nk = resp.colwise().sum().transpose();
    for (Eigen::Index k = 0; k < KK; ++k) {
      if (!(Nk[k] >= kCollapseFraction * static_cast<double>(n))) throw RunFailed{};
      const Eigen::VectorXd mu = (X.transpose() * resp.col(k)) / Nk[k];
      const Eigen::MatrixXd centered = X.rowwise() - mu.transpose();
      Eigen::MatrixXd S = (centered.array().colwise() * resp.col(k).array()).matrix().transpose() * centered / Nk[k];
      m.means[static_cast<std::size_t>(k)] = mu;
      m.covariances[static_cast<std::size_t>(k)] = regularize(S, floor);
    }
    m.weights = Nk / static_cast<double>(n);
  }
}

}  // namespace

std::size_t parameter_count(std::size_t K, std::size_t d) {
  return (K - 1) + K * d + K * d * (d + 1) / 2;
}

Model fit(const Eigen::MatrixXd& X, std::size_t K, std::uint64_t seed, const Options& opts) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (K < 1) throw Error(Errc::invalid_argument, kModule, "K must be at least 1");
  if (K > n) {
    throw Error(Errc::invalid_argument, kModule,
                "K=" + std::to_string(K) + " exceeds the number of points (" + std::to_string(n) + ")");
  }
  if (n < 2 || X.cols() < 1) throw Error(Errc::fit_failed, kModule, "need at least 2 points to fit a mixture");
  if (!X.allFinite()) throw Error(Errc::invalid_argument, kModule, "data contains non-finite values");

  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - mean;
  const Eigen::MatrixXd global = centered.transpose() * centered / static_cast<double>(n);
  const double floor = opts.reg_floor.value_or(1e-6 * global.diagonal().mean());
  if (!(floor > 0.0)) throw Error(Errc::fit_failed, kModule, "data has zero variance; cannot regularize covariances");
  const Eigen::MatrixXd global_cov = regularize(global, floor);

  std::optional<Model> best;
  std::size_t failed = 0;
  const std::size_t inits = std::max<std::size_t>(opts.n_init, 1);
  for (std::size_t r = 0; r < inits; ++r) {
    // A collapsed run is retried on a fresh stream a few times before the slot is given up.
    for (std::size_t attempt = 0; attempt < 4; ++attempt) {
      try {
        Model m = run_em(X, K, derive_seed(seed, r * 4 + attempt), opts, floor, global_cov);
        if (!best || m.log_likelihood > best->log_likelihood) best = std::move(m);
        break;
      } catch (const RunFailed&) {
        ++failed;
      }
    }
  }
  if (!best) {
    throw Error(Errc::fit_failed, kModule, "all EM runs for K=" + std::to_string(K) + " collapsed");
  }
  best->failed_inits = failed;
  if (failed > 0) spdlog::debug("gmm: {} EM runs collapsed for K={}", failed, K);
  return std::move(*best);
}

Eigen::MatrixXd weighted_log_densities(const Model& model, const Eigen::MatrixXd& X) {
  check_dim(model, X);
  try {
    return log_joint(X, model.weights, model.means, model.covariances);
  } catch (const RunFailed&) {
    throw Error(Errc::singular, kModule, "model covariance is not positive definite");
  }
}

double log_likelihood(const Model& model, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd lj = weighted_log_densities(model, X);
  return normalize_rows(lj);
}

double bic(const Model& model, const Eigen::MatrixXd& X) {
  const double n = static_cast<double>(X.rows());
  return 2.0 * log_likelihood(model, X) -
         static_cast<double>(parameter_count(model.components(), model.dim())) * std::log(n);
}

Eigen::MatrixXd responsibilities(const Model& model, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd lj = weighted_log_densities(model, X);
  normalize_rows(lj);
  return lj;
}

std::vector<std::uint32_t> hard_assign(const Model& model, const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd lj = weighted_log_densities(model, X);
  std::vector<std::uint32_t> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < lj.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < lj.cols(); ++k) {
      if (lj(i, k) > lj(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

}  // namespace twotruths::gmm
