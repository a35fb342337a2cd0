#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "twotruths/error.hpp"
#include "twotruths/rng.hpp"
#include "twotruths/spectral.hpp"

namespace twotruths {

namespace {

constexpr std::string_view kModule = "spectral";

bool magnitude_tie(double a, double b) {
  return std::abs(std::abs(a) - std::abs(b)) <= 1e-10 * std::max(1.0, std::abs(a));
}

// Indices sorted by |value| descending; near-ties put the positive value first.
std::vector<Eigen::Index> magnitude_order(const Eigen::VectorXd& values) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(values[a]) > std::abs(values[b]);
  });
  for (bool swapped = true; swapped;) {
    swapped = false;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const double a = values[order[i]], b = values[order[i + 1]];
      if (a < 0.0 && b > 0.0 && magnitude_tie(a, b)) {
        std::swap(order[i], order[i + 1]);
        swapped = true;
      }
    }
  }
  return order;
}

void apply(const SymmetricOperator& op, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  op.apply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
           std::span<double>(y.data(), static_cast<std::size_t>(y.size())));
}

// Random unit vector orthogonal to the first `cols` columns of V.
Eigen::VectorXd random_orthogonal(const Eigen::MatrixXd& V, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(V.rows());
  for (int attempt = 0; attempt < 8; ++attempt) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    for (int pass = 0; pass < 2 && cols > 0; ++pass) {
      const Eigen::VectorXd h = V.leftCols(cols).transpose() * v;
      v -= V.leftCols(cols) * h;
    }
    const double nrm = v.norm();
    if (nrm > 1e-8) return v / nrm;
  }
  throw Error(Errc::not_converged, kModule, "could not extend the Krylov basis");
}

std::vector<double> residual_norms(const SymmetricOperator& op, const Eigen::MatrixXd& vectors,
                                   std::span<const double> values) {
  std::vector<double> out;
  Eigen::VectorXd y(vectors.rows());
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    const Eigen::VectorXd x = vectors.col(j);
    apply(op, x, y);
    out.push_back((y - values[static_cast<std::size_t>(j)] * x).norm());
  }
  return out;
}

}  // namespace

void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      if (std::abs(vectors(i, j)) > best) {
        best = std::abs(vectors(i, j));
        arg = i;
      }
    }
    if (vectors.rows() > 0 && vectors(arg, j) < 0.0) vectors.col(j) *= -1.0;
  }
}

Eigenpairs dense_top_eigenpairs(const Eigen::MatrixXd& M, std::size_t m) {
  const auto n = static_cast<std::size_t>(M.rows());
  if (m < 1 || m > n) {
    throw Error(Errc::invalid_argument, kModule,
                "requested " + std::to_string(m) + " eigenpairs of an operator of size " + std::to_string(n));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw Error(Errc::not_converged, kModule, "dense eigensolver failed");
  const auto order = magnitude_order(es.eigenvalues());
  Eigenpairs out;
  out.vectors.resize(M.rows(), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    out.spectrum.eigenvalues.push_back(es.eigenvalues()[order[i]]);
    out.vectors.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(order[i]);
  }
  fix_signs(out.vectors);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::VectorXd v = out.vectors.col(static_cast<Eigen::Index>(i));
    out.spectrum.residuals.push_back((M * v - out.spectrum.eigenvalues[i] * v).norm());
  }
  return out;
}

Eigenpairs top_eigenpairs(const SymmetricOperator& op, std::size_t m, const SolverOptions& opts) {
  const std::size_t n = op.size;
  if (m < 1 || m > n) {
    throw Error(Errc::invalid_argument, kModule,
                "requested " + std::to_string(m) + " eigenpairs of an operator of size " + std::to_string(n));
  }
  const std::size_t p = std::min(n, std::max(opts.krylov_dim.value_or(std::max<std::size_t>(2 * m + 10, 32)), m + 1));
  const std::size_t max_restarts = opts.max_restarts.value_or(20 * m);
  const auto P = static_cast<Eigen::Index>(p);

  Rng rng(opts.seed);
  Eigen::MatrixXd V(static_cast<Eigen::Index>(n), P + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(P, P);
  V.col(0) = random_orthogonal(V, 0, rng);
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));

  Eigenpairs out;
  std::size_t kept = 0;
  double scale = 0.0;
  for (std::size_t restart = 0;; ++restart) {
    double beta = 0.0;
    for (std::size_t j = kept; j < p; ++j) {
      const auto J = static_cast<Eigen::Index>(j);
      apply(op, V.col(J), w);
      ++out.spectrum.matvecs;
      const auto basis = V.leftCols(J + 1);
      Eigen::VectorXd h = basis.transpose() * w;
      w -= basis * h;
      const Eigen::VectorXd h2 = basis.transpose() * w;
      w -= basis * h2;
      h += h2;
      H.block(0, J, J + 1, 1) = h;
      H.block(J, 0, 1, J + 1) = h.transpose();
      beta = w.norm();
      scale = std::max({scale, h.cwiseAbs().maxCoeff(), beta});
      if (j + 1 == n) {
        beta = 0.0;  // the basis spans the whole space
      } else if (beta <= 1e-12 * scale) {
        beta = 0.0;  // invariant subspace; continue with a fresh direction
        V.col(J + 1) = random_orthogonal(V, J + 1, rng);
      } else {
        V.col(J + 1) = w / beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) throw Error(Errc::not_converged, kModule, "projected eigenproblem failed");
    const auto order = magnitude_order(es.eigenvalues());
    const Eigen::MatrixXd& S = es.eigenvectors();

    bool converged = true;
    std::vector<double> estimates;
    for (std::size_t i = 0; i < m; ++i) {
      const double theta = es.eigenvalues()[order[i]];
      const double est = std::abs(beta * S(P - 1, order[i]));
      estimates.push_back(est);
      if (est > opts.tol * std::max(1.0, std::abs(theta))) converged = false;
    }

    if (converged || restart >= max_restarts) {
      out.spectrum.restarts = restart;
      out.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) {
        out.spectrum.eigenvalues.push_back(es.eigenvalues()[order[i]]);
        Eigen::VectorXd y = V.leftCols(P) * S.col(order[i]);
        out.vectors.col(static_cast<Eigen::Index>(i)) = y / y.norm();
      }
      fix_signs(out.vectors);
      out.spectrum.residuals = residual_norms(op, out.vectors, out.spectrum.eigenvalues);
      if (!converged) {
        std::ostringstream msg;
        msg << "Lanczos did not converge after " << restart << " restarts; residual estimates:";
        for (double e : estimates) msg << ' ' << e;
        throw Error(Errc::not_converged, kModule, msg.str());
      }
      return out;
    }

    // Thick restart: keep the leading Ritz vectors plus the residual direction.
    kept = std::min(p - 1, m + (p - m) / 2);
    const auto K = static_cast<Eigen::Index>(kept);
    Eigen::MatrixXd selected(P, K);
    for (Eigen::Index i = 0; i < K; ++i) selected.col(i) = S.col(order[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXd ritz = V.leftCols(P) * selected;
    V.col(K) = V.col(P);
    V.leftCols(K) = ritz;
    H.setZero();
    for (Eigen::Index i = 0; i < K; ++i) H(i, i) = es.eigenvalues()[order[static_cast<std::size_t>(i)]];
  }
}

}  // namespace twotruths
