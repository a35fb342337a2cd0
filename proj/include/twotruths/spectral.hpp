#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "twotruths/graph.hpp"

namespace twotruths {

/// Symmetric linear operator of size n, available only through y = M x.
struct SymmetricOperator {
  std::size_t size = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
};

struct SolverOptions {
  double tol = 1e-8;
  /// Defaults to 20 * m.
  std::optional<std::size_t> max_restarts;
  /// Defaults to max(2 * m + 10, 32) (clamped to n).
  std::optional<std::size_t> krylov_dim;
  std::uint64_t seed = 0;
  /// Graph embeddings use a dense decomposition at or below this size.
  std::size_t dense_threshold = 256;
};

/// Leading eigenvalues by magnitude (signed) with solver diagnostics.
struct SpectrumSlice {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;  // ||M v - lambda v||_2 per pair
  std::size_t restarts = 0;
  std::size_t matvecs = 0;
};

struct Eigenpairs {
  SpectrumSlice spectrum;
  Eigen::MatrixXd vectors;  // n x m, unit columns, largest-|entry| positive
};

/// Top-m eigenpairs by |lambda| via thick-restart Lanczos with full
/// reorthogonalization. Ties in |lambda| prefer the positive eigenvalue.
/// Converged pairs satisfy ||M v - lambda v|| <= tol * max(1, |lambda|).
Eigenpairs top_eigenpairs(const SymmetricOperator& op, std::size_t m, const SolverOptions& opts = {});

/// Same contract as top_eigenpairs, from a dense symmetric matrix.
Eigenpairs dense_top_eigenpairs(const Eigen::MatrixXd& M, std::size_t m);

/// Flips each column so that its largest-magnitude entry is positive.
void fix_signs(Eigen::MatrixXd& vectors);

enum class EmbeddingMethod { ase, lse };

std::string to_string(EmbeddingMethod method);
EmbeddingMethod parse_method(const std::string& name);

struct Embedding {
  Eigen::MatrixXd X;  // n x d
  std::vector<double> eigenvalues;
  EmbeddingMethod method = EmbeddingMethod::ase;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(X.cols()); }
};

SymmetricOperator adjacency_operator(const Graph& g);
/// D^{-1/2} A D^{-1/2}; throws isolated_vertex if some degree is zero.
SymmetricOperator normalized_adjacency_operator(const Graph& g);

/// Top-m eigenpairs of A (ase) or D^{-1/2} A D^{-1/2} (lse). Uses the dense
/// path when n <= opts.dense_threshold.
Eigenpairs graph_eigenpairs(const Graph& g, EmbeddingMethod method, std::size_t m,
                            const SolverOptions& opts = {});

/// X = U_d |S_d|^{1/2} from the first d pairs.
Embedding embedding_from(const Eigenpairs& pairs, std::size_t d, EmbeddingMethod method);

Embedding ase_embed(const Graph& g, std::size_t d, const SolverOptions& opts = {});
Embedding lse_embed(const Graph& g, std::size_t d, const SolverOptions& opts = {});
Embedding embed(const Graph& g, EmbeddingMethod method, std::size_t d, const SolverOptions& opts = {});

/// Header line "# method=<m> eigenvalues=<l1;l2;...>", then one row per vertex.
void write_embedding_csv(std::ostream& out, const Embedding& e);

}  // namespace twotruths
