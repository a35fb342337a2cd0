#include <cctype>
#include <cmath>
#include <ostream>

#include "twotruths/error.hpp"
#include "twotruths/spectral.hpp"

namespace twotruths {

namespace {

constexpr std::string_view kModule = "spectral";

std::vector<double> inverse_sqrt_degrees(const Graph& g) {
  std::vector<double> out(g.num_vertices());
  for (std::size_t v = 0; v < out.size(); ++v) {
    const auto deg = g.degree(static_cast<Vertex>(v));
    if (deg == 0) {
      throw Error(Errc::isolated_vertex, kModule,
                  "vertex " + std::to_string(v) +
                      " is isolated; the normalized adjacency needs every degree >= 1 (use the largest connected component)");
    }
    out[v] = 1.0 / std::sqrt(static_cast<double>(deg));
  }
  return out;
}

Eigen::MatrixXd dense_operator(const Graph& g, EmbeddingMethod method) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> scale;
  if (method == EmbeddingMethod::lse) scale = inverse_sqrt_degrees(g);
  for (auto [u, v] : g.edges()) {
    const double w = scale.empty() ? 1.0 : scale[u] * scale[v];
    M(u, v) = w;
    M(v, u) = w;
  }
  return M;
}

}  // namespace

std::string to_string(EmbeddingMethod method) {
  return method == EmbeddingMethod::ase ? "ase" : "lse";
}

EmbeddingMethod parse_method(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "ase") return EmbeddingMethod::ase;
  if (lower == "lse") return EmbeddingMethod::lse;
  throw Error(Errc::invalid_argument, kModule, "unknown embedding method '" + name + "' (expected ase or lse)");
}

SymmetricOperator adjacency_operator(const Graph& g) {
  return {g.num_vertices(), [&g](std::span<const double> x, std::span<double> y) { g.multiply(x, y); }};
}

SymmetricOperator normalized_adjacency_operator(const Graph& g) {
  auto scale = inverse_sqrt_degrees(g);
  return {g.num_vertices(), [&g, scale = std::move(scale)](std::span<const double> x, std::span<double> y) {
            std::vector<double> tmp(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) tmp[i] = scale[i] * x[i];
            g.multiply(tmp, y);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] *= scale[i];
          }};
}

Eigenpairs graph_eigenpairs(const Graph& g, EmbeddingMethod method, std::size_t m, const SolverOptions& opts) {
  const auto n = g.num_vertices();
  if (n == 0) throw Error(Errc::invalid_argument, kModule, "cannot embed an empty vertex set");
  if (m < 1 || m > n) {
    throw Error(Errc::invalid_argument, kModule,
                "dimension " + std::to_string(m) + " outside [1, " + std::to_string(n) + "]");
  }
  if (n <= opts.dense_threshold) return dense_top_eigenpairs(dense_operator(g, method), m);
  const auto op = method == EmbeddingMethod::ase ? adjacency_operator(g) : normalized_adjacency_operator(g);
  return top_eigenpairs(op, m, opts);
}

Embedding embedding_from(const Eigenpairs& pairs, std::size_t d, EmbeddingMethod method) {
  if (d < 1 || d > static_cast<std::size_t>(pairs.vectors.cols())) {
    throw Error(Errc::invalid_argument, kModule, "embedding dimension exceeds the available eigenpairs");
  }
  Embedding e;
  e.method = method;
  e.X = pairs.vectors.leftCols(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const double lambda = pairs.spectrum.eigenvalues[j];
    e.eigenvalues.push_back(lambda);
    e.X.col(static_cast<Eigen::Index>(j)) *= std::sqrt(std::abs(lambda));
  }
  return e;
}

Embedding embed(const Graph& g, EmbeddingMethod method, std::size_t d, const SolverOptions& opts) {
  return embedding_from(graph_eigenpairs(g, method, d, opts), d, method);
}

Embedding ase_embed(const Graph& g, std::size_t d, const SolverOptions& opts) {
  return embed(g, EmbeddingMethod::ase, d, opts);
}

Embedding lse_embed(const Graph& g, std::size_t d, const SolverOptions& opts) {
  return embed(g, EmbeddingMethod::lse, d, opts);
}

void write_embedding_csv(std::ostream& out, const Embedding& e) {
  out.precision(17);
  out << "# method=" << to_string(e.method) << " eigenvalues=";
  for (std::size_t j = 0; j < e.eigenvalues.size(); ++j) out << (j ? ";" : "") << e.eigenvalues[j];
  out << '\n';
  for (Eigen::Index i = 0; i < e.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.X.cols(); ++j) out << (j ? "," : "") << e.X(i, j);
    out << '\n';
  }
}

}  // namespace twotruths
