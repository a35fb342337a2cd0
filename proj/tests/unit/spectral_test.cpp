#include <cmath>
#include <random>

#include "helpers.hpp"
#include "oracles/oracles.hpp"
#include "twotruths/sbm.hpp"
#include "twotruths/spectral.hpp"

using namespace twotruths;

namespace {

SymmetricOperator dense_op(const Eigen::MatrixXd& M) {
  return {static_cast<std::size_t>(M.rows()), [M](std::span<const double> x, std::span<double> y) {
            Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
            Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())) = M * xv;
          }};
}

Eigen::MatrixXd random_symmetric(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd A(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) A(i, j) = A(j, i) = z(rng);
  return A;
}

Eigen::MatrixXd adjacency(const Graph& g) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.num_vertices(), g.num_vertices());
  for (auto [u, v] : g.edges()) A(u, v) = A(v, u) = 1.0;
  return A;
}

Eigen::MatrixXd normalized(const Graph& g) {
  Eigen::MatrixXd A = adjacency(g);
  const Eigen::VectorXd s = A.rowwise().sum().cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * A * s.asDiagonal();
}

// Compares m leading pairs against the Jacobi oracle.
void check_against_oracle(const Eigenpairs& got, const Eigen::MatrixXd& M, std::size_t m, double val_tol,
                          double vec_tol) {
  const auto ref = oracle::jacobi(M);
  REQUIRE(got.spectrum.eigenvalues.size() == m);
  for (std::size_t i = 0; i < m; ++i) {
    CHECK(std::abs(got.spectrum.eigenvalues[i] - ref.values[i]) <= val_tol);
    const double dv = (got.vectors.col(static_cast<Eigen::Index>(i)) - ref.vectors.col(static_cast<Eigen::Index>(i)))
                          .cwiseAbs()
                          .maxCoeff();
    CHECK_MESSAGE(dv <= vec_tol, "pair " << i << " deviates by " << dv);
  }
}

}  // namespace

TEST_CASE("eigensolver on small operators") {
  SUBCASE("identity") {
    const auto r = top_eigenpairs(dense_op(Eigen::MatrixXd::Identity(6, 6)), 3);
    REQUIRE(r.spectrum.eigenvalues.size() == 3);
    for (double l : r.spectrum.eigenvalues) CHECK(l == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((r.vectors.transpose() * r.vectors - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-10);
  }
  SUBCASE("diagonal in magnitude order") {
    const Eigen::Vector3d d(5, -4, 1);
    const auto r = top_eigenpairs(dense_op(d.asDiagonal()), 2);
    CHECK(r.spectrum.eigenvalues[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(r.spectrum.eigenvalues[1] == doctest::Approx(-4.0).epsilon(1e-12));
  }
  SUBCASE("m out of range") {
    CHECK_ERRC(top_eigenpairs(dense_op(Eigen::MatrixXd::Identity(3, 3)), 4), Errc::invalid_argument);
    CHECK_ERRC(top_eigenpairs(dense_op(Eigen::MatrixXd::Identity(3, 3)), 0), Errc::invalid_argument);
  }
  SUBCASE("restart budget exhausted") {
    std::mt19937_64 rng(3);
    SolverOptions opts;
    opts.krylov_dim = 6;
    opts.max_restarts = 1;
    opts.tol = 1e-14;
    CHECK_ERRC(top_eigenpairs(dense_op(random_symmetric(200, rng)), 5, opts), Errc::not_converged);
  }
}

TEST_CASE("eigensolver matches the Jacobi oracle on a random 50x50 matrix") {
  std::mt19937_64 rng(50);
  const auto M = random_symmetric(50, rng);
  check_against_oracle(top_eigenpairs(dense_op(M), 10), M, 10, 1e-8, 1e-6);
}

TEST_CASE("eigensolver residuals meet the tolerance") {
  std::mt19937_64 rng(8);
  const auto M = random_symmetric(120, rng);
  SolverOptions opts;
  opts.tol = 1e-9;
  const auto r = top_eigenpairs(dense_op(M), 8, opts);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto v = r.vectors.col(static_cast<Eigen::Index>(i));
    const double res = (M * v - r.spectrum.eigenvalues[i] * v).norm();
    CHECK(res <= 1e-9 * std::max(1.0, std::abs(r.spectrum.eigenvalues[i])) * 1.0001);
    CHECK(std::abs(res - r.spectrum.residuals[i]) < 1e-12);
  }
}

TEST_CASE("adjacency spectral embedding") {
  SUBCASE("complete graph") {
    const std::size_t m = 7;
    for (std::size_t threshold : {std::size_t{256}, std::size_t{0}}) {
      SolverOptions opts;
      opts.dense_threshold = threshold;
      const auto e = ase_embed(testutil::complete(m), 1, opts);
      CHECK(e.eigenvalues[0] == doctest::Approx(m - 1.0).epsilon(1e-10));
      const double expect = std::sqrt(m - 1.0) / std::sqrt(double(m));
      for (Eigen::Index i = 0; i < e.X.rows(); ++i) CHECK(e.X(i, 0) == doctest::Approx(expect).epsilon(1e-9));
    }
  }
  SUBCASE("empty graph") {
    const auto e = ase_embed(testutil::graph(10, {}), 2);
    for (double l : e.eigenvalues) CHECK(l == 0.0);
    CHECK(e.X.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("dense and iterative paths agree") {
    SbmParams p;
    p.pi = Eigen::Vector2d(0.5, 0.5);
    p.B.resize(2, 2);
    p.B << 0.3, 0.05, 0.05, 0.2;
    const auto g = sample_sbm(p, 200, 4).graph;
    SolverOptions iterative;
    iterative.dense_threshold = 0;
    iterative.tol = 1e-11;
    const auto a = ase_embed(g, 3);
    const auto b = ase_embed(g, 3, iterative);
    CHECK((a.X - b.X).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("affinity blocks separate") {
    SbmParams p;
    p.pi = Eigen::Vector2d(0.5, 0.5);
    p.B.resize(2, 2);
    p.B << 0.4, 0.05, 0.05, 0.4;
    const auto s = sample_sbm(p, 1000, 12);
    const auto e = ase_embed(s.graph, 2);
    Eigen::RowVector2d mean[2] = {Eigen::RowVector2d::Zero(), Eigen::RowVector2d::Zero()};
    double count[2] = {0, 0};
    for (std::size_t i = 0; i < s.block.size(); ++i) {
      mean[s.block[i]] += e.X.row(static_cast<Eigen::Index>(i));
      count[s.block[i]] += 1;
    }
    for (int k = 0; k < 2; ++k) mean[k] /= count[k];
    double within = 0;
    for (std::size_t i = 0; i < s.block.size(); ++i) within += (e.X.row(static_cast<Eigen::Index>(i)) - mean[s.block[i]]).norm();
    within /= static_cast<double>(s.block.size());
    CHECK((mean[0] - mean[1]).norm() > 5 * within);
  }
}

TEST_CASE("Laplacian spectral embedding") {
  SUBCASE("Perron vector of a connected graph") {
    const auto g = testutil::graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 2}, {1, 4}});
    const auto e = lse_embed(g, 2);
    CHECK(e.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    const auto deg = degrees(g);
    const double vol = 2.0 * static_cast<double>(g.num_edges());
    for (std::size_t i = 0; i < deg.size(); ++i) {
      CHECK(std::abs(e.X(static_cast<Eigen::Index>(i), 0)) == doctest::Approx(std::sqrt(deg[i] / vol)).epsilon(1e-10));
    }
  }
  SUBCASE("isolated vertex") {
    CHECK_ERRC(lse_embed(testutil::graph(3, {{0, 1}}), 1), Errc::isolated_vertex);
  }
  SUBCASE("path on three vertices") {
    const auto g = testutil::graph(3, {{0, 1}, {1, 2}});
    const auto r = graph_eigenpairs(g, EmbeddingMethod::lse, 3);
    // Magnitude ties go to the positive eigenvalue.
    CHECK(r.spectrum.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.spectrum.eigenvalues[1] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(r.spectrum.eigenvalues[2]) < 1e-12);
    check_against_oracle(r, normalized(g), 3, 1e-12, 1e-10);
  }
  SUBCASE("eigenvalues lie in [-1, 1]") {
    SbmParams p;
    p.pi = Eigen::Vector2d(0.3, 0.7);
    p.B.resize(2, 2);
    p.B << 0.2, 0.02, 0.02, 0.1;
    const auto g = largest_connected_component(sample_sbm(p, 300, 2).graph).graph;
    SolverOptions opts;
    opts.dense_threshold = 0;
    const auto r = graph_eigenpairs(g, EmbeddingMethod::lse, 20, opts);
    for (double l : r.spectrum.eigenvalues) CHECK(std::abs(l) <= 1.0 + 1e-8);
  }
}

TEST_CASE("embedding CSV header names the method") {
  const auto e = ase_embed(testutil::complete(4), 1);
  std::ostringstream out;
  write_embedding_csv(out, e);
  CHECK(out.str().rfind("# method=ase eigenvalues=", 0) == 0);
  CHECK(parse_method("LSE") == EmbeddingMethod::lse);
  CHECK_ERRC(parse_method("xyz"), Errc::invalid_argument);
}
