#include <cmath>
#include <random>

#include "helpers.hpp"
#include "twotruths/model_selection.hpp"

using namespace twotruths;

namespace {

// Two-group profile likelihood written out directly.
double profile_oracle(const std::vector<double>& s, std::size_t d) {
  const double m = static_cast<double>(s.size());
  double mu1 = 0, mu2 = 0;
  for (std::size_t i = 0; i < s.size(); ++i) (i < d ? mu1 : mu2) += s[i];
  mu1 /= static_cast<double>(d);
  mu2 /= m - static_cast<double>(d);
  double ss = 0;
  for (std::size_t i = 0; i < s.size(); ++i) ss += std::pow(s[i] - (i < d ? mu1 : mu2), 2);
  const double var = ss / m;
  return -0.5 * m * (std::log(2 * M_PI * var) + 1);
}

std::vector<double> scree_of(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  std::vector<double> s;
  for (Eigen::Index i = 0; i < M.rows(); ++i) s.push_back(std::abs(es.eigenvalues()[i]));
  std::sort(s.rbegin(), s.rend());
  return s;
}

Eigen::MatrixXd two_clusters(std::size_t n, double separation, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double shift = i < n / 2 ? 0.0 : separation;
    X(i, 0) = z(rng) + shift;
    X(i, 1) = z(rng);
  }
  return X;
}

}  // namespace

TEST_CASE("profile likelihood on clean screes") {
  CHECK(profile_likelihood_d(std::vector<double>{10, 10, 10, 1, 1, 1, 1}).chosen_d == 3);
  CHECK(profile_likelihood_d(std::vector<double>{100, 1, 1, 1}).chosen_d == 1);
}

TEST_CASE("profile likelihood matches the direct formula") {
  const std::vector<double> s{9.5, 7.1, 6.8, 3.0, 2.2, 1.9, 1.0, 0.4};
  const auto r = profile_likelihood_d(s);
  REQUIRE(r.profile_ll.size() == s.size() - 1);
  for (std::size_t d = 1; d < s.size(); ++d) {
    CHECK(r.profile_ll[d - 1] == doctest::Approx(profile_oracle(s, d)).epsilon(1e-12));
    CHECK(profile_log_likelihood(s, d) == doctest::Approx(profile_oracle(s, d)).epsilon(1e-12));
  }
  const auto best = std::max_element(r.profile_ll.begin(), r.profile_ll.end()) - r.profile_ll.begin();
  CHECK(r.chosen_d == static_cast<std::size_t>(best) + 1);
}

TEST_CASE("profile likelihood input checks") {
  CHECK_ERRC(profile_likelihood_d(std::vector<double>{2, 1}), Errc::invalid_argument);
  CHECK_ERRC(profile_likelihood_d(std::vector<double>{1, 2, 0.5}), Errc::invalid_argument);
  CHECK_ERRC(profile_likelihood_d(std::vector<double>{3, 3, 3, 3}), Errc::degenerate_scree);
}

TEST_CASE("second elbow is cumulative") {
  const std::vector<double> s{20, 20, 8, 8, 8, 1, 1, 1, 1, 1};
  const auto r = profile_likelihood_d(s, 2);
  CHECK(r.elbows == std::vector<std::size_t>{2, 5});
  CHECK(r.chosen_d == 5);
}

TEST_CASE("profile likelihood is scale invariant") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(12);
    for (auto& x : s) x = u(rng) * 10;
    std::sort(s.rbegin(), s.rend());
    const auto d = profile_likelihood_d(s).chosen_d;
    for (double c : {0.5, 2.0, 1024.0, 3.7}) {
      std::vector<double> t = s;
      for (auto& x : t) x *= c;
      CHECK(profile_likelihood_d(t).chosen_d == d);
    }
  }
}

TEST_CASE("planted rank 4 is recovered") {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> z;
  int hits = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const int n = 200;
    Eigen::MatrixXd U(n, 4);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 4; ++j) U(i, j) = z(rng);
    Eigen::MatrixXd N(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) N(i, j) = N(j, i) = 0.05 * z(rng);
    hits += profile_likelihood_d(scree_of(U * U.transpose() + N)).chosen_d == 4;
  }
  CHECK(hits >= 95);
}

TEST_CASE("BIC chooses K") {
  SUBCASE("two well-separated clusters") {
    std::mt19937_64 rng(1);
    int hits = 0;
    for (int t = 0; t < 20; ++t) {
      const auto X = two_clusters(2000, 10.0, rng);
      hits += select_k_bic(X, 1, 6, static_cast<std::uint64_t>(t)).chosen_K == 2;
    }
    CHECK(hits >= 19);
  }
  SUBCASE("single cloud") {
    std::mt19937_64 rng(2);
    int hits = 0;
    for (int t = 0; t < 20; ++t) {
      const auto X = two_clusters(1000, 0.0, rng);
      hits += select_k_bic(X, 1, 4, static_cast<std::uint64_t>(t)).chosen_K == 1;
    }
    CHECK(hits >= 18);
  }
  SUBCASE("report lists every candidate and its BIC") {
    std::mt19937_64 rng(3);
    const auto X = two_clusters(400, 8.0, rng);
    const std::vector<std::size_t> ks{3, 1, 2, 2};
    const auto r = select_k_bic(X, ks, 9);
    REQUIRE(r.candidates.size() == 4);
    for (std::size_t i = 0; i < ks.size(); ++i) CHECK(r.candidates[i].K == ks[i]);
    CHECK(r.candidates[2].bic == r.candidates[3].bic);
    CHECK(r.model.components() == r.chosen_K);
    for (const auto& c : r.candidates) {
      if (c.included) CHECK(c.bic <= gmm::bic(r.model, X) + 1e-9);
    }
  }
  SUBCASE("a single point cannot be fit") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 2);
    CHECK_THROWS_AS(select_k_bic(X, 1, 2, 0), Error);
  }
}
