#include "twotruths/chernoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <spdlog/spdlog.h>

#include "twotruths/error.hpp"
#include "twotruths/rng.hpp"

namespace twotruths {

namespace {

constexpr std::string_view kModule = "chernoff";
constexpr std::size_t kGridPoints = 101;
constexpr std::size_t kChunk = 8192;

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& S, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw Error(Errc::singular, kModule, std::string(what) + " is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void check_pair(const Gaussian& f1, const Gaussian& f2) {
  const auto d = f1.dim();
  if (d == 0 || f2.dim() != d || static_cast<std::size_t>(f1.cov.rows()) != d ||
      static_cast<std::size_t>(f1.cov.cols()) != d || static_cast<std::size_t>(f2.cov.rows()) != d ||
      static_cast<std::size_t>(f2.cov.cols()) != d) {
    throw Error(Errc::dimension_mismatch, kModule, "Gaussians must share a positive dimension");
  }
}

struct Factored {
  Eigen::VectorXd mean;
  Eigen::MatrixXd L;
  double log_norm = 0.0;  // -1/2 (d log 2pi + log|S|)
};

Factored factored(const Gaussian& g) {
  const auto llt = factor(g.cov, "mixture component covariance");
  Factored f;
  f.mean = g.mean;
  f.L = llt.matrixL();
  f.log_norm = -0.5 * (static_cast<double>(g.dim()) * std::log(2.0 * std::numbers::pi) + log_det(llt));
  return f;
}

struct FactoredMixture {
  std::vector<double> log_weights;
  std::vector<double> cumulative;
  std::vector<Factored> parts;
};

FactoredMixture factored(const GaussianMixture& mix) {
  if (mix.components.empty() || mix.weights.size() != mix.components.size()) {
    throw Error(Errc::invalid_argument, kModule, "mixture needs one positive weight per component");
  }
  FactoredMixture f;
  double total = 0.0;
  for (double w : mix.weights) {
    if (!(w > 0.0)) throw Error(Errc::invalid_argument, kModule, "mixture weights must be positive");
    total += w;
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    if (mix.components[k].dim() != mix.dim()) throw Error(Errc::dimension_mismatch, kModule, "mixed dimensions");
    f.log_weights.push_back(std::log(mix.weights[k] / total));
    f.cumulative.push_back(acc += mix.weights[k] / total);
    f.parts.push_back(factored(mix.components[k]));
  }
  return f;
}

double log_density(const FactoredMixture& f, const Eigen::VectorXd& x) {
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(f.parts.size());
  for (std::size_t k = 0; k < f.parts.size(); ++k) {
    const Eigen::VectorXd z = f.parts[k].L.triangularView<Eigen::Lower>().solve(x - f.parts[k].mean);
    terms[k] = f.log_weights[k] + f.parts[k].log_norm - 0.5 * z.squaredNorm();
    mx = std::max(mx, terms[k]);
  }
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

Gaussian block_gaussian(const Eigen::MatrixXd& rows) {
  Gaussian g;
  g.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - g.mean.transpose();
  g.cov = centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
  g.cov = 0.5 * (g.cov + g.cov.transpose());
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.cov, Eigen::EigenvaluesOnly).eigenvalues()[0];
  if (!(min_eig >= 1e-12)) g.cov.diagonal().array() += 1e-12;
  factor(g.cov, "limit covariance");
  return g;
}

SbmParams canonical_two_block(const SbmParams& params) {
  const double a = params.B(0, 0), c = params.B(1, 1);
  const bool swap = a < c || (a == c && params.pi[0] < params.pi[1]);
  if (!swap) return params;
  SbmParams out = params;
  out.pi << params.pi[1], params.pi[0];
  out.B << params.B(1, 1), params.B(1, 0), params.B(0, 1), params.B(0, 0);
  if (out.names.size() == 2) std::swap(out.names[0], out.names[1]);
  return out;
}

GaussianMixture sub_mixture(const std::vector<double>& weights, const std::vector<Gaussian>& comps,
                            const std::vector<std::size_t>& idx) {
  GaussianMixture m;
  double total = 0.0;
  for (auto k : idx) total += weights[k];
  for (auto k : idx) {
    m.weights.push_back(weights[k] / total);
    m.components.push_back(comps[k]);
  }
  return m;
}

}  // namespace

double h_t(double t, const Gaussian& f1, const Gaussian& f2) {
  if (!(t > 0.0 && t < 1.0)) throw Error(Errc::invalid_argument, kModule, "t must lie in (0, 1)");
  check_pair(f1, f2);
  const Eigen::VectorXd dmu = f1.mean - f2.mean;
  const auto l1 = factor(f1.cov, "first covariance");
  const auto l2 = factor(f2.cov, "second covariance");
  const auto lt = factor(t * f1.cov + (1.0 - t) * f2.cov, "interpolated covariance");
  const double quad = dmu.dot(lt.solve(dmu));
  return 0.5 * t * (1.0 - t) * quad + 0.5 * (log_det(lt) - t * log_det(l1) - (1.0 - t) * log_det(l2));
}

double h_t_derivative(double t, const Gaussian& f1, const Gaussian& f2) {
  check_pair(f1, f2);
  const Eigen::VectorXd dmu = f1.mean - f2.mean;
  const Eigen::MatrixXd D = f1.cov - f2.cov;
  const auto l1 = factor(f1.cov, "first covariance");
  const auto l2 = factor(f2.cov, "second covariance");
  const auto lt = factor(t * f1.cov + (1.0 - t) * f2.cov, "interpolated covariance");
  const Eigen::VectorXd u = lt.solve(dmu);
  const double quad = dmu.dot(u);
  const double trace = lt.solve(D).trace();
  return 0.5 * (1.0 - 2.0 * t) * quad - 0.5 * t * (1.0 - t) * u.dot(D * u) +
         0.5 * (trace - log_det(l1) + log_det(l2));
}

ChernoffResult chernoff_information(const Gaussian& f1, const Gaussian& f2, double opt_tol, bool keep_curve) {
  check_pair(f1, f2);
  if (!(opt_tol > 0.0)) throw Error(Errc::invalid_argument, kModule, "opt_tol must be positive");
  ChernoffResult r;
  std::size_t best = 0;
  double best_h = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= kGridPoints; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(kGridPoints + 1);
    const double h = h_t(t, f1, f2);
    if (!std::isfinite(h)) throw Error(Errc::singular, kModule, "h(t) is not finite on the search grid");
    if (keep_curve) r.h_curve.emplace_back(t, h);
    if (h > best_h) {
      best_h = h;
      best = i;
    }
  }
  double lo = static_cast<double>(best - 1) / static_cast<double>(kGridPoints + 1);
  double hi = static_cast<double>(best + 1) / static_cast<double>(kGridPoints + 1);
  // The endpoints may be 0 or 1, where the derivative is still defined.
  while (hi - lo > opt_tol) {
    const double mid = 0.5 * (lo + hi);
    if (h_t_derivative(mid, f1, f2) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  r.t_star = std::clamp(0.5 * (lo + hi), std::numeric_limits<double>::min(), 1.0 - 1e-16);
  r.value = h_t(r.t_star, f1, f2);
  if (r.value < best_h) {
    r.t_star = static_cast<double>(best) / static_cast<double>(kGridPoints + 1);
    r.value = best_h;
  }
  r.value = std::max(r.value, 0.0);
  return r;
}

LimitParams empirical_limit_params(const SbmParams& params, EmbeddingMethod method, std::size_t n_big,
                                   std::size_t d, std::uint64_t seed, const SolverOptions& solver) {
  params.validate();
  if (d < 1) throw Error(Errc::invalid_argument, kModule, "embedding dimension must be positive");
  for (std::size_t k = 0; k < params.blocks(); ++k) {
    if (params.pi[k] * static_cast<double>(n_big) < 50.0 * static_cast<double>(d)) {
      throw Error(Errc::invalid_argument, kModule,
                  "n_big=" + std::to_string(n_big) + " gives block '" + params.block_name(k) +
                      "' fewer than 50*d expected vertices");
    }
  }
  const auto sample = sample_sbm(params, n_big, seed);
  const auto lcc = largest_connected_component(sample.graph, sample.labels);
  SolverOptions opts = solver;
  opts.seed = derive_seed(seed, 1);
  const Embedding e = embed(lcc.graph, method, d, opts);

  LimitParams out;
  out.method = method;
  out.n_big = n_big;
  out.d = d;
  out.seed = seed;
  out.embedded_vertices = lcc.graph.num_vertices();
  out.cov_scale = static_cast<double>(n_big);
  const auto K = params.blocks();
  std::vector<std::vector<Eigen::Index>> rows(K);
  for (std::size_t i = 0; i < lcc.original.size(); ++i) {
    rows[sample.block[lcc.original[i]]].push_back(static_cast<Eigen::Index>(i));
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (rows[k].size() < 2) {
      throw Error(Errc::degenerate_block, kModule,
                  "block '" + params.block_name(k) + "' has fewer than 2 embedded vertices");
    }
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows[k].size()), e.X.cols());
    for (std::size_t i = 0; i < rows[k].size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = e.X.row(rows[k][i]);
    Gaussian g = block_gaussian(sub);
    Gaussian s{g.mean, g.cov * out.cov_scale};
    out.weights.push_back(params.pi[k]);
    out.block_sizes.push_back(rows[k].size());
    out.sample.push_back(std::move(g));
    out.scaled.push_back(std::move(s));
  }
  return out;
}

ChernoffRatio chernoff_ratio(const SbmParams& params, std::size_t n_big, std::uint64_t seed,
                             const SolverOptions& solver) {
  params.validate();
  if (params.blocks() != 2) throw Error(Errc::invalid_argument, kModule, "Chernoff ratio needs a 2-block model");
  if (params.B(0, 0) == params.B(0, 1) && params.B(0, 1) == params.B(1, 1)) {
    throw Error(Errc::invalid_argument, kModule, "B has no block signal (all entries equal)");
  }
  const SbmParams canon = canonical_two_block(params);
  const auto ase = empirical_limit_params(canon, EmbeddingMethod::ase, n_big, 2, seed, solver);
  const auto lse = empirical_limit_params(canon, EmbeddingMethod::lse, n_big, 2, seed, solver);
  ChernoffRatio r;
  r.ase = chernoff_information(ase.sample[0], ase.sample[1]);
  r.lse = chernoff_information(lse.sample[0], lse.sample[1]);
  if (!(r.lse.value > 0.0)) throw Error(Errc::singular, kModule, "LSE Chernoff information is zero");
  r.rho = r.ase.value / r.lse.value;
  return r;
}

double mixture_log_density(const GaussianMixture& mix, const Eigen::VectorXd& x) {
  return log_density(factored(mix), x);
}

KlEstimate mixture_kl(const GaussianMixture& p, const GaussianMixture& q, std::size_t n_samples, std::uint64_t seed,
                      double log_density_floor) {
  if (p.dim() == 0 || p.dim() != q.dim()) throw Error(Errc::dimension_mismatch, kModule, "mixtures differ in dimension");
  if (n_samples < 2) throw Error(Errc::invalid_argument, kModule, "need at least 2 Monte Carlo samples");
  const auto fp = factored(p);
  const auto fq = factored(q);
  const auto d = static_cast<Eigen::Index>(p.dim());
  KlEstimate r;
  r.n_samples = n_samples;
  double sum = 0.0, sum_sq = 0.0;
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd z(d);
  // Fixed-size chunks with their own streams keep the estimate independent of scheduling.
  for (std::size_t start = 0, chunk = 0; start < n_samples; start += kChunk, ++chunk) {
    Rng rng(derive_seed(seed, chunk));
    const std::size_t stop = std::min(n_samples, start + kChunk);
    for (std::size_t s = start; s < stop; ++s) {
      const double u = unif(rng);
      std::size_t k = static_cast<std::size_t>(std::upper_bound(fp.cumulative.begin(), fp.cumulative.end(), u) -
                                               fp.cumulative.begin());
      k = std::min(k, fp.parts.size() - 1);
      for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(rng);
      const Eigen::VectorXd x = fp.parts[k].mean + fp.parts[k].L * z;
      double lq = log_density(fq, x);
      if (!(lq >= log_density_floor)) {
        lq = log_density_floor;
        ++r.floored;
      }
      const double v = log_density(fp, x) - lq;
      sum += v;
      sum_sq += v * v;
    }
  }
  const double n = static_cast<double>(n_samples);
  r.value = sum / n;
  const double var = std::max(0.0, (sum_sq - n * r.value * r.value) / (n - 1.0));
  r.std_error = std::sqrt(var / n);
  if (r.floored > 0) {
    spdlog::warn("chernoff: {} of {} samples hit the log-density floor {}", r.floored, n_samples, log_density_floor);
  }
  return r;
}

double gaussian_kl(const Gaussian& p, const Gaussian& q) {
  check_pair(p, q);
  const auto lp = factor(p.cov, "p covariance");
  const auto lq = factor(q.cov, "q covariance");
  const Eigen::VectorXd dmu = q.mean - p.mean;
  const double d = static_cast<double>(p.dim());
  return 0.5 * (lq.solve(p.cov).trace() + dmu.dot(lq.solve(dmu)) - d + log_det(lq) - log_det(lp));
}

GroupingReport two_truths_grouping(const std::vector<double>& weights, const std::vector<Gaussian>& components,
                                   const std::string& method, std::size_t n_samples, std::uint64_t seed) {
  if (components.size() != 4 || weights.size() != 4) {
    throw Error(Errc::invalid_argument, kModule, "grouping analysis needs exactly 4 weighted components");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(Errc::invalid_argument, kModule, "component weights must be positive");
  }
  for (const auto& g : components) factor(g.cov, "component covariance");

  GroupingReport r;
  r.method = method;
  r.n_samples = n_samples;
  // Side A always holds component 0: masks over components 1..3 give the 7 splits.
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> splits;
  for (unsigned mask = 0; mask < 7; ++mask) {
    std::vector<std::size_t> a{0}, b;
    for (std::size_t k = 1; k < 4; ++k) ((mask >> (k - 1)) & 1u ? a : b).push_back(k);
    splits.emplace_back(a, b);
  }
  std::stable_sort(splits.begin(), splits.end(), [](const auto& x, const auto& y) {
    return x.first.size() != y.first.size() ? x.first.size() < y.first.size() : x.first < y.first;
  });
  for (std::size_t i = 0; i < splits.size(); ++i) {
    BipartitionScore s;
    s.side_a = splits[i].first;
    s.side_b = splits[i].second;
    const auto pa = sub_mixture(weights, components, s.side_a);
    const auto pb = sub_mixture(weights, components, s.side_b);
    s.kl_ab = mixture_kl(pa, pb, n_samples, derive_seed(seed, 2 * i));
    s.kl_ba = mixture_kl(pb, pa, n_samples, derive_seed(seed, 2 * i + 1));
    s.score = 0.5 * (s.kl_ab.value + s.kl_ba.value);
    if (!std::isfinite(s.score)) throw Error(Errc::singular, kModule, "non-finite grouping score");
    if (s.side_a.size() <= 2) r.directed.push_back({s.side_a, s.kl_ab});
    if (s.side_b.size() <= 2) r.directed.push_back({s.side_b, s.kl_ba});
    r.partitions.push_back(std::move(s));
  }
  std::stable_sort(r.partitions.begin(), r.partitions.end(),
                   [](const auto& x, const auto& y) { return x.score > y.score; });
  std::stable_sort(r.directed.begin(), r.directed.end(),
                   [](const auto& x, const auto& y) { return x.kl.value > y.kl.value; });
  return r;
}

}  // namespace twotruths
