#include "twotruths/model_selection.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <spdlog/spdlog.h>

#include "twotruths/error.hpp"
#include "twotruths/rng.hpp"

namespace twotruths {

namespace {

constexpr std::string_view kModule = "model_selection";

void check_scree(std::span<const double> scree) {
  if (scree.size() < 3) {
    throw Error(Errc::invalid_argument, kModule,
                "scree needs at least 3 values, got " + std::to_string(scree.size()));
  }
  for (std::size_t i = 0; i < scree.size(); ++i) {
    if (!(scree[i] >= 0.0) || !std::isfinite(scree[i])) {
      throw Error(Errc::invalid_argument, kModule, "scree values must be finite and nonnegative");
    }
    if (i > 0 && scree[i] > scree[i - 1]) throw Error(Errc::invalid_argument, kModule, "scree must be nonincreasing");
  }
  if (scree.front() == scree.back()) {
    throw Error(Errc::degenerate_scree, kModule, "all scree values are identical");
  }
}

double sum_sq_dev(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss;
}

// Returns the 1-based argmax split and fills the profile.
std::size_t best_split(std::span<const double> scree, std::vector<double>* profile) {
  check_scree(scree);
  std::size_t best = 1;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t d = 1; d < scree.size(); ++d) {
    const double ll = profile_log_likelihood(scree, d);
    if (profile) profile->push_back(ll);
    if (ll > best_ll) {
      best_ll = ll;
      best = d;
    }
  }
  return best;
}

}  // namespace

double profile_log_likelihood(std::span<const double> scree, std::size_t d) {
  if (d < 1 || d >= scree.size()) throw Error(Errc::invalid_argument, kModule, "split outside [1, len-1]");
  const double m = static_cast<double>(scree.size());
  const double var = (sum_sq_dev(scree.first(d)) + sum_sq_dev(scree.subspan(d))) / m;
  if (var == 0.0) return std::numeric_limits<double>::infinity();
  return -0.5 * m * (std::log(2.0 * std::numbers::pi * var) + 1.0);
}

ElbowReport profile_likelihood_d(std::span<const double> scree, std::size_t elbow_index) {
  if (elbow_index < 1) throw Error(Errc::invalid_argument, kModule, "elbow index starts at 1");
  ElbowReport r;
  r.scree.assign(scree.begin(), scree.end());
  r.elbow_index = elbow_index;
  std::size_t offset = 0;
  for (std::size_t e = 1; e <= elbow_index; ++e) {
    const auto tail = scree.subspan(offset);
    if (e > 1 && tail.size() < 3) {
      throw Error(Errc::invalid_argument, kModule,
                  "scree too short for elbow " + std::to_string(e) + " (tail of " + std::to_string(tail.size()) + ")");
    }
    offset += best_split(tail, e == 1 ? &r.profile_ll : nullptr);
    r.elbows.push_back(offset);
  }
  r.chosen_d = offset;
  return r;
}

KSelectionReport select_k_bic(const Eigen::MatrixXd& X, std::span<const std::size_t> k_values, std::uint64_t seed,
                              const gmm::Options& opts) {
  if (k_values.empty()) throw Error(Errc::invalid_argument, kModule, "empty K range");
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < 2) throw Error(Errc::fit_failed, kModule, "need at least 2 points to select K");
  KSelectionReport r;
  std::optional<std::size_t> best;
  std::vector<std::optional<gmm::Model>> models;
  for (std::size_t K : k_values) {
    KCandidate c;
    c.K = K;
    std::optional<gmm::Model> model;
    if (K < 1 || K > n) {
      c.note = "K outside [1, n]";
    } else {
      try {
        model = gmm::fit(X, K, derive_seed(seed, K), opts);
        c.log_likelihood = model->log_likelihood;
        c.converged = model->converged;
        c.bic = gmm::bic(*model, X);
        if (!c.converged) {
          c.note = "EM did not converge";
        } else if (!std::isfinite(c.bic)) {
          c.note = "non-finite BIC";
        } else {
          c.included = true;
        }
      } catch (const Error& e) {
        c.note = e.what();
      }
    }
    if (!c.included) spdlog::warn("model_selection: K={} excluded: {}", K, c.note);
    if (c.included && (!best || c.bic > r.candidates[*best].bic)) best = r.candidates.size();
    r.candidates.push_back(std::move(c));
    models.push_back(std::move(model));
  }
  if (!best) throw Error(Errc::fit_failed, kModule, "no candidate K produced a converged fit");
  r.chosen_K = r.candidates[*best].K;
  r.model = std::move(*models[*best]);
  return r;
}

KSelectionReport select_k_bic(const Eigen::MatrixXd& X, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                              const gmm::Options& opts) {
  if (k_min < 1 || k_min > k_max) {
    throw Error(Errc::invalid_argument, kModule,
                "empty K range [" + std::to_string(k_min) + ", " + std::to_string(k_max) + "]");
  }
  std::vector<std::size_t> ks(k_max - k_min + 1);
  std::iota(ks.begin(), ks.end(), k_min);
  return select_k_bic(X, ks, seed, opts);
}

}  // namespace twotruths
