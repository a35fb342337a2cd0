#include "twotruths/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "twotruths/error.hpp"
#include "twotruths/rng.hpp"

namespace twotruths {

namespace {

constexpr std::string_view kModule = "sbm";

// Visits the selected pairs of a sequence of rows with Bernoulli(p) per
// pair, skipping geometrically between successes.
template <typename RowLength, typename Emit>
void bernoulli_pairs(std::size_t rows, RowLength row_length, double p, Rng& rng, Emit emit) {
  if (p <= 0.0 || rows == 0) return;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool every = p >= 1.0;
  const double log_q = every ? 0.0 : std::log1p(-p);
  std::size_t row = 0;
  std::size_t col = 0;
  bool first = true;
  while (row < rows) {
    std::size_t step = 1;
    if (!every) {
      const double u = 1.0 - unif(rng);  // (0, 1]
      const double skip = std::floor(std::log(u) / log_q);
      if (skip > 1e18) return;
      step = static_cast<std::size_t>(skip) + 1;
    }
    std::size_t target = (first ? 0 : col + 1) + (step - 1);
    first = false;
    while (row < rows && target >= row_length(row)) {
      target -= row_length(row);
      ++row;
    }
    if (row >= rows) return;
    col = target;
    emit(row, col);
  }
}

}  // namespace

std::string SbmParams::block_name(std::size_t k) const {
  return k < names.size() ? names[k] : std::to_string(k);
}

void SbmParams::validate() const {
  const auto K = blocks();
  if (K == 0) throw Error(Errc::invalid_argument, kModule, "block model has no blocks");
  if (static_cast<std::size_t>(B.rows()) != K || static_cast<std::size_t>(B.cols()) != K) {
    throw Error(Errc::invalid_argument, kModule, "B must be K x K with K = len(pi)");
  }
  if (!names.empty() && names.size() != K) {
    throw Error(Errc::invalid_argument, kModule, "block names must match the block count");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (!(pi[k] >= 0.0)) throw Error(Errc::invalid_argument, kModule, "pi entries must be nonnegative");
    total += pi[k];
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(Errc::invalid_argument, kModule, "pi must sum to 1");
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = 0; l < K; ++l) {
      const double b = B(k, l);
      if (!(b >= 0.0 && b <= 1.0)) throw Error(Errc::invalid_argument, kModule, "B entries must lie in [0,1]");
      if (b != B(l, k)) throw Error(Errc::invalid_argument, kModule, "B must be symmetric");
    }
  }
}

SampledSbm sample_sbm(const SbmParams& params, std::size_t n, std::uint64_t seed) {
  params.validate();
  if (n == 0) throw Error(Errc::invalid_argument, kModule, "sample size must be positive");
  const auto K = params.blocks();
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> cumulative(K);
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) cumulative[k] = (acc += params.pi[k]);
  SampledSbm out;
  out.block.resize(n);
  std::vector<std::vector<Vertex>> members(K);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unif(rng) * acc;
    auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    k = std::min(k, K - 1);
    while (params.pi[k] == 0.0 && k > 0) --k;  // u landed on a zero-width boundary
    out.block[i] = static_cast<std::uint32_t>(k);
    members[k].push_back(static_cast<Vertex>(i));
  }

  std::vector<Edge> edges;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& mk = members[k];
    const std::size_t sk = mk.size();
    bernoulli_pairs(
        sk, [&](std::size_t a) { return sk - 1 - a; }, params.B(k, k), rng,
        [&](std::size_t a, std::size_t c) { edges.emplace_back(mk[a], mk[a + 1 + c]); });
    for (std::size_t l = k + 1; l < K; ++l) {
      const auto& ml = members[l];
      bernoulli_pairs(
          sk, [&](std::size_t) { return ml.size(); }, params.B(k, l), rng,
          [&](std::size_t a, std::size_t c) { edges.emplace_back(mk[a], ml[c]); });
    }
  }
  out.graph = Graph::from_edges(n, edges);

  std::vector<std::string> alphabet;
  for (std::size_t k = 0; k < K; ++k) alphabet.push_back(params.block_name(k));
  out.labels = VertexLabels(std::move(alphabet), out.block);
  return out;
}

SbmParams fit_block_model(const Graph& g, const VertexLabels& labels) {
  if (labels.size() != g.num_vertices()) {
    throw Error(Errc::count_mismatch, kModule, "labels do not cover the graph");
  }
  const auto K = labels.alphabet().size();
  if (K == 0) throw Error(Errc::invalid_argument, kModule, "empty label alphabet");
  std::vector<double> size(K, 0.0);
  for (auto c : labels.codes()) size[c] += 1.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (size[k] < 2.0) {
      throw Error(Errc::degenerate_block, kModule,
                  "block '" + labels.alphabet()[k] + "' has fewer than 2 vertices");
    }
  }
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  for (auto [u, v] : g.edges()) {
    const auto a = labels.code(u);
    const auto b = labels.code(v);
    counts(a, b) += 1.0;
    if (a != b) counts(b, a) += 1.0;
  }
  SbmParams out;
  out.names = labels.alphabet();
  out.pi.resize(static_cast<Eigen::Index>(K));
  out.B.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  const double n = static_cast<double>(g.num_vertices());
  for (std::size_t k = 0; k < K; ++k) {
    out.pi[k] = size[k] / n;
    for (std::size_t l = 0; l < K; ++l) {
      const double pairs = k == l ? 0.5 * size[k] * (size[k] - 1.0) : size[k] * size[l];
      out.B(k, l) = counts(k, l) / pairs;
    }
  }
  return out;
}

SbmParams collapse_blocks(const SbmParams& params, const BlockGroups& groups,
                          std::vector<std::string> group_names) {
  params.validate();
  const auto K = params.blocks();
  std::vector<int> seen(K, 0);
  for (const auto& grp : groups) {
    if (grp.empty()) throw Error(Errc::invalid_argument, kModule, "empty block group");
    for (auto k : grp) {
      if (k >= K) throw Error(Errc::invalid_argument, kModule, "block index out of range");
      ++seen[k];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int s) { return s != 1; })) {
    throw Error(Errc::invalid_argument, kModule, "groups must partition the blocks");
  }
  const auto G = static_cast<Eigen::Index>(groups.size());
  SbmParams out;
  out.pi = Eigen::VectorXd::Zero(G);
  out.B = Eigen::MatrixXd::Zero(G, G);
  for (Eigen::Index u = 0; u < G; ++u) {
    for (auto k : groups[u]) out.pi[u] += params.pi[k];
    if (out.pi[u] <= 0.0) throw Error(Errc::invalid_argument, kModule, "group has zero total probability");
  }
  for (Eigen::Index u = 0; u < G; ++u) {
    for (Eigen::Index v = 0; v < G; ++v) {
      double acc = 0.0;
      for (auto k : groups[u]) {
        for (auto l : groups[v]) acc += params.pi[k] * params.pi[l] * params.B(k, l);
      }
      out.B(u, v) = acc / (out.pi[u] * out.pi[v]);
    }
  }
  out.B = 0.5 * (out.B + out.B.transpose());
  out.names = std::move(group_names);
  if (!out.names.empty() && out.names.size() != groups.size()) {
    throw Error(Errc::invalid_argument, kModule, "group names must match the group count");
  }
  return out;
}

BlockGroups groups_from_merge(const SbmParams& params, const LabelMerge& merge,
                              std::vector<std::string>* group_names) {
  std::set<std::string> coarse;
  std::vector<std::string> target(params.blocks());
  for (std::size_t k = 0; k < params.blocks(); ++k) {
    const auto it = merge.find(params.block_name(k));
    if (it == merge.end()) {
      throw Error(Errc::unknown_label, kModule, "merge map has no entry for block '" + params.block_name(k) + "'");
    }
    target[k] = it->second;
    coarse.insert(it->second);
  }
  const std::vector<std::string> names(coarse.begin(), coarse.end());
  BlockGroups groups(names.size());
  for (std::size_t k = 0; k < params.blocks(); ++k) {
    const auto u = static_cast<std::size_t>(std::lower_bound(names.begin(), names.end(), target[k]) - names.begin());
    groups[u].push_back(k);
  }
  if (group_names) *group_names = names;
  return groups;
}

std::string to_string(StructureKind kind) {
  switch (kind) {
    case StructureKind::affinity: return "affinity";
    case StructureKind::core_periphery: return "core-periphery";
    case StructureKind::other: return "other";
  }
  return "other";
}

StructureClass classify_structure(const SbmParams& params, double ratio_threshold) {
  if (params.blocks() != 2) throw Error(Errc::invalid_argument, kModule, "structure classification needs K=2");
  const double a = params.B(0, 0), b = params.B(0, 1), c = params.B(1, 1);
  const double hi = std::max(a, c), lo = std::min(a, c);
  if (!(hi > 0.0)) throw Error(Errc::invalid_argument, kModule, "all-zero within-block probabilities");
  const double t = ratio_threshold;
  StructureClass out;
  out.affinity_margin = lo - t * b;
  out.core_periphery_margin = std::min(hi - t * b, hi - t * lo);
  if (out.affinity_margin >= 0.0) {
    out.kind = StructureKind::affinity;
  } else if (out.core_periphery_margin >= 0.0) {
    out.kind = StructureKind::core_periphery;
  }
  return out;
}

EdaPoint eda_point(const SbmParams& params) {
  if (params.blocks() != 2) throw Error(Errc::invalid_argument, kModule, "EDA point needs K=2");
  const double a = params.B(0, 0), b = params.B(0, 1), c = params.B(1, 1);
  const double hi = std::max(a, c);
  if (!(hi > 0.0)) throw Error(Errc::invalid_argument, kModule, "max(a,c) must be positive");
  EdaPoint p;
  p.x = std::min(a, c) / hi;
  p.y = b / hi;
  p.below_rank_one_curve = p.y < std::sqrt(p.x);
  return p;
}

double expected_edge_probability(const SbmParams& params) {
  return params.pi.dot(params.B * params.pi);
}

}  // namespace twotruths
