#include "twotruths/eval.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_map>

#include "twotruths/error.hpp"
#include "twotruths/rng.hpp"

namespace twotruths {

namespace {

constexpr std::string_view kModule = "eval";

template <typename T>
std::vector<std::uint32_t> canonical(std::span<const T> labels, std::size_t& cells) {
  std::unordered_map<T, std::uint32_t> seen;
  std::vector<std::uint32_t> out;
  out.reserve(labels.size());
  for (const T& l : labels) {
    auto [it, inserted] = seen.emplace(l, static_cast<std::uint32_t>(seen.size()));
    out.push_back(it->second);
  }
  cells = seen.size();
  return out;
}

std::uint64_t choose2(std::uint64_t x) { return x * (x - (x > 0)) / 2; }

void check(const Partition& p1, const Partition& p2) {
  if (p1.size() != p2.size()) {
    throw Error(Errc::count_mismatch, kModule,
                "partitions cover " + std::to_string(p1.size()) + " and " + std::to_string(p2.size()) + " items");
  }
  if (p1.size() < 2) throw Error(Errc::invalid_argument, kModule, "ARI needs at least 2 items");
}

// Flattened K1 x K2 table.
std::vector<std::uint64_t> table(const Partition& p1, std::span<const std::uint32_t> l2, std::size_t k2) {
  std::vector<std::uint64_t> t(p1.cells() * k2, 0);
  for (std::size_t i = 0; i < p1.size(); ++i) ++t[p1[i] * k2 + l2[i]];
  return t;
}

// Exact integer pair counts; the single division rounds the exact ratio.
double ari_from_table(const std::vector<std::uint64_t>& t, std::size_t k1, std::size_t k2, std::size_t n, bool identical) {
  using Wide = __int128;
  std::uint64_t index = 0, sum_a = 0, sum_b = 0;
  std::vector<std::uint64_t> cols(k2, 0);
  for (std::size_t i = 0; i < k1; ++i) {
    std::uint64_t row = 0;
    for (std::size_t j = 0; j < k2; ++j) {
      const auto c = t[i * k2 + j];
      index += choose2(c);
      row += c;
      cols[j] += c;
    }
    sum_a += choose2(row);
  }
  for (auto c : cols) sum_b += choose2(c);
  const Wide pairs = choose2(n);
  // ARI = (pairs*index - a*b) / (pairs*(a+b)/2 - a*b), scaled by 2.
  const Wide num = 2 * (pairs * index - Wide(sum_a) * sum_b);
  const Wide den = pairs * (Wide(sum_a) + sum_b) - 2 * Wide(sum_a) * sum_b;
  if (den == 0) return identical ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Identical up to relabeling means every row and column of the table has one nonzero cell.
bool same_partition(const std::vector<std::uint64_t>& t, std::size_t k1, std::size_t k2) {
  if (k1 != k2) return false;
  for (std::size_t i = 0; i < k1; ++i) {
    std::size_t nz = 0;
    for (std::size_t j = 0; j < k2; ++j) nz += t[i * k2 + j] != 0;
    if (nz != 1) return false;
  }
  return true;
}

}  // namespace

Partition::Partition(std::span<const std::uint32_t> labels) { labels_ = canonical(labels, cells_); }
Partition::Partition(std::span<const int> labels) { labels_ = canonical(labels, cells_); }

AriResult ari(const Partition& p1, const Partition& p2) {
  check(p1, p2);
  const auto k1 = p1.cells(), k2 = p2.cells();
  const auto t = table(p1, p2.labels(), k2);
  AriResult r;
  r.ari = ari_from_table(t, k1, k2, p1.size(), same_partition(t, k1, k2));
  r.contingency.assign(k1, std::vector<std::uint64_t>(k2));
  for (std::size_t i = 0; i < k1; ++i) {
    for (std::size_t j = 0; j < k2; ++j) r.contingency[i][j] = t[i * k2 + j];
  }
  return r;
}

AriResult permutation_test_ari(const Partition& p1, const Partition& p2, std::size_t n_perm, std::uint64_t seed) {
  if (n_perm < 100) throw Error(Errc::invalid_argument, kModule, "permutation test needs at least 100 permutations");
  AriResult r = ari(p1, p2);
  r.n_permutations = n_perm;
  if (p2.cells() == 1) {
    r.p_value = 1.0;
    return r;
  }
  Rng rng(seed);
  std::vector<std::uint32_t> shuffled = p2.labels();
  std::size_t at_least = 0;
  for (std::size_t b = 0; b < n_perm; ++b) {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto t = table(p1, shuffled, p2.cells());
    const double v = ari_from_table(t, p1.cells(), p2.cells(), p1.size(), same_partition(t, p1.cells(), p2.cells()));
    if (v >= r.ari) ++at_least;
  }
  r.p_value = static_cast<double>(1 + at_least) / static_cast<double>(n_perm + 1);
  return r;
}

double delta_ari(const Partition& cl, const Partition& truth_a, const Partition& truth_b) {
  return ari(cl, truth_a).ari - ari(cl, truth_b).ari;
}

void write_contingency_csv(std::ostream& out, const AriResult& r) {
  const std::size_t k2 = r.contingency.empty() ? 0 : r.contingency[0].size();
  out << "cell";
  for (std::size_t j = 0; j < k2; ++j) out << ",c" << j;
  out << '\n';
  for (std::size_t i = 0; i < r.contingency.size(); ++i) {
    out << 'r' << i;
    for (auto c : r.contingency[i]) out << ',' << c;
    out << '\n';
  }
}

}  // namespace twotruths
