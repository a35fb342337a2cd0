#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace twotruths {

/// Cluster label per item, relabeled to 0..K-1 in order of first appearance.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::span<const std::uint32_t> labels);
  explicit Partition(std::span<const int> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t cells() const noexcept { return cells_; }
  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  std::uint32_t operator[](std::size_t i) const { return labels_[i]; }

  bool operator==(const Partition&) const = default;

 private:
  std::vector<std::uint32_t> labels_;
  std::size_t cells_ = 0;
};

struct AriResult {
  double ari = 0.0;
  /// contingency[i][j] = |cell i of p1 intersect cell j of p2|.
  std::vector<std::vector<std::uint64_t>> contingency;
  std::optional<double> p_value;
  std::size_t n_permutations = 0;
};

/// Hubert-Arabie adjusted Rand index. With a zero denominator the result is
/// 1 when the partitions are identical and 0 otherwise.
AriResult ari(const Partition& p1, const Partition& p2);

/// One-sided permutation p-value (1 + #{ARI_perm >= ARI_obs}) / (n_perm + 1),
/// permuting p2's labels across items. A one-cell p2 yields p = 1.
AriResult permutation_test_ari(const Partition& p1, const Partition& p2, std::size_t n_perm, std::uint64_t seed);

/// ari(cl, truth_a) - ari(cl, truth_b).
double delta_ari(const Partition& cl, const Partition& truth_a, const Partition& truth_b);

void write_contingency_csv(std::ostream& out, const AriResult& r);

}  // namespace twotruths
