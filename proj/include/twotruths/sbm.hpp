#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "twotruths/graph.hpp"

namespace twotruths {

/// Stochastic block model: membership probabilities and a symmetric
/// connectivity matrix. Block names are optional and only used for labels.
struct SbmParams {
  Eigen::VectorXd pi;
  Eigen::MatrixXd B;
  std::vector<std::string> names;

  std::size_t blocks() const noexcept { return static_cast<std::size_t>(pi.size()); }
  std::string block_name(std::size_t k) const;

  /// Throws invalid_argument unless pi is a probability vector (1e-12) and
  /// B is symmetric with entries in [0, 1].
  void validate() const;
};

struct SampledSbm {
  Graph graph;
  VertexLabels labels;              // alphabet in block order
  std::vector<std::uint32_t> block;  // block index per vertex
};

/// i.i.d. memberships from pi, then independent Bernoulli(B[k,l]) edges.
SampledSbm sample_sbm(const SbmParams& params, std::size_t n, std::uint64_t seed);

/// A priori projection: empirical block densities under known labels.
SbmParams fit_block_model(const Graph& g, const VertexLabels& labels);

/// Partition of the blocks into groups; groups[u] lists the member blocks.
using BlockGroups = std::vector<std::vector<std::size_t>>;

/// pi-weighted merge of blocks into groups.
SbmParams collapse_blocks(const SbmParams& params, const BlockGroups& groups,
                          std::vector<std::string> group_names = {});

/// Groups induced by a label merge map applied to the block names; groups
/// come out in sorted coarse-name order.
BlockGroups groups_from_merge(const SbmParams& params, const LabelMerge& merge,
                              std::vector<std::string>* group_names = nullptr);

enum class StructureKind { affinity, core_periphery, other };

struct StructureClass {
  StructureKind kind = StructureKind::other;
  double affinity_margin = 0.0;        // min(a,c) - t*b
  double core_periphery_margin = 0.0;  // min(max(a,c) - t*b, max(a,c) - t*min(a,c))
};

std::string to_string(StructureKind kind);

StructureClass classify_structure(const SbmParams& params, double ratio_threshold = 2.0);

struct EdaPoint {
  double x = 0.0;
  double y = 0.0;
  bool below_rank_one_curve = false;  // y < sqrt(x)
};

EdaPoint eda_point(const SbmParams& params);

/// Sum over k,l of pi_k pi_l B_kl.
double expected_edge_probability(const SbmParams& params);

}  // namespace twotruths
