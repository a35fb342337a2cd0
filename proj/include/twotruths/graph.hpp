#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace twotruths {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

/// Simple undirected graph in compressed sparse row form. Each unordered
/// edge is stored once per endpoint; neighbor lists are sorted.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph on n vertices. Self-loops and repeated pairs (in either
  /// orientation) are dropped; counts are reported through the out-params.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges,
                          std::size_t* duplicates_dropped = nullptr,
                          std::size_t* loops_dropped = nullptr);

  std::size_t num_vertices() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return adj_.size() / 2; }

  std::span<const Vertex> neighbors(Vertex v) const noexcept {
    return {adj_.data() + offsets_[v], adj_.data() + offsets_[v + 1]};
  }
  std::size_t degree(Vertex v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(Vertex u, Vertex v) const noexcept;

  /// Edges as (i, j) with i < j, in lexicographic order.
  std::vector<Edge> edges() const;

  /// y = A x.
  void multiply(std::span<const double> x, std::span<double> y) const noexcept;

  bool operator==(const Graph&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<Vertex> adj_;
};

/// One categorical label per vertex. Codes index into the alphabet.
class VertexLabels {
 public:
  VertexLabels() = default;
  VertexLabels(std::vector<std::string> alphabet, std::vector<std::uint32_t> codes);

  /// Alphabet is the sorted set of distinct names.
  static VertexLabels from_names(std::span<const std::string> names);

  std::size_t size() const noexcept { return codes_.size(); }
  const std::vector<std::string>& alphabet() const noexcept { return alphabet_; }
  const std::vector<std::uint32_t>& codes() const noexcept { return codes_; }
  std::uint32_t code(std::size_t i) const { return codes_.at(i); }
  const std::string& name(std::size_t i) const { return alphabet_.at(codes_.at(i)); }
  std::optional<std::uint32_t> find(const std::string& label) const;

  /// Applies a fine->coarse map; every fine label in use must be mapped.
  /// The coarse alphabet is the sorted image of the map's used entries.
  VertexLabels merged(const std::map<std::string, std::string>& merge) const;

  /// Keeps the entries listed in `keep` (new order = order of `keep`).
  VertexLabels select(std::span<const Vertex> keep) const;

  bool operator==(const VertexLabels&) const = default;

 private:
  std::vector<std::string> alphabet_;
  std::vector<std::uint32_t> codes_;
};

using LabelMerge = std::map<std::string, std::string>;

/// Nonnegative symmetric hollow weights, stored once per unordered pair.
struct WeightedGraph {
  std::size_t n = 0;
  std::map<Edge, double> weights;  // key (i, j) with i < j

  double weight(Vertex u, Vertex v) const;
};

struct EdgeListFormat {
  /// Vertex count override; otherwise "# vertices N" header or 1 + max id.
  std::optional<std::size_t> vertex_count;
  /// Compact sparse external ids onto 0..n-1 in increasing id order.
  bool compact_ids = false;
};

struct LoadedGraph {
  Graph graph;
  std::size_t duplicates_dropped = 0;
  std::size_t loops_dropped = 0;
  /// original_ids[new] when ids were compacted; empty otherwise.
  std::vector<std::uint64_t> original_ids;
};

LoadedGraph load_edge_list(const std::filesystem::path& path, const EdgeListFormat& format = {});
LoadedGraph parse_edge_list(std::istream& in, const EdgeListFormat& format = {});
void write_edge_list(std::ostream& out, const Graph& g);

VertexLabels load_labels(const std::filesystem::path& path, std::size_t n);
VertexLabels parse_labels(std::istream& in, std::size_t n);
void write_labels(std::ostream& out, const VertexLabels& labels);

/// Induced subgraph plus the vertex correspondences.
struct Subgraph {
  Graph graph;
  std::optional<VertexLabels> labels;
  std::vector<Vertex> original;        // new -> old
  std::vector<std::int64_t> new_index;  // old -> new, -1 when dropped
};

Subgraph induced_subgraph(const Graph& g, std::span<const Vertex> keep,
                          const std::optional<VertexLabels>& labels = std::nullopt);

/// Largest connected component. Ties go to the component holding the
/// smallest vertex id.
Subgraph largest_connected_component(const Graph& g,
                                     const std::optional<VertexLabels>& labels = std::nullopt);

Subgraph induced_subgraph_by_labels(const Graph& g, const VertexLabels& labels,
                                    const std::set<std::string>& keep);

/// Connected component id per vertex, numbered in order of smallest member.
std::vector<std::uint32_t> connected_components(const Graph& g);

WeightedGraph average_graphs(std::span<const Graph> graphs);
Graph binarize(const WeightedGraph& w, double threshold = 0.0);

std::vector<std::size_t> degrees(const Graph& g);
double density(const Graph& g);

}  // namespace twotruths
