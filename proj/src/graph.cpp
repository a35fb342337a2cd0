#include "twotruths/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include <spdlog/spdlog.h>

#include "twotruths/error.hpp"

namespace twotruths {

namespace {

constexpr std::string_view kModule = "graph_core";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != ',') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, kModule, "cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges,
                        std::size_t* duplicates_dropped, std::size_t* loops_dropped) {
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  std::size_t loops = 0;
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) {
      throw Error(Errc::invalid_argument, kModule,
                  "edge (" + std::to_string(u) + "," + std::to_string(v) +
                      ") out of range for n=" + std::to_string(n));
    }
    if (u == v) {
      ++loops;
      continue;
    }
    canon.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(canon.begin(), canon.end());
  const auto unique_end = std::unique(canon.begin(), canon.end());
  const std::size_t dups = static_cast<std::size_t>(canon.end() - unique_end);
  canon.erase(unique_end, canon.end());
  if (duplicates_dropped) *duplicates_dropped = dups;
  if (loops_dropped) *loops_dropped = loops;

  Graph g;
  g.n_ = n;
  g.offsets_.assign(n + 1, 0);
  for (auto [u, v] : canon) {
    ++g.offsets_[u + 1];
    ++g.offsets_[v + 1];
  }
  std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
  g.adj_.resize(2 * canon.size());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (auto [u, v] : canon) {
    g.adj_[cursor[u]++] = v;
    g.adj_[cursor[v]++] = u;
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]),
              g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]));
  }
  return g;
}

bool Graph::has_edge(Vertex u, Vertex v) const noexcept {
  if (u >= n_ || v >= n_) return false;
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (Vertex u = 0; u < n_; ++u) {
    for (Vertex v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

void Graph::multiply(std::span<const double> x, std::span<double> y) const noexcept {
  for (std::size_t u = 0; u < n_; ++u) {
    double acc = 0.0;
    for (std::size_t k = offsets_[u]; k < offsets_[u + 1]; ++k) acc += x[adj_[k]];
    y[u] = acc;
  }
}

VertexLabels::VertexLabels(std::vector<std::string> alphabet, std::vector<std::uint32_t> codes)
    : alphabet_(std::move(alphabet)), codes_(std::move(codes)) {
  if (alphabet_.empty() && !codes_.empty()) {
    throw Error(Errc::invalid_argument, kModule, "label alphabet is empty");
  }
  for (auto c : codes_) {
    if (c >= alphabet_.size()) {
      throw Error(Errc::invalid_argument, kModule, "label code outside alphabet");
    }
  }
}

VertexLabels VertexLabels::from_names(std::span<const std::string> names) {
  std::vector<std::string> alphabet(names.begin(), names.end());
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
  std::vector<std::uint32_t> codes;
  codes.reserve(names.size());
  for (const auto& s : names) {
    const auto it = std::lower_bound(alphabet.begin(), alphabet.end(), s);
    codes.push_back(static_cast<std::uint32_t>(it - alphabet.begin()));
  }
  return VertexLabels(std::move(alphabet), std::move(codes));
}

std::optional<std::uint32_t> VertexLabels::find(const std::string& label) const {
  const auto it = std::find(alphabet_.begin(), alphabet_.end(), label);
  if (it == alphabet_.end()) return std::nullopt;
  return static_cast<std::uint32_t>(it - alphabet_.begin());
}

VertexLabels VertexLabels::merged(const std::map<std::string, std::string>& merge) const {
  std::vector<std::string> names;
  names.reserve(codes_.size());
  for (auto c : codes_) {
    const auto it = merge.find(alphabet_[c]);
    if (it == merge.end()) {
      throw Error(Errc::unknown_label, kModule, "merge map has no entry for label '" + alphabet_[c] + "'");
    }
    names.push_back(it->second);
  }
  return from_names(names);
}

VertexLabels VertexLabels::select(std::span<const Vertex> keep) const {
  std::vector<std::uint32_t> codes;
  codes.reserve(keep.size());
  for (auto v : keep) codes.push_back(codes_.at(v));
  return VertexLabels(alphabet_, std::move(codes));
}

double WeightedGraph::weight(Vertex u, Vertex v) const {
  if (u == v) return 0.0;
  const auto it = weights.find({std::min(u, v), std::max(u, v)});
  return it == weights.end() ? 0.0 : it->second;
}

LoadedGraph parse_edge_list(std::istream& in, const EdgeListFormat& format) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
  std::optional<std::size_t> header_count;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '#' || body.front() == '%') {
      // "# vertices N" declares the vertex count.
      const auto fields = split_fields(body.substr(1));
      std::uint64_t count = 0;
      if (fields.size() == 2 && fields[0] == "vertices" && parse_u64(fields[1], count)) {
        header_count = static_cast<std::size_t>(count);
      }
      continue;
    }
    const auto fields = split_fields(body);
    std::uint64_t u = 0, v = 0;
    if (fields.size() < 2 || fields.size() > 3 || !parse_u64(fields[0], u) || !parse_u64(fields[1], v)) {
      throw Error(Errc::parse, kModule, "malformed edge at line " + std::to_string(line_no) + ": '" +
                                            std::string(body) + "'");
    }
    if (fields.size() == 3) {
      double w = 0.0;
      std::istringstream ws{std::string(fields[2])};
      if (!(ws >> w)) {
        throw Error(Errc::parse, kModule, "malformed weight at line " + std::to_string(line_no));
      }
    }
    if (!format.compact_ids &&
        (u >= std::numeric_limits<Vertex>::max() || v >= std::numeric_limits<Vertex>::max())) {
      throw Error(Errc::id_overflow, kModule, "vertex id overflow at line " + std::to_string(line_no));
    }
    raw.emplace_back(u, v);
  }

  LoadedGraph out;
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  std::size_t n = 0;
  if (format.compact_ids) {
    std::vector<std::uint64_t> ids;
    ids.reserve(2 * raw.size());
    for (auto [u, v] : raw) {
      ids.push_back(u);
      ids.push_back(v);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() >= std::numeric_limits<Vertex>::max()) {
      throw Error(Errc::id_overflow, kModule, "too many distinct vertex ids");
    }
    auto index = [&](std::uint64_t id) {
      return static_cast<Vertex>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };
    for (auto [u, v] : raw) edges.emplace_back(index(u), index(v));
    n = ids.size();
    out.original_ids = std::move(ids);
  } else {
    std::uint64_t max_id = 0;
    for (auto [u, v] : raw) {
      max_id = std::max({max_id, u, v});
      edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
    }
    n = raw.empty() ? 0 : static_cast<std::size_t>(max_id) + 1;
  }
  if (const auto declared = format.vertex_count ? format.vertex_count : header_count) {
    if (*declared < n) {
      throw Error(Errc::invalid_argument, kModule,
                  "declared vertex count " + std::to_string(*declared) + " is smaller than the ids used");
    }
    n = *declared;
  }
  out.graph = Graph::from_edges(n, edges, &out.duplicates_dropped, &out.loops_dropped);
  if (out.duplicates_dropped + out.loops_dropped > 0) {
    spdlog::warn("edge list: dropped {} duplicate edge(s) and {} self-loop(s)", out.duplicates_dropped,
                 out.loops_dropped);
  }
  return out;
}

LoadedGraph load_edge_list(const std::filesystem::path& path, const EdgeListFormat& format) {
  auto in = open_input(path);
  return parse_edge_list(in, format);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# vertices " << g.num_vertices() << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

VertexLabels parse_labels(std::istream& in, std::size_t n) {
  std::vector<std::optional<std::string>> by_id(n);
  std::vector<std::string> bare;
  bool keyed = false;
  bool first = true;
  std::size_t line_no = 0;
  std::size_t count = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto comma = body.find(',');
    const bool this_keyed = comma != std::string_view::npos;
    if (first) {
      keyed = this_keyed;
      first = false;
    } else if (keyed != this_keyed) {
      throw Error(Errc::parse, kModule, "mixed keyed and bare label lines at line " + std::to_string(line_no));
    }
    ++count;
    if (!keyed) {
      bare.emplace_back(body);
      continue;
    }
    std::uint64_t id = 0;
    const auto label = trim(body.substr(comma + 1));
    if (!parse_u64(trim(body.substr(0, comma)), id) || label.empty()) {
      throw Error(Errc::parse, kModule, "malformed label line " + std::to_string(line_no));
    }
    if (id >= n) {
      throw Error(Errc::count_mismatch, kModule,
                  "vertex id " + std::to_string(id) + " outside 0.." + std::to_string(n) + "-1");
    }
    if (by_id[id]) {
      throw Error(Errc::duplicate_id, kModule, "duplicate vertex id " + std::to_string(id) +
                                                   " at line " + std::to_string(line_no));
    }
    by_id[id] = std::string(label);
  }
  if (count != n) {
    throw Error(Errc::count_mismatch, kModule,
                "expected " + std::to_string(n) + " labels, found " + std::to_string(count));
  }
  if (keyed) {
    bare.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (!by_id[i]) throw Error(Errc::missing_id, kModule, "no label for vertex " + std::to_string(i));
      bare.push_back(*by_id[i]);
    }
  }
  return VertexLabels::from_names(bare);
}

VertexLabels load_labels(const std::filesystem::path& path, std::size_t n) {
  auto in = open_input(path);
  return parse_labels(in, n);
}

void write_labels(std::ostream& out, const VertexLabels& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels.name(i) << '\n';
}

Subgraph induced_subgraph(const Graph& g, std::span<const Vertex> keep,
                          const std::optional<VertexLabels>& labels) {
  Subgraph out;
  out.original.assign(keep.begin(), keep.end());
  out.new_index.assign(g.num_vertices(), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) out.new_index.at(keep[i]) = static_cast<std::int64_t>(i);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (Vertex w : g.neighbors(keep[i])) {
      const auto j = out.new_index[w];
      if (j > static_cast<std::int64_t>(i)) edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
    }
  }
  out.graph = Graph::from_edges(keep.size(), edges);
  if (labels) out.labels = labels->select(keep);
  return out;
}

std::vector<std::uint32_t> connected_components(const Graph& g) {
  constexpr auto unset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> comp(g.num_vertices(), unset);
  std::uint32_t next = 0;
  std::queue<Vertex> frontier;
  for (Vertex s = 0; s < g.num_vertices(); ++s) {
    if (comp[s] != unset) continue;
    comp[s] = next;
    frontier.push(s);
    while (!frontier.empty()) {
      const Vertex u = frontier.front();
      frontier.pop();
      for (Vertex w : g.neighbors(u)) {
        if (comp[w] == unset) {
          comp[w] = next;
          frontier.push(w);
        }
      }
    }
    ++next;
  }
  return comp;
}

Subgraph largest_connected_component(const Graph& g, const std::optional<VertexLabels>& labels) {
  if (labels && labels->size() != g.num_vertices()) {
    throw Error(Errc::count_mismatch, kModule, "labels do not cover the graph");
  }
  const auto comp = connected_components(g);
  std::vector<std::size_t> sizes;
  for (auto c : comp) {
    if (c >= sizes.size()) sizes.resize(c + 1, 0);
    ++sizes[c];
  }
  std::vector<Vertex> keep;
  if (!sizes.empty()) {
    // Components are numbered by smallest member, so the first maximum wins ties.
    const auto best = static_cast<std::uint32_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (Vertex v = 0; v < g.num_vertices(); ++v) {
      if (comp[v] == best) keep.push_back(v);
    }
  }
  return induced_subgraph(g, keep, labels);
}

Subgraph induced_subgraph_by_labels(const Graph& g, const VertexLabels& labels,
                                    const std::set<std::string>& keep) {
  if (labels.size() != g.num_vertices()) {
    throw Error(Errc::count_mismatch, kModule, "labels do not cover the graph");
  }
  std::vector<bool> wanted(labels.alphabet().size(), false);
  for (const auto& name : keep) {
    const auto code = labels.find(name);
    if (!code) throw Error(Errc::unknown_label, kModule, "label '" + name + "' is not in the alphabet");
    wanted[*code] = true;
  }
  std::vector<Vertex> vertices;
  for (Vertex v = 0; v < g.num_vertices(); ++v) {
    if (wanted[labels.code(v)]) vertices.push_back(v);
  }
  return induced_subgraph(g, vertices, labels);
}

WeightedGraph average_graphs(std::span<const Graph> graphs) {
  if (graphs.empty()) throw Error(Errc::invalid_argument, kModule, "cannot average an empty list of graphs");
  WeightedGraph out;
  out.n = graphs.front().num_vertices();
  for (const auto& g : graphs) {
    if (g.num_vertices() != out.n) {
      throw Error(Errc::dimension_mismatch, kModule, "graphs have different vertex counts");
    }
    for (const auto& e : g.edges()) out.weights[e] += 1.0;
  }
  const double m = static_cast<double>(graphs.size());
  for (auto& [e, w] : out.weights) w /= m;
  return out;
}

Graph binarize(const WeightedGraph& w, double threshold) {
  std::vector<Edge> edges;
  for (const auto& [e, weight] : w.weights) {
    if (weight < 0.0) throw Error(Errc::invalid_argument, kModule, "negative edge weight");
    if (weight > threshold) edges.push_back(e);
  }
  return Graph::from_edges(w.n, edges);
}

std::vector<std::size_t> degrees(const Graph& g) {
  std::vector<std::size_t> out(g.num_vertices());
  for (Vertex v = 0; v < g.num_vertices(); ++v) out[v] = g.degree(v);
  return out;
}

double density(const Graph& g) {
  const auto n = g.num_vertices();
  if (n < 2) throw Error(Errc::invalid_argument, kModule, "density needs at least 2 vertices");
  return static_cast<double>(g.num_edges()) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::io: return "io";
    case Errc::parse: return "parse";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::count_mismatch: return "count-mismatch";
    case Errc::duplicate_id: return "duplicate-id";
    case Errc::missing_id: return "missing-id";
    case Errc::unknown_label: return "unknown-label";
    case Errc::id_overflow: return "id-overflow";
    case Errc::degenerate_block: return "degenerate-block";
    case Errc::isolated_vertex: return "isolated-vertex";
    case Errc::not_converged: return "not-converged";
    case Errc::degenerate_scree: return "degenerate-scree";
    case Errc::fit_failed: return "fit-failed";
    case Errc::singular: return "singular";
    case Errc::dimension_mismatch: return "dimension-mismatch";
  }
  return "unknown";
}

}  // namespace twotruths
