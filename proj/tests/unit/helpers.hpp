#pragma once

#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "twotruths/error.hpp"
#include "twotruths/graph.hpp"

// Runs expr and checks that it throws twotruths::Error with the given code.
#define CHECK_ERRC(expr, errc)                                          \
  do {                                                                  \
    bool thrown_ = false;                                               \
    try {                                                               \
      (void)(expr);                                                     \
    } catch (const twotruths::Error& e_) {                              \
      thrown_ = true;                                                   \
      CHECK_MESSAGE(e_.code() == (errc), e_.what());                    \
    }                                                                   \
    CHECK_MESSAGE(thrown_, "expected an exception from " #expr);        \
  } while (0)

namespace testutil {

inline twotruths::Graph graph(std::size_t n, std::vector<twotruths::Edge> edges) {
  return twotruths::Graph::from_edges(n, edges);
}

inline twotruths::Graph parse(const std::string& text) {
  std::istringstream in(text);
  return twotruths::parse_edge_list(in).graph;
}

inline twotruths::Graph complete(std::size_t n) {
  std::vector<twotruths::Edge> e;
  for (twotruths::Vertex i = 0; i < n; ++i)
    for (twotruths::Vertex j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return graph(n, e);
}

inline twotruths::VertexLabels labels(const std::vector<std::string>& names) {
  return twotruths::VertexLabels::from_names(names);
}

}  // namespace testutil
