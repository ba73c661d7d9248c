#pragma once

#include <cstdint>
#include <vector>

#include "smartquery/graph.hpp"

namespace smartquery {

// Planted-partition citation-style graph: heavy-tailed node weights drive
// degrees, a fraction `homophily` of edges stay inside a class, and binary
// bag-of-words features draw mostly from a class-specific vocabulary slice.
struct SyntheticSpec {
  std::size_t nodes{600};
  int classes{4};
  std::size_t feature_dim{200};
  double avg_degree{4.0};
  double homophily{0.8};
  double words_per_node{12.0};
  double topic_fraction{0.6};   // share of words drawn from the node's class vocabulary
  double weight_exponent{2.5};  // Pareto tail of node weights
  std::vector<double> class_weights;  // empty: uniform
};

Dataset synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed);

// Same shape as the Cora citation graph (2708 nodes, 7 classes, 1433 words).
SyntheticSpec cora_like_spec();

}  // namespace smartquery
