#pragma once

#include <span>

#include "smartquery/dense.hpp"
#include "smartquery/graph.hpp"
#include "smartquery/label_state.hpp"

namespace smartquery {

struct PropagationOptions {
  double alpha{0.9};
  double tolerance{1e-6};  // max-abs change between iterates
  int max_iterations{1000};
};

struct PropagationResult {
  Matrix f;
  int iterations{0};
  bool converged{false};
};

// n x K seed: one-hot rows for the labeled nodes, zero elsewhere.
Matrix label_seed(const LabelState& state);

// Label spreading F <- alpha * A F + (1 - alpha) * Y from F = Y. The fixed
// point is (1 - alpha)(I - alpha A)^-1 Y. Expects the plain symmetric
// normalization.
PropagationResult propagate(const NormalizedAdjacency& adj, const Matrix& seed, const PropagationOptions& opts);

// Rows L1-normalized; rows summing below 1e-12 become uniform.
Matrix lp_posterior(const Matrix& f);

// Entropy of one F row after the lp_posterior normalization; equals the
// matching row term of graph_uncertainty(lp_posterior(f)).
double lp_row_entropy(std::span<const double> f_row);

// Sum of row entropies in nats.
double graph_uncertainty(const Matrix& probs);

}  // namespace smartquery
