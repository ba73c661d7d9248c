#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "smartquery/centrality.hpp"
#include "smartquery/gcn.hpp"
#include "smartquery/graph.hpp"
#include "smartquery/label_state.hpp"
#include "smartquery/propagation.hpp"
#include "smartquery/random.hpp"

namespace smartquery {

enum class Strategy {
  smartquery,      // centrality pool + hybrid uncertainty reduction
  random,          // uniform over the unlabeled set
  entropy,         // GCN predictive entropy
  degree,          // largest raw degree
  coreset,         // greedy k-center in hidden space
  age,             // time-weighted entropy / density / centrality percentiles
  pool_only,       // best pool score among remaining pool members
  lp_random_pool,  // hybrid reduction over a uniformly random pool
  lp_embed_pool,   // hybrid reduction over a K-means density pool
};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);
const std::vector<Strategy>& all_strategies();

// Everything a strategy may look at. Ground truth is deliberately absent.
struct QueryContext {
  const SparseGraph* graph{nullptr};
  const NormalizedAdjacency* lp_adj{nullptr};  // plain symmetric
  const Posterior* posterior{nullptr};
  const LabelState* state{nullptr};
  const CandidatePool* pool{nullptr};
  const CentralityScores* centrality{nullptr};
  PropagationOptions lp;
};

struct QueryScore {
  NodeId node{-1};
  double value{0.0};
  Strategy strategy{Strategy::smartquery};
};

// Graph-uncertainty reduction for hypothetical labels, with the propagation
// of the current labeled set computed once. Propagation is linear in the
// seed, so the run with candidate i labeled k equals the base run plus the
// response to a unit seed at i placed in column k; one unit run per
// candidate serves all classes.
class UncertaintyReducer {
public:
  UncertaintyReducer(const NormalizedAdjacency& lp_adj, const LabelState& state, const PropagationOptions& opts);

  double base_uncertainty() const noexcept { return base_h_; }
  bool converged() const noexcept { return converged_; }

  // Delta H for every class of one unlabeled candidate.
  std::vector<double> delta_h(NodeId candidate) const;

private:
  const NormalizedAdjacency* adj_;
  const LabelState* state_;
  PropagationOptions opts_;
  Matrix base_f_;
  std::vector<double> row_h_;
  double base_h_{0.0};
  bool converged_{true};
};

// H(LP(V_l)) - H(LP(V_l + {candidate: k})).
double delta_h(const QueryContext& ctx, NodeId candidate, ClassId k);

// sum_k p_ik * delta_h(candidate, k) with p from the GCN posterior.
QueryScore smartquery_score(const QueryContext& ctx, NodeId candidate);
// Scores for every pool member, sharing one reducer.
std::vector<QueryScore> smartquery_scores(const QueryContext& ctx);

QueryScore baseline_entropy(const QueryContext& ctx, NodeId candidate);

// Highest value, ties to the lower node id. Throws on an empty list.
QueryScore argmax(const std::vector<QueryScore>& scores);

struct AgeWeights {
  double entropy{0.0};
  double density{0.0};
  double centrality{0.0};
};

struct StrategyOptions {
  // AGE schedule: centrality weight ~ Beta(1, 1.005 - basef^t), the other
  // two split the remainder evenly.
  double age_basef{0.9};
  std::optional<AgeWeights> age_fixed_weights;
  int kmeans_iterations{100};
};

// Within-set percentile: fraction of `values` strictly below each entry.
std::vector<double> percentiles(const std::vector<double>& values);

// Per-node density 1 / (1 + distance to nearest K-means centroid) of the
// GCN probabilities, K = number of classes.
std::vector<double> embedding_density(const Posterior& post, int num_classes, Rng& rng, int iterations);

NodeId baseline_degree(const QueryContext& ctx);
NodeId baseline_random(const QueryContext& ctx, Rng& rng);
QueryScore baseline_coreset(const QueryContext& ctx);
QueryScore baseline_age(const QueryContext& ctx, int epoch, Rng& rng, const StrategyOptions& opts);

// Per-run selection state for one strategy: owns the candidate pool (built
// on the first query and never rebuilt) and the strategy's generator.
class QuerySelector {
public:
  QuerySelector(Strategy strategy, int l_max, std::uint64_t seed, StrategyOptions opts = {});

  Strategy strategy() const noexcept { return strategy_; }
  bool uses_pool() const noexcept;
  const std::optional<CandidatePool>& pool() const noexcept { return pool_; }

  // Picks one unlabeled node; pool strategies also drop it from the pool.
  // `ctx.pool` is filled in from the selector's pool.
  QueryScore select(QueryContext ctx, int epoch);

private:
  void ensure_pool(const QueryContext& ctx);

  Strategy strategy_;
  int l_max_;
  Rng rng_;
  StrategyOptions opts_;
  std::optional<CandidatePool> pool_;
};

class EmptyCandidates : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace smartquery
