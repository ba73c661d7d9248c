#pragma once

#include <vector>

#include "smartquery/graph.hpp"
#include "smartquery/label_state.hpp"

namespace smartquery {

struct PageRankOptions {
  double damping{0.85};
  double tolerance{1e-10};  // L1 change between iterates
  int max_iterations{1000};
};

struct PageRankResult {
  std::vector<double> scores;  // sums to 1
  int iterations{0};
  bool converged{false};
};

// Power iteration on PR_i = (1 - b)/n + b * sum_j A_ij PR_j / deg_j, with the
// mass of degree-0 nodes spread uniformly.
PageRankResult pagerank(const SparseGraph& g, const PageRankOptions& opts = {});

// Min-max scaling to [0, 1]; a constant vector maps to all zeros.
std::vector<double> min_max_normalize(const std::vector<double>& v);

// Raw degrees, min-max normalized.
std::vector<double> degree_scores(const SparseGraph& g);

struct CentralityScores {
  std::vector<double> degree_norm;
  std::vector<double> pagerank;
  std::vector<double> pagerank_norm;
  std::vector<double> pool_score;  // degree_norm + pagerank_norm
  bool pagerank_converged{false};
};

CentralityScores centrality_scores(const SparseGraph& g, const PageRankOptions& opts = {});

// Candidate pool drawn once from the unlabeled set. Members are ordered by
// pool score, highest first, ties by ascending id.
class CandidatePool {
public:
  CandidatePool() = default;
  CandidatePool(std::vector<NodeId> members, std::size_t capacity)
      : members_(std::move(members)), capacity_(capacity) {}

  const std::vector<NodeId>& members() const noexcept { return members_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  bool contains(NodeId v) const;
  void remove(NodeId v);

private:
  std::vector<NodeId> members_;
  std::size_t capacity_{0};
};

// 2 * l_max * K slots.
std::size_t pool_capacity(int l_max, int num_classes);

// Top-capacity unlabeled nodes by score (descending, ties by ascending id).
CandidatePool top_k_pool(const std::vector<double>& score, const LabelState& state, std::size_t capacity);

CandidatePool build_pool(const CentralityScores& scores, const LabelState& state, int l_max, int num_classes);

}  // namespace smartquery
