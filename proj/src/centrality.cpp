#include "smartquery/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace smartquery {

PageRankResult pagerank(const SparseGraph& g, const PageRankOptions& opts) {
  const std::size_t n = g.num_nodes();
  if (n == 0) throw std::invalid_argument("pagerank: empty graph");
  if (!(opts.damping >= 0.0 && opts.damping < 1.0)) throw std::invalid_argument("pagerank: damping must be in [0, 1)");

  const double inv_n = 1.0 / static_cast<double>(n);
  const auto& deg = g.degrees();
  PageRankResult res;
  std::vector<double> pr(n, inv_n);
  std::vector<double> next(n);
  std::vector<double> share(n);
  for (int it = 0; it < opts.max_iterations; ++it) {
    double dangling = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (deg[j] == 0) {
        dangling += pr[j];
        share[j] = 0.0;
      } else {
        share[j] = pr[j] / static_cast<double>(deg[j]);
      }
    }
    const double base = (1.0 - opts.damping) * inv_n + opts.damping * dangling * inv_n;
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (NodeId j : g.neighbors(static_cast<NodeId>(i))) s += share[static_cast<std::size_t>(j)];
      next[i] = base + opts.damping * s;
      change += std::abs(next[i] - pr[i]);
    }
    pr.swap(next);
    res.iterations = it + 1;
    if (change < opts.tolerance) {
      res.converged = true;
      break;
    }
  }
  const double total = std::accumulate(pr.begin(), pr.end(), 0.0);
  for (double& v : pr) v /= total;
  res.scores = std::move(pr);
  return res;
}

std::vector<double> min_max_normalize(const std::vector<double>& v) {
  std::vector<double> out(v.size(), 0.0);
  if (v.empty()) return out;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / range;
  return out;
}

std::vector<double> degree_scores(const SparseGraph& g) {
  std::vector<double> d(g.degrees().begin(), g.degrees().end());
  return min_max_normalize(d);
}

CentralityScores centrality_scores(const SparseGraph& g, const PageRankOptions& opts) {
  CentralityScores s;
  s.degree_norm = degree_scores(g);
  auto pr = pagerank(g, opts);
  s.pagerank_converged = pr.converged;
  s.pagerank = std::move(pr.scores);
  s.pagerank_norm = min_max_normalize(s.pagerank);
  s.pool_score.resize(s.pagerank.size());
  for (std::size_t i = 0; i < s.pool_score.size(); ++i) s.pool_score[i] = s.degree_norm[i] + s.pagerank_norm[i];
  return s;
}

bool CandidatePool::contains(NodeId v) const {
  return std::find(members_.begin(), members_.end(), v) != members_.end();
}

void CandidatePool::remove(NodeId v) {
  auto it = std::find(members_.begin(), members_.end(), v);
  if (it != members_.end()) members_.erase(it);
}

std::size_t pool_capacity(int l_max, int num_classes) {
  return 2 * static_cast<std::size_t>(l_max) * static_cast<std::size_t>(num_classes);
}

CandidatePool top_k_pool(const std::vector<double>& score, const LabelState& state, std::size_t capacity) {
  std::vector<NodeId> cand(state.unlabeled().begin(), state.unlabeled().end());
  if (cand.empty()) throw std::invalid_argument("build_pool: no unlabeled nodes");
  const std::size_t take = std::min(capacity, cand.size());
  auto better = [&](NodeId a, NodeId b) {
    const double sa = score[static_cast<std::size_t>(a)];
    const double sb = score[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  };
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(), better);
  cand.resize(take);
  return CandidatePool(std::move(cand), capacity);
}

CandidatePool build_pool(const CentralityScores& scores, const LabelState& state, int l_max, int num_classes) {
  return top_k_pool(scores.pool_score, state, pool_capacity(l_max, num_classes));
}

}  // namespace smartquery
