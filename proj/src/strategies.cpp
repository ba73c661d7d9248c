#include "smartquery/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "smartquery/kmeans.hpp"

namespace smartquery {

namespace {

constexpr std::pair<Strategy, std::string_view> kNames[] = {
    {Strategy::smartquery, "smartquery"},   {Strategy::random, "random"},
    {Strategy::entropy, "entropy"},         {Strategy::degree, "degree"},
    {Strategy::coreset, "coreset"},         {Strategy::age, "age"},
    {Strategy::pool_only, "pool-only"},     {Strategy::lp_random_pool, "lp-random-pool"},
    {Strategy::lp_embed_pool, "lp-embed-pool"},
};

const LabelState& state_of(const QueryContext& ctx) {
  if (ctx.state == nullptr) throw std::invalid_argument("query context has no label state");
  return *ctx.state;
}

const Posterior& posterior_of(const QueryContext& ctx) {
  if (ctx.posterior == nullptr) throw std::invalid_argument("query context has no posterior");
  return *ctx.posterior;
}

std::vector<NodeId> unlabeled_or_throw(const QueryContext& ctx) {
  const auto u = state_of(ctx).unlabeled();
  if (u.empty()) throw EmptyCandidates("no unlabeled nodes left to query");
  return {u.begin(), u.end()};
}

}  // namespace

std::string_view to_string(Strategy s) {
  for (auto [k, name] : kNames) {
    if (k == s) return name;
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (auto [k, n] : kNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all = [] {
    std::vector<Strategy> v;
    for (auto [k, _] : kNames) v.push_back(k);
    return v;
  }();
  return all;
}

// ---------------------------------------------------------------------------
// Hybrid uncertainty reduction

UncertaintyReducer::UncertaintyReducer(const NormalizedAdjacency& lp_adj, const LabelState& state,
                                       const PropagationOptions& opts)
    : adj_(&lp_adj), state_(&state), opts_(opts) {
  auto base = propagate(lp_adj, label_seed(state), opts);
  converged_ = base.converged;
  base_f_ = std::move(base.f);
  row_h_.resize(base_f_.rows());
  for (std::size_t r = 0; r < base_f_.rows(); ++r) {
    row_h_[r] = lp_row_entropy(base_f_.row(r));
    base_h_ += row_h_[r];
  }
}

std::vector<double> UncertaintyReducer::delta_h(NodeId candidate) const {
  if (candidate < 0 || static_cast<std::size_t>(candidate) >= base_f_.rows()) {
    throw std::out_of_range("delta_h: candidate id out of range");
  }
  if (state_->is_labeled(candidate)) throw std::invalid_argument("delta_h: candidate is already labeled");

  Matrix unit(base_f_.rows(), 1);
  unit(static_cast<std::size_t>(candidate), 0) = 1.0;
  const auto response = propagate(*adj_, unit, opts_);

  const std::size_t k = base_f_.cols();
  std::vector<double> out(k, 0.0);
  std::vector<double> row(k);
  for (std::size_t r = 0; r < base_f_.rows(); ++r) {
    const double g = response.f(r, 0);
    if (g == 0.0) continue;  // row identical to the base run
    auto base = base_f_.row(r);
    for (std::size_t c = 0; c < k; ++c) {
      std::copy(base.begin(), base.end(), row.begin());
      row[c] += g;
      out[c] += row_h_[r] - lp_row_entropy(row);
    }
  }
  return out;
}

double delta_h(const QueryContext& ctx, NodeId candidate, ClassId k) {
  if (ctx.lp_adj == nullptr) throw std::invalid_argument("query context has no LP adjacency");
  const auto& state = state_of(ctx);
  if (k < 0 || k >= state.num_classes()) throw std::out_of_range("delta_h: class id out of range");
  UncertaintyReducer reducer(*ctx.lp_adj, state, ctx.lp);
  return reducer.delta_h(candidate)[static_cast<std::size_t>(k)];
}

namespace {

QueryScore hybrid_score(const UncertaintyReducer& reducer, const Posterior& post, NodeId candidate) {
  const auto dh = reducer.delta_h(candidate);
  auto p = post.probs.row(static_cast<std::size_t>(candidate));
  double value = 0.0;
  for (std::size_t c = 0; c < dh.size(); ++c) value += p[c] * dh[c];
  return {candidate, value, Strategy::smartquery};
}

}  // namespace

QueryScore smartquery_score(const QueryContext& ctx, NodeId candidate) {
  if (ctx.lp_adj == nullptr) throw std::invalid_argument("query context has no LP adjacency");
  UncertaintyReducer reducer(*ctx.lp_adj, state_of(ctx), ctx.lp);
  return hybrid_score(reducer, posterior_of(ctx), candidate);
}

std::vector<QueryScore> smartquery_scores(const QueryContext& ctx) {
  if (ctx.lp_adj == nullptr) throw std::invalid_argument("query context has no LP adjacency");
  if (ctx.pool == nullptr || ctx.pool->empty()) throw EmptyCandidates("candidate pool is empty");
  UncertaintyReducer reducer(*ctx.lp_adj, state_of(ctx), ctx.lp);
  const auto& post = posterior_of(ctx);
  std::vector<QueryScore> out;
  out.reserve(ctx.pool->size());
  for (NodeId v : ctx.pool->members()) out.push_back(hybrid_score(reducer, post, v));
  return out;
}

QueryScore baseline_entropy(const QueryContext& ctx, NodeId candidate) {
  return {candidate, row_entropy(posterior_of(ctx).probs.row(static_cast<std::size_t>(candidate))),
          Strategy::entropy};
}

QueryScore argmax(const std::vector<QueryScore>& scores) {
  if (scores.empty()) throw EmptyCandidates("no candidates to choose from");
  QueryScore best = scores.front();
  for (const auto& s : scores) {
    if (s.value > best.value || (s.value == best.value && s.node < best.node)) best = s;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Baselines

std::vector<double> percentiles(const std::vector<double>& values) {
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out(values.size());
  const auto n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), values[i]) - sorted.begin();
    out[i] = static_cast<double>(below) / n;
  }
  return out;
}

std::vector<double> embedding_density(const Posterior& post, int num_classes, Rng& rng, int iterations) {
  const auto km = kmeans(post.probs, static_cast<std::size_t>(num_classes), rng, iterations);
  std::vector<double> density(km.distance.size());
  for (std::size_t i = 0; i < density.size(); ++i) density[i] = 1.0 / (1.0 + km.distance[i]);
  return density;
}

NodeId baseline_degree(const QueryContext& ctx) {
  if (ctx.graph == nullptr) throw std::invalid_argument("query context has no graph");
  const auto cand = unlabeled_or_throw(ctx);
  std::vector<QueryScore> s;
  s.reserve(cand.size());
  for (NodeId v : cand) s.push_back({v, static_cast<double>(ctx.graph->degree(v)), Strategy::degree});
  return argmax(s).node;
}

NodeId baseline_random(const QueryContext& ctx, Rng& rng) {
  const auto cand = unlabeled_or_throw(ctx);
  return cand[static_cast<std::size_t>(uniform_index(rng, cand.size()))];
}

QueryScore baseline_coreset(const QueryContext& ctx) {
  const auto cand = unlabeled_or_throw(ctx);
  const auto& state = state_of(ctx);
  const Matrix& emb = posterior_of(ctx).hidden;
  const auto labeled = state.labeled();
  std::vector<QueryScore> s;
  s.reserve(cand.size());
  for (NodeId v : cand) {
    double nearest = std::numeric_limits<double>::infinity();
    auto a = emb.row(static_cast<std::size_t>(v));
    for (NodeId l : labeled) {
      auto b = emb.row(static_cast<std::size_t>(l));
      double d = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
      nearest = std::min(nearest, d);
    }
    // With nothing labeled every point is equally far; fall back to id order.
    const double value = labeled.empty() ? 0.0 : std::sqrt(nearest);
    s.push_back({v, value, Strategy::coreset});
  }
  return argmax(s);
}

QueryScore baseline_age(const QueryContext& ctx, int epoch, Rng& rng, const StrategyOptions& opts) {
  const auto cand = unlabeled_or_throw(ctx);
  if (ctx.centrality == nullptr) throw std::invalid_argument("AGE needs centrality scores");
  const auto& post = posterior_of(ctx);
  const int k = state_of(ctx).num_classes();

  const auto density_all = embedding_density(post, k, rng, opts.kmeans_iterations);
  std::vector<double> ent, den, cen;
  ent.reserve(cand.size());
  den.reserve(cand.size());
  cen.reserve(cand.size());
  for (NodeId v : cand) {
    const auto i = static_cast<std::size_t>(v);
    ent.push_back(row_entropy(post.probs.row(i)));
    den.push_back(density_all[i]);
    cen.push_back(ctx.centrality->pagerank[i]);
  }
  const auto pe = percentiles(ent);
  const auto pd = percentiles(den);
  const auto pc = percentiles(cen);

  AgeWeights w;
  if (opts.age_fixed_weights) {
    w = *opts.age_fixed_weights;
  } else {
    w.centrality = beta_sample(rng, 1.0, 1.005 - std::pow(opts.age_basef, epoch));
    w.entropy = w.density = (1.0 - w.centrality) / 2.0;
  }
  std::vector<QueryScore> s;
  s.reserve(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) {
    s.push_back({cand[i], w.entropy * pe[i] + w.density * pd[i] + w.centrality * pc[i], Strategy::age});
  }
  return argmax(s);
}

// ---------------------------------------------------------------------------
// Selector

QuerySelector::QuerySelector(Strategy strategy, int l_max, std::uint64_t seed, StrategyOptions opts)
    : strategy_(strategy), l_max_(l_max), rng_(seed), opts_(std::move(opts)) {}

bool QuerySelector::uses_pool() const noexcept {
  switch (strategy_) {
    case Strategy::smartquery:
    case Strategy::pool_only:
    case Strategy::lp_random_pool:
    case Strategy::lp_embed_pool:
      return true;
    default:
      return false;
  }
}

void QuerySelector::ensure_pool(const QueryContext& ctx) {
  if (pool_) return;
  const auto& state = state_of(ctx);
  const std::size_t capacity = pool_capacity(l_max_, state.num_classes());
  switch (strategy_) {
    case Strategy::smartquery:
    case Strategy::pool_only:
      if (ctx.centrality == nullptr) throw std::invalid_argument("pooling needs centrality scores");
      pool_ = build_pool(*ctx.centrality, state, l_max_, state.num_classes());
      break;
    case Strategy::lp_random_pool: {
      auto cand = unlabeled_or_throw(ctx);
      shuffle(std::span<NodeId>(cand), rng_);
      cand.resize(std::min(capacity, cand.size()));
      std::sort(cand.begin(), cand.end());
      pool_ = CandidatePool(std::move(cand), capacity);
      break;
    }
    case Strategy::lp_embed_pool: {
      const auto density = embedding_density(posterior_of(ctx), state.num_classes(), rng_, opts_.kmeans_iterations);
      pool_ = top_k_pool(density, state, capacity);
      break;
    }
    default:
      break;
  }
}

QueryScore QuerySelector::select(QueryContext ctx, int epoch) {
  QueryScore pick;
  if (uses_pool()) {
    ensure_pool(ctx);
    if (pool_->empty()) throw EmptyCandidates("candidate pool exhausted");
    ctx.pool = &*pool_;
    if (strategy_ == Strategy::pool_only) {
      const NodeId v = pool_->members().front();
      const double s = ctx.centrality ? ctx.centrality->pool_score[static_cast<std::size_t>(v)] : 0.0;
      pick = {v, s, strategy_};
    } else {
      pick = argmax(smartquery_scores(ctx));
    }
    pool_->remove(pick.node);
  } else {
    switch (strategy_) {
      case Strategy::random:
        pick = {baseline_random(ctx, rng_), 0.0, strategy_};
        break;
      case Strategy::entropy: {
        std::vector<QueryScore> s;
        for (NodeId v : unlabeled_or_throw(ctx)) s.push_back(baseline_entropy(ctx, v));
        pick = argmax(s);
        break;
      }
      case Strategy::degree: {
        const NodeId v = baseline_degree(ctx);
        pick = {v, static_cast<double>(ctx.graph->degree(v)), strategy_};
        break;
      }
      case Strategy::coreset:
        pick = baseline_coreset(ctx);
        break;
      case Strategy::age:
        pick = baseline_age(ctx, epoch, rng_, opts_);
        break;
      default:
        throw std::logic_error("unhandled strategy");
    }
  }
  pick.strategy = strategy_;
  if (!state_of(ctx).is_unlabeled(pick.node)) {
    throw std::logic_error("strategy selected node " + std::to_string(pick.node) + " outside the unlabeled set");
  }
  return pick;
}

}  // namespace smartquery
