#include "smartquery/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "smartquery/random.hpp"

namespace smartquery {

namespace {

// Cumulative sampler over non-negative weights.
class Sampler {
public:
  explicit Sampler(const std::vector<double>& w) : cum_(w.size()) {
    std::partial_sum(w.begin(), w.end(), cum_.begin());
  }
  std::size_t draw(Rng& rng) const {
    const double t = uniform01(rng) * cum_.back();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), t);
    return std::min(static_cast<std::size_t>(it - cum_.begin()), cum_.size() - 1);
  }
  bool empty() const { return cum_.empty() || cum_.back() <= 0.0; }

private:
  std::vector<double> cum_;
};

}  // namespace

SyntheticSpec cora_like_spec() {
  SyntheticSpec s;
  s.nodes = 2708;
  s.classes = 7;
  s.feature_dim = 1433;
  s.avg_degree = 3.9;
  s.homophily = 0.81;
  s.words_per_node = 18.0;
  s.topic_fraction = 0.5;
  s.class_weights = {0.13, 0.08, 0.15, 0.30, 0.16, 0.11, 0.07};
  return s;
}

Dataset synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.classes < 1 || spec.nodes < static_cast<std::size_t>(spec.classes)) {
    throw std::invalid_argument("synthetic: need at least one node per class");
  }
  if (spec.feature_dim < static_cast<std::size_t>(spec.classes)) {
    throw std::invalid_argument("synthetic: feature_dim must be >= classes");
  }
  Rng rng(seed);
  const std::size_t n = spec.nodes;
  const auto k = static_cast<std::size_t>(spec.classes);

  std::vector<double> cw = spec.class_weights;
  if (cw.empty()) cw.assign(k, 1.0);
  if (cw.size() != k) throw std::invalid_argument("synthetic: class_weights size differs from classes");

  Dataset ds;
  ds.name = "synthetic";
  ds.num_classes = spec.classes;
  ds.labels.resize(n);
  // Every class gets at least one node; the rest follow the class weights.
  Sampler class_sampler(cw);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = i < k ? static_cast<ClassId>(i) : static_cast<ClassId>(class_sampler.draw(rng));
  }
  {
    std::vector<ClassId> shuffled = ds.labels;
    shuffle(std::span<ClassId>(shuffled), rng);
    ds.labels = std::move(shuffled);
  }

  std::vector<double> weight(n);
  for (double& w : weight) w = std::pow(1.0 - uniform01(rng), -1.0 / (spec.weight_exponent - 1.0));

  std::vector<std::vector<double>> class_w(k, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> other_w(k, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    for (std::size_t j = 0; j < k; ++j) (j == c ? class_w : other_w)[j][i] = weight[i];
  }
  Sampler any(weight);
  std::vector<Sampler> same, other;
  for (std::size_t j = 0; j < k; ++j) {
    same.emplace_back(class_w[j]);
    other.emplace_back(other_w[j]);
  }

  const auto m = static_cast<std::size_t>(std::llround(spec.avg_degree * static_cast<double>(n) / 2.0));
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(m);
  for (std::size_t e = 0; e < m; ++e) {
    const std::size_t u = any.draw(rng);
    const auto c = static_cast<std::size_t>(ds.labels[u]);
    const bool inside = uniform01(rng) < spec.homophily || other[c].empty();
    const std::size_t v = inside ? same[c].draw(rng) : other[c].draw(rng);
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  ds.graph = SparseGraph::from_edges(n, edges);

  // Vocabulary: class c owns the slice [c*d/k, (c+1)*d/k).
  const std::size_t d = spec.feature_dim;
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    const std::size_t lo = c * d / k;
    const std::size_t hi = (c + 1) * d / k;
    const auto words = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(spec.words_per_node * (0.5 + uniform01(rng)))));
    for (std::size_t w = 0; w < words; ++w) {
      const std::size_t col = uniform01(rng) < spec.topic_fraction
                                  ? lo + static_cast<std::size_t>(uniform_index(rng, hi - lo))
                                  : static_cast<std::size_t>(uniform_index(rng, d));
      x(i, col) = 1.0;
    }
  }
  ds.features = FeatureMatrix(std::move(x));
  return ds;
}

}  // namespace smartquery
