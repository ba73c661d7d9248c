#include "smartquery/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace smartquery {

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = uniform(rng, -r, r);
  return m;
}

// Intermediate values kept for backprop.
struct Trace {
  CsrMatrix x_in;     // features after dropout
  Matrix pre_hidden;  // A X W1
  Matrix hidden_in;   // relu(pre_hidden) after dropout
  Posterior post;
};

CsrMatrix dropout_sparse(const CsrMatrix& x, double p, Rng* rng) {
  if (rng == nullptr || p <= 0.0) return x;
  CsrMatrix out = x;
  const double scale = 1.0 / (1.0 - p);
  for (double& v : out.values) v = uniform01(*rng) < p ? 0.0 : v * scale;
  return out;
}

Matrix dropout_dense(const Matrix& x, double p, Rng* rng) {
  if (rng == nullptr || p <= 0.0) return x;
  Matrix out = x;
  const double scale = 1.0 / (1.0 - p);
  for (double& v : out.data()) v = uniform01(*rng) < p ? 0.0 : v * scale;
  return out;
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
  probs = Matrix(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto out = probs.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      out[k] = std::exp(in[k] - mx);
      s += out[k];
    }
    for (double& v : out) v /= s;
  }
}

Trace run_forward(const GcnModel& model, const NormalizedAdjacency& adj, const FeatureMatrix& x, Rng* rng) {
  if (x.rows() != adj.values.rows) throw ShapeError("forward: feature rows differ from node count");
  if (x.dim() != model.in_dim()) throw ShapeError("forward: feature dimension differs from model input");
  const double p = model.config().dropout;
  Trace t;
  t.x_in = dropout_sparse(x.sparse(), p, rng);
  t.pre_hidden = spmm(adj, multiply(t.x_in, model.w1()));
  t.post.hidden = t.pre_hidden;
  for (double& v : t.post.hidden.data()) v = std::max(v, 0.0);
  t.hidden_in = dropout_dense(t.post.hidden, p, rng);
  t.post.logits = spmm(adj, matmul(t.hidden_in, model.w2()));
  if (!t.post.logits.all_finite()) throw TrainingDiverged("non-finite logits in GCN forward pass");
  softmax_rows(t.post.logits, t.post.probs);
  return t;
}

double penalty(const GcnModel& model) {
  const auto& cfg = model.config();
  double r = frobenius_sq(model.w1());
  if (cfg.regularize_all_layers) r += frobenius_sq(model.w2());
  return cfg.weight_decay * r;
}

void adam_update(Matrix& w, Matrix& m, Matrix& v, const Matrix& g, const GcnConfig& cfg, double lr,
                 std::int64_t step) {
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  auto& wd = w.data();
  auto& md = m.data();
  auto& vd = v.data();
  const auto& gd = g.data();
  for (std::size_t i = 0; i < wd.size(); ++i) {
    md[i] = b1 * md[i] + (1.0 - b1) * gd[i];
    vd[i] = b2 * vd[i] + (1.0 - b2) * gd[i] * gd[i];
    const double mhat = md[i] / c1;
    const double vhat = vd[i] / c2;
    wd[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
  }
}

}  // namespace

GcnModel::GcnModel(std::size_t in_dim, std::size_t num_classes, const GcnConfig& config, std::uint64_t seed)
    : config_(config), rng_(seed) {
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
  if (config.hidden == 0) throw std::invalid_argument("hidden width must be positive");
  w1_ = glorot(in_dim, config.hidden, rng_);
  w2_ = glorot(config.hidden, num_classes, rng_);
  adam_.m1 = adam_.v1 = Matrix(in_dim, config.hidden);
  adam_.m2 = adam_.v2 = Matrix(config.hidden, num_classes);
}

Posterior forward(const GcnModel& model, const NormalizedAdjacency& adj, const FeatureMatrix& x) {
  return run_forward(model, adj, x, nullptr).post;
}

Posterior forward(GcnModel& model, const NormalizedAdjacency& adj, const FeatureMatrix& x, bool train_mode) {
  return run_forward(model, adj, x, train_mode ? &model.dropout_rng() : nullptr).post;
}

double loss(const Posterior& post, const LabelState& state, const GcnModel& model) {
  const auto labeled = state.labeled();
  if (labeled.empty()) throw LabelStateError("loss: labeled set is empty");
  double nll = 0.0;
  for (NodeId v : labeled) {
    const auto c = static_cast<std::size_t>(*state.label(v));
    nll -= std::log(post.probs(static_cast<std::size_t>(v), c));
  }
  return nll / static_cast<double>(labeled.size()) + penalty(model);
}

std::pair<double, Gradients> compute_gradients(const GcnModel& model, const NormalizedAdjacency& adj,
                                               const FeatureMatrix& x, const LabelState& state,
                                               Rng* dropout_rng) {
  const auto labeled = state.labeled();
  if (labeled.empty()) throw LabelStateError("train: labeled set is empty");
  Trace t = run_forward(model, adj, x, dropout_rng);
  const double value = loss(t.post, state, model);

  // d loss / d logits: (p - y) / |V_l| on labeled rows.
  Matrix d_logits(t.post.probs.rows(), t.post.probs.cols());
  const double inv = 1.0 / static_cast<double>(labeled.size());
  for (NodeId v : labeled) {
    const auto r = static_cast<std::size_t>(v);
    auto dst = d_logits.row(r);
    auto p = t.post.probs.row(r);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = p[k] * inv;
    dst[static_cast<std::size_t>(*state.label(v))] -= inv;
  }

  // The normalized adjacency is symmetric, so A^T g = A g.
  const Matrix d_hw = spmm(adj, d_logits);
  Gradients g;
  g.w2 = matmul_tn(t.hidden_in, d_hw);
  Matrix d_hidden = matmul_nt(d_hw, model.w2());
  // Back through dropout: dropped entries of hidden_in are zero while the
  // ReLU output was not, so recover the mask from the two.
  const double p = dropout_rng != nullptr ? model.config().dropout : 0.0;
  const double scale = p > 0.0 ? 1.0 / (1.0 - p) : 1.0;
  for (std::size_t i = 0; i < d_hidden.data().size(); ++i) {
    const bool active = t.pre_hidden.data()[i] > 0.0;
    const bool kept = p == 0.0 || t.hidden_in.data()[i] != 0.0;
    d_hidden.data()[i] = (active && kept) ? d_hidden.data()[i] * scale : 0.0;
  }
  const Matrix d_xw = spmm(adj, d_hidden);
  g.w1 = multiply_transposed(t.x_in, d_xw);

  const auto& cfg = model.config();
  for (std::size_t i = 0; i < g.w1.data().size(); ++i) g.w1.data()[i] += 2.0 * cfg.weight_decay * model.w1().data()[i];
  if (cfg.regularize_all_layers) {
    for (std::size_t i = 0; i < g.w2.data().size(); ++i) {
      g.w2.data()[i] += 2.0 * cfg.weight_decay * model.w2().data()[i];
    }
  }
  return {value, std::move(g)};
}

double train_step(GcnModel& model, const NormalizedAdjacency& adj, const FeatureMatrix& x, const LabelState& state,
                  double learning_rate) {
  auto [value, g] = compute_gradients(model, adj, x, state, &model.rng_);
  if (!std::isfinite(value)) throw TrainingDiverged("training loss is not finite");
  auto& a = model.adam_;
  ++a.step;
  adam_update(model.w1_, a.m1, a.v1, g.w1, model.config_, learning_rate, a.step);
  adam_update(model.w2_, a.m2, a.v2, g.w2, model.config_, learning_rate, a.step);
  if (!model.w1_.all_finite() || !model.w2_.all_finite()) throw TrainingDiverged("non-finite weights after update");
  return value;
}

F1Scores evaluate(const Posterior& post, std::span<const ClassId> truth, std::span<const NodeId> nodes,
                  int num_classes) {
  if (nodes.empty()) throw std::invalid_argument("evaluate: empty node set");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<double> tp(k, 0.0), fp(k, 0.0), fn(k, 0.0);
  std::size_t correct = 0;
  for (NodeId v : nodes) {
    auto row = post.probs.row(static_cast<std::size_t>(v));
    const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const auto actual = static_cast<std::size_t>(truth[static_cast<std::size_t>(v)]);
    if (pred == actual) {
      ++correct;
      tp[pred] += 1.0;
    } else {
      fp[pred] += 1.0;
      fn[actual] += 1.0;
    }
  }
  F1Scores s;
  // Single-label multi-class: pooled F1 equals accuracy.
  s.micro = static_cast<double>(correct) / static_cast<double>(nodes.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    sum += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
  }
  s.macro = sum / static_cast<double>(k);
  return s;
}

void save_checkpoint(const GcnModel& model, const std::filesystem::path& path) {
  const auto& c = model.config();
  nlohmann::json j = {
      {"format", "smartquery-gcn-v1"},
      {"in_dim", model.in_dim()},
      {"hidden", model.hidden()},
      {"num_classes", model.num_classes()},
      {"dropout", c.dropout},
      {"learning_rate", c.learning_rate},
      {"weight_decay", c.weight_decay},
      {"regularize_all_layers", c.regularize_all_layers},
      {"adam_step", model.adam().step},
      {"w1", model.w1().data()},
      {"w2", model.w2().data()},
  };
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

}  // namespace smartquery
