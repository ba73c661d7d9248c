#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>

#include "smartquery/dense.hpp"
#include "smartquery/graph.hpp"
#include "smartquery/label_state.hpp"
#include "smartquery/random.hpp"

namespace smartquery {

struct GcnConfig {
  std::size_t hidden{16};
  double dropout{0.5};
  double learning_rate{0.01};
  double weight_decay{5e-4};
  // When false only the first layer's weights are penalized.
  bool regularize_all_layers{false};
  double adam_beta1{0.9};
  double adam_beta2{0.999};
  double adam_epsilon{1e-8};
};

struct AdamState {
  Matrix m1, v1, m2, v2;
  std::int64_t step{0};
};

// Two-layer GCN without biases: softmax(A relu(A X W1) W2).
class GcnModel {
public:
  GcnModel() = default;
  // Glorot-uniform weights drawn from `seed`; the same seed also drives dropout.
  GcnModel(std::size_t in_dim, std::size_t num_classes, const GcnConfig& config, std::uint64_t seed);

  const GcnConfig& config() const noexcept { return config_; }
  std::size_t in_dim() const noexcept { return w1_.rows(); }
  std::size_t hidden() const noexcept { return w1_.cols(); }
  std::size_t num_classes() const noexcept { return w2_.cols(); }

  Matrix& w1() noexcept { return w1_; }
  Matrix& w2() noexcept { return w2_; }
  const Matrix& w1() const noexcept { return w1_; }
  const Matrix& w2() const noexcept { return w2_; }
  const AdamState& adam() const noexcept { return adam_; }
  Rng& dropout_rng() noexcept { return rng_; }

private:
  friend double train_step(GcnModel&, const NormalizedAdjacency&, const FeatureMatrix&, const LabelState&, double);

  GcnConfig config_;
  Matrix w1_;
  Matrix w2_;
  AdamState adam_;
  Rng rng_;
};

struct Posterior {
  Matrix probs;   // n x K, rows on the simplex
  Matrix logits;  // n x K
  Matrix hidden;  // n x h, post-ReLU layer-1 output
};

struct Gradients {
  Matrix w1;
  Matrix w2;
};

class TrainingDiverged : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Inference pass, no dropout. Read-only on the model.
Posterior forward(const GcnModel& model, const NormalizedAdjacency& adj, const FeatureMatrix& x);
// With train_mode, dropout masks are drawn from the model's generator.
Posterior forward(GcnModel& model, const NormalizedAdjacency& adj, const FeatureMatrix& x, bool train_mode);

// Mean negative log-likelihood over the labeled nodes plus the L2 penalty.
double loss(const Posterior& post, const LabelState& state, const GcnModel& model);

// Loss and analytic gradients. A null generator disables dropout.
std::pair<double, Gradients> compute_gradients(const GcnModel& model, const NormalizedAdjacency& adj,
                                               const FeatureMatrix& x, const LabelState& state,
                                               Rng* dropout_rng);

// One full-batch Adam step with dropout on; returns the pre-update loss.
// Throws TrainingDiverged on a non-finite loss.
double train_step(GcnModel& model, const NormalizedAdjacency& adj, const FeatureMatrix& x, const LabelState& state,
                  double learning_rate);

struct F1Scores {
  double macro{0.0};
  double micro{0.0};
};

// Argmax predictions over `nodes` against ground truth. Classes with no
// support and no predictions count as F1 = 0 in the macro average.
F1Scores evaluate(const Posterior& post, std::span<const ClassId> truth, std::span<const NodeId> nodes,
                  int num_classes);

// Debug checkpoint: JSON with hyperparameters and flat weights.
void save_checkpoint(const GcnModel& model, const std::filesystem::path& path);

}  // namespace smartquery
