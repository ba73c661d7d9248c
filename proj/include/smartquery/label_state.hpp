#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "smartquery/graph.hpp"

namespace smartquery {

// Labeled / unlabeled partition of the non-test, non-validation nodes.
// Only labels revealed through reveal() are visible here.
class LabelState {
public:
  LabelState() = default;
  LabelState(std::size_t n, int num_classes, std::vector<char> test_mask, std::vector<char> val_mask,
             std::size_t budget);

  std::size_t num_nodes() const noexcept { return labels_.size(); }
  int num_classes() const noexcept { return num_classes_; }

  std::span<const NodeId> labeled() const noexcept { return labeled_; }
  // Sorted ascending.
  std::span<const NodeId> unlabeled() const noexcept { return unlabeled_; }
  std::span<const NodeId> queried() const noexcept { return queried_; }

  std::optional<ClassId> label(NodeId v) const { return labels_[static_cast<std::size_t>(v)]; }
  bool is_labeled(NodeId v) const { return labels_[static_cast<std::size_t>(v)].has_value(); }
  bool is_test(NodeId v) const { return test_mask_[static_cast<std::size_t>(v)] != 0; }
  bool is_val(NodeId v) const { return val_mask_[static_cast<std::size_t>(v)] != 0; }
  bool is_unlabeled(NodeId v) const { return !is_labeled(v) && !is_test(v) && !is_val(v); }

  const std::vector<char>& test_mask() const noexcept { return test_mask_; }
  const std::vector<char>& val_mask() const noexcept { return val_mask_; }

  std::size_t budget_total() const noexcept { return budget_total_; }
  std::size_t budget_remaining() const noexcept { return budget_total_ - queried_.size(); }

  // Initial labels do not consume budget.
  void add_initial(NodeId v, ClassId c);
  // Labels a queried node; consumes one unit of budget.
  void add_queried(NodeId v, ClassId c);

private:
  void move_to_labeled(NodeId v, ClassId c);

  int num_classes_{0};
  std::vector<std::optional<ClassId>> labels_;
  std::vector<NodeId> labeled_;
  std::vector<NodeId> unlabeled_;
  std::vector<NodeId> queried_;
  std::vector<char> test_mask_;
  std::vector<char> val_mask_;
  std::size_t budget_total_{0};
};

class LabelStateError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// Source of ground-truth labels for queried nodes.
class LabelOracle {
public:
  virtual ~LabelOracle() = default;
  virtual ClassId reveal(NodeId v) = 0;
};

// Answers from stored ground truth and records every request.
class SimulatedOracle final : public LabelOracle {
public:
  explicit SimulatedOracle(std::span<const ClassId> truth) : truth_(truth) {}
  ClassId reveal(NodeId v) override;
  const std::vector<NodeId>& requests() const noexcept { return requests_; }

private:
  std::span<const ClassId> truth_;
  std::vector<NodeId> requests_;
};

}  // namespace smartquery
