#include "smartquery/label_state.hpp"

#include <algorithm>
#include <string>

namespace smartquery {

LabelState::LabelState(std::size_t n, int num_classes, std::vector<char> test_mask, std::vector<char> val_mask,
                       std::size_t budget)
    : num_classes_(num_classes),
      labels_(n),
      test_mask_(std::move(test_mask)),
      val_mask_(std::move(val_mask)),
      budget_total_(budget) {
  if (test_mask_.size() != n || val_mask_.size() != n) throw LabelStateError("mask size differs from node count");
  for (std::size_t i = 0; i < n; ++i) {
    if (test_mask_[i] && val_mask_[i]) {
      throw LabelStateError("node " + std::to_string(i) + " is in both test and validation masks");
    }
    if (!test_mask_[i] && !val_mask_[i]) unlabeled_.push_back(static_cast<NodeId>(i));
  }
}

void LabelState::move_to_labeled(NodeId v, ClassId c) {
  if (v < 0 || static_cast<std::size_t>(v) >= labels_.size()) throw LabelStateError("node id out of range");
  if (c < 0 || c >= num_classes_) throw LabelStateError("class id out of range");
  auto it = std::lower_bound(unlabeled_.begin(), unlabeled_.end(), v);
  if (it == unlabeled_.end() || *it != v) {
    throw LabelStateError("node " + std::to_string(v) + " is not in the unlabeled set");
  }
  unlabeled_.erase(it);
  labels_[static_cast<std::size_t>(v)] = c;
  labeled_.push_back(v);
}

void LabelState::add_initial(NodeId v, ClassId c) {
  if (!queried_.empty()) throw LabelStateError("initial labels must precede queries");
  move_to_labeled(v, c);
}

void LabelState::add_queried(NodeId v, ClassId c) {
  if (budget_remaining() == 0) throw LabelStateError("labeling budget exhausted");
  move_to_labeled(v, c);
  queried_.push_back(v);
}

ClassId SimulatedOracle::reveal(NodeId v) {
  requests_.push_back(v);
  return truth_[static_cast<std::size_t>(v)];
}

}  // namespace smartquery
