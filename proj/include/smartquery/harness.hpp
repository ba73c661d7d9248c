#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smartquery/centrality.hpp"
#include "smartquery/gcn.hpp"
#include "smartquery/graph.hpp"
#include "smartquery/propagation.hpp"
#include "smartquery/strategies.hpp"

namespace smartquery {

struct ExperimentConfig {
  std::string dataset;
  Strategy strategy{Strategy::smartquery};
  int l_init{1};
  int l_max{5};
  int epochs_total{300};
  int epochs_per_query{5};
  int n_val_samples{10};
  int n_repeats{20};
  std::size_t test_size{1000};
  std::size_t val_size{500};
  std::uint64_t seed{0};
  PropagationOptions lp{};
  PageRankOptions pagerank{};
  GcnConfig gcn{};
  StrategyOptions strategy_options{};
  bool normalize_features{true};
  // Re-initialize the model after every query instead of continuing.
  bool retrain_from_scratch{false};
  // Report the checkpoint with the best validation micro-F1 (searched over
  // epochs after the last query); otherwise the final epoch.
  bool select_by_validation{true};

  std::size_t budget(int num_classes) const;
  // Throws std::invalid_argument naming the first violated constraint.
  void validate(int num_classes) const;
  // Largest spacing <= epochs_per_query that fits the budget in epochs_total.
  ExperimentConfig with_fitted_query_spacing(int num_classes) const;
};

nlohmann::json to_json(const ExperimentConfig& c);
// Fields absent from `j` keep their values in `base`.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
// FNV-1a 64 over the canonical (key-sorted, compact) JSON of the config.
std::uint64_t config_hash(const ExperimentConfig& c);
std::string hex64(std::uint64_t v);

// Dataset with everything derived from structure alone, shared by all runs.
struct PreparedDataset {
  Dataset data;
  FeatureMatrix features;  // row-normalized when configured
  NormalizedAdjacency gcn_adj;
  NormalizedAdjacency lp_adj;
  CentralityScores centrality;
};

PreparedDataset prepare(Dataset ds, const ExperimentConfig& config);

struct Splits {
  std::vector<char> test_mask;
  std::vector<char> val_mask;
  std::vector<NodeId> initial;  // l_init per class, class-major order
};

struct SplitSeeds {
  std::uint64_t test;
  std::uint64_t val;
  std::uint64_t init;
};

// Test nodes, then validation nodes from the rest, then l_init labeled nodes
// per class from what remains. Validation is redrawn (up to 10 tries) when a
// class has too few nodes left for initialization.
Splits make_splits(std::span<const ClassId> labels, int num_classes, const ExperimentConfig& config,
                   const SplitSeeds& seeds);

struct RunIndex {
  int val_sample{0};
  int repeat{0};
};

// Test split depends on the base seed only; validation on the validation
// sample; initial labels, model and strategy on both. Strategies share seeds,
// so runs with the same index are paired.
SplitSeeds split_seeds(std::uint64_t base, RunIndex idx);
std::uint64_t model_seed(std::uint64_t base, RunIndex idx);
std::uint64_t strategy_seed(std::uint64_t base, RunIndex idx);

struct QueryRecord {
  NodeId node{-1};
  double score{0.0};
  int epoch{0};
};

struct RunResult {
  RunIndex index;
  bool ok{true};
  std::string error;
  double macro_f1{0.0};
  double micro_f1{0.0};
  double best_val_micro{0.0};
  int checkpoint_epoch{0};
  std::vector<QueryRecord> trace;
  std::uint64_t config_hash{0};
  double wall_seconds{0.0};
  std::size_t final_labeled{0};
  std::vector<double> train_loss;  // per epoch
  // Audit data, not serialized in full.
  std::vector<NodeId> oracle_requests;
  std::vector<NodeId> test_nodes;
  std::vector<NodeId> val_nodes;
};

nlohmann::json to_json(const RunResult& r);

RunResult run_active_learning(const PreparedDataset& ds, const ExperimentConfig& config, RunIndex idx = {});

// Trace and oracle log are disjoint from test and validation nodes, and the
// oracle was only asked about traced nodes.
bool leak_free(const RunResult& r);

struct CellSummary {
  std::string dataset;
  std::string label;
  Strategy strategy{Strategy::smartquery};
  int l_max{0};
  std::size_t runs{0};
  std::size_t failures{0};
  double macro_mean{0.0}, macro_std{0.0};
  double micro_mean{0.0}, micro_std{0.0};
};

struct SuiteCell {
  std::string label;  // row name; defaults to the strategy name
  ExperimentConfig config;
  // Shrink epochs_per_query once K is known so the budget fits.
  bool fit_query_spacing{false};
};

struct SuiteResult {
  std::vector<CellSummary> cells;
  std::vector<std::vector<RunResult>> runs;  // per cell, ordered by run index
};

// Mean and population standard deviation over successful runs.
CellSummary summarize(const std::string& label, const ExperimentConfig& config, const std::vector<RunResult>& runs);

// n_val_samples x n_repeats runs per cell. Runs are spread over `jobs`
// threads and merged by index. Datasets are loaded once per path.
SuiteResult run_suite(const std::vector<SuiteCell>& cells, int jobs = 1,
                      const std::function<void(const SuiteCell&, const RunResult&)>& on_run = {});

// Row sets for the standard tables.
std::vector<SuiteCell> comparison_cells(const ExperimentConfig& base, const std::vector<Strategy>& strategies);
std::vector<SuiteCell> ablation_cells(const ExperimentConfig& base);
std::vector<SuiteCell> budget_sweep_cells(const ExperimentConfig& base, const std::vector<int>& l_max_values);

void write_summary_tsv(const std::vector<CellSummary>& cells, const std::filesystem::path& path);
void write_summary_json(const std::vector<CellSummary>& cells, const std::filesystem::path& path);

}  // namespace smartquery
