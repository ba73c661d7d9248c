#include "smartquery/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_set>

namespace smartquery {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

std::size_t ExperimentConfig::budget(int num_classes) const {
  return static_cast<std::size_t>(l_max - l_init) * static_cast<std::size_t>(num_classes);
}

void ExperimentConfig::validate(int num_classes) const {
  if (l_init < 1) throw std::invalid_argument("l_init must be >= 1");
  if (l_max < l_init) throw std::invalid_argument("l_max must be >= l_init");
  if (epochs_total < 1) throw std::invalid_argument("epochs_total must be >= 1");
  if (epochs_per_query < 1) throw std::invalid_argument("epochs_per_query must be >= 1");
  if (static_cast<std::size_t>(epochs_per_query) * budget(num_classes) > static_cast<std::size_t>(epochs_total)) {
    throw std::invalid_argument("epochs_per_query * budget (" + std::to_string(epochs_per_query) + " * " +
                                std::to_string(budget(num_classes)) + ") exceeds epochs_total " +
                                std::to_string(epochs_total));
  }
  if (n_val_samples < 1 || n_repeats < 1) throw std::invalid_argument("n_val_samples and n_repeats must be >= 1");
  if (!(lp.alpha > 0.0 && lp.alpha < 1.0)) throw std::invalid_argument("lp alpha must be in (0, 1)");
  if (!(pagerank.damping >= 0.0 && pagerank.damping < 1.0)) throw std::invalid_argument("beta must be in [0, 1)");
}

ExperimentConfig ExperimentConfig::with_fitted_query_spacing(int num_classes) const {
  ExperimentConfig c = *this;
  const std::size_t b = budget(num_classes);
  if (b > 0) {
    const auto fit = static_cast<int>(static_cast<std::size_t>(epochs_total) / b);
    c.epochs_per_query = std::max(1, std::min(epochs_per_query, fit));
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  j["strategy"] = std::string(to_string(c.strategy));
  j["l_init"] = c.l_init;
  j["l_max"] = c.l_max;
  j["epochs_total"] = c.epochs_total;
  j["epochs_per_query"] = c.epochs_per_query;
  j["n_val_samples"] = c.n_val_samples;
  j["n_repeats"] = c.n_repeats;
  j["test_size"] = c.test_size;
  j["val_size"] = c.val_size;
  j["seed"] = c.seed;
  j["lp"] = {{"alpha", c.lp.alpha}, {"tolerance", c.lp.tolerance}, {"max_iterations", c.lp.max_iterations}};
  j["pagerank"] = {{"beta", c.pagerank.damping},
                   {"tolerance", c.pagerank.tolerance},
                   {"max_iterations", c.pagerank.max_iterations}};
  j["gcn"] = {{"hidden", c.gcn.hidden},
              {"dropout", c.gcn.dropout},
              {"learning_rate", c.gcn.learning_rate},
              {"weight_decay", c.gcn.weight_decay},
              {"regularize_all_layers", c.gcn.regularize_all_layers}};
  j["age_basef"] = c.strategy_options.age_basef;
  j["normalize_features"] = c.normalize_features;
  j["retrain_from_scratch"] = c.retrain_from_scratch;
  j["select_by_validation"] = c.select_by_validation;
  return j;
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  take(j, "dataset", c.dataset);
  if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  take(j, "l_init", c.l_init);
  take(j, "l_max", c.l_max);
  take(j, "epochs_total", c.epochs_total);
  take(j, "epochs_per_query", c.epochs_per_query);
  take(j, "n_val_samples", c.n_val_samples);
  take(j, "n_repeats", c.n_repeats);
  take(j, "test_size", c.test_size);
  take(j, "val_size", c.val_size);
  take(j, "seed", c.seed);
  if (j.contains("lp")) {
    const auto& l = j.at("lp");
    take(l, "alpha", c.lp.alpha);
    take(l, "tolerance", c.lp.tolerance);
    take(l, "max_iterations", c.lp.max_iterations);
  }
  if (j.contains("pagerank")) {
    const auto& p = j.at("pagerank");
    take(p, "beta", c.pagerank.damping);
    take(p, "tolerance", c.pagerank.tolerance);
    take(p, "max_iterations", c.pagerank.max_iterations);
  }
  if (j.contains("gcn")) {
    const auto& g = j.at("gcn");
    take(g, "hidden", c.gcn.hidden);
    take(g, "dropout", c.gcn.dropout);
    take(g, "learning_rate", c.gcn.learning_rate);
    take(g, "weight_decay", c.gcn.weight_decay);
    take(g, "regularize_all_layers", c.gcn.regularize_all_layers);
  }
  take(j, "age_basef", c.strategy_options.age_basef);
  take(j, "normalize_features", c.normalize_features);
  take(j, "retrain_from_scratch", c.retrain_from_scratch);
  take(j, "select_by_validation", c.select_by_validation);
  return c;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  const std::string canon = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Data preparation and splits

PreparedDataset prepare(Dataset ds, const ExperimentConfig& config) {
  PreparedDataset p;
  p.features = config.normalize_features ? ds.features.row_normalized() : ds.features;
  p.gcn_adj = normalize(ds.graph, NormalizationKind::gcn_self_loop);
  p.lp_adj = normalize(ds.graph, NormalizationKind::plain_symmetric);
  p.centrality = centrality_scores(ds.graph, config.pagerank);
  p.data = std::move(ds);
  return p;
}

SplitSeeds split_seeds(std::uint64_t base, RunIndex idx) {
  const auto v = static_cast<std::uint64_t>(idx.val_sample);
  const auto r = static_cast<std::uint64_t>(idx.repeat);
  return {derive_seed(base, 0), derive_seed(base, 1000 + v), derive_seed(derive_seed(base, 2000 + v), 3 * r)};
}

std::uint64_t model_seed(std::uint64_t base, RunIndex idx) {
  return derive_seed(derive_seed(base, 2000 + static_cast<std::uint64_t>(idx.val_sample)),
                     3 * static_cast<std::uint64_t>(idx.repeat) + 1);
}

std::uint64_t strategy_seed(std::uint64_t base, RunIndex idx) {
  return derive_seed(derive_seed(base, 2000 + static_cast<std::uint64_t>(idx.val_sample)),
                     3 * static_cast<std::uint64_t>(idx.repeat) + 2);
}

Splits make_splits(std::span<const ClassId> labels, int num_classes, const ExperimentConfig& config,
                   const SplitSeeds& seeds) {
  const std::size_t n = labels.size();
  const std::size_t need = config.test_size + config.val_size +
                           static_cast<std::size_t>(config.l_init) * static_cast<std::size_t>(num_classes);
  if (n < need) {
    throw std::invalid_argument("dataset has " + std::to_string(n) + " nodes; splits need at least " +
                                std::to_string(need));
  }
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng test_rng(seeds.test);
  shuffle(std::span<NodeId>(order), test_rng);

  Splits s;
  s.test_mask.assign(n, 0);
  for (std::size_t i = 0; i < config.test_size; ++i) s.test_mask[static_cast<std::size_t>(order[i])] = 1;
  std::vector<NodeId> rest(order.begin() + static_cast<std::ptrdiff_t>(config.test_size), order.end());
  std::sort(rest.begin(), rest.end());

  constexpr int kRetries = 10;
  int short_class = 0;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    std::vector<NodeId> pick = rest;
    Rng val_rng(derive_seed(seeds.val, static_cast<std::uint64_t>(attempt)));
    shuffle(std::span<NodeId>(pick), val_rng);
    s.val_mask.assign(n, 0);
    for (std::size_t i = 0; i < config.val_size; ++i) s.val_mask[static_cast<std::size_t>(pick[i])] = 1;

    std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(num_classes));
    for (NodeId v : rest) {
      if (!s.val_mask[static_cast<std::size_t>(v)]) by_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])].push_back(v);
    }
    const auto lacking = std::find_if(by_class.begin(), by_class.end(), [&](const auto& c) {
      return c.size() < static_cast<std::size_t>(config.l_init);
    });
    if (lacking != by_class.end()) {
      short_class = static_cast<int>(lacking - by_class.begin());
      continue;
    }

    Rng init_rng(seeds.init);
    s.initial.clear();
    for (auto& members : by_class) {
      shuffle(std::span<NodeId>(members), init_rng);
      s.initial.insert(s.initial.end(), members.begin(), members.begin() + config.l_init);
    }
    return s;
  }
  throw std::runtime_error("could not find a validation split leaving " + std::to_string(config.l_init) +
                           " initial nodes for every class after " + std::to_string(kRetries) +
                           " attempts (class " + std::to_string(short_class) + " is short)");
}

// ---------------------------------------------------------------------------
// Active learning loop

json to_json(const RunResult& r) {
  json trace = json::array();
  for (const auto& q : r.trace) trace.push_back({{"node", q.node}, {"score", q.score}, {"epoch", q.epoch}});
  return {{"val_sample", r.index.val_sample},
          {"repeat", r.index.repeat},
          {"ok", r.ok},
          {"error", r.error},
          {"macro_f1", r.macro_f1},
          {"micro_f1", r.micro_f1},
          {"best_val_micro", r.best_val_micro},
          {"checkpoint_epoch", r.checkpoint_epoch},
          {"final_labeled", r.final_labeled},
          {"config_hash", hex64(r.config_hash)},
          {"wall_seconds", r.wall_seconds},
          {"trace", trace}};
}

RunResult run_active_learning(const PreparedDataset& ds, const ExperimentConfig& config, RunIndex idx) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  res.index = idx;
  res.config_hash = config_hash(config);

  const int k = ds.data.num_classes;
  config.validate(k);
  const std::size_t n = ds.data.graph.num_nodes();
  const auto splits = make_splits(ds.data.labels, k, config, split_seeds(config.seed, idx));
  for (std::size_t i = 0; i < n; ++i) {
    if (splits.test_mask[i]) res.test_nodes.push_back(static_cast<NodeId>(i));
    if (splits.val_mask[i]) res.val_nodes.push_back(static_cast<NodeId>(i));
  }

  LabelState state(n, k, splits.test_mask, splits.val_mask, config.budget(k));
  // Initial labels come from the split itself, not from the query oracle.
  for (NodeId v : splits.initial) state.add_initial(v, ds.data.labels[static_cast<std::size_t>(v)]);

  SimulatedOracle oracle(ds.data.labels);
  const auto mseed = model_seed(config.seed, idx);
  GcnModel model(ds.features.dim(), static_cast<std::size_t>(k), config.gcn, mseed);
  QuerySelector selector(config.strategy, config.l_max, strategy_seed(config.seed, idx), config.strategy_options);

  std::optional<std::pair<Matrix, Matrix>> best;
  double best_val = -1.0;
  int best_epoch = 0;

  try {
    for (int epoch = 1; epoch <= config.epochs_total; ++epoch) {
      res.train_loss.push_back(train_step(model, ds.gcn_adj, ds.features, state, config.gcn.learning_rate));

      if (state.budget_remaining() > 0) {
        if (epoch % config.epochs_per_query != 0) continue;
        const Posterior post = forward(model, ds.gcn_adj, ds.features);
        QueryContext ctx;
        ctx.graph = &ds.data.graph;
        ctx.lp_adj = &ds.lp_adj;
        ctx.posterior = &post;
        ctx.state = &state;
        ctx.centrality = &ds.centrality;
        ctx.lp = config.lp;
        const QueryScore pick = selector.select(ctx, epoch);
        if (!std::isfinite(pick.value)) throw std::runtime_error("non-finite query score");
        state.add_queried(pick.node, oracle.reveal(pick.node));
        res.trace.push_back({pick.node, pick.value, epoch});
        if (config.retrain_from_scratch) model = GcnModel(ds.features.dim(), static_cast<std::size_t>(k), config.gcn, mseed);
        continue;
      }

      if (config.select_by_validation) {
        const Posterior post = forward(model, ds.gcn_adj, ds.features);
        const double val = evaluate(post, ds.data.labels, res.val_nodes, k).micro;
        if (val > best_val) {
          best_val = val;
          best_epoch = epoch;
          best.emplace(model.w1(), model.w2());
        }
      }
    }

    GcnModel final_model = model;
    if (best) {
      final_model.w1() = best->first;
      final_model.w2() = best->second;
      res.checkpoint_epoch = best_epoch;
      res.best_val_micro = best_val;
    } else {
      res.checkpoint_epoch = config.epochs_total;
      res.best_val_micro = evaluate(forward(model, ds.gcn_adj, ds.features), ds.data.labels, res.val_nodes, k).micro;
    }
    const Posterior post = forward(final_model, ds.gcn_adj, ds.features);
    const auto f1 = evaluate(post, ds.data.labels, res.test_nodes, k);
    res.macro_f1 = f1.macro;
    res.micro_f1 = f1.micro;
  } catch (const TrainingDiverged& e) {
    res.ok = false;
    res.error = std::string("training diverged: ") + e.what();
  }

  res.final_labeled = state.labeled().size();
  res.oracle_requests = oracle.requests();
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

bool leak_free(const RunResult& r) {
  std::unordered_set<NodeId> held_out(r.test_nodes.begin(), r.test_nodes.end());
  held_out.insert(r.val_nodes.begin(), r.val_nodes.end());
  std::unordered_set<NodeId> traced;
  for (const auto& q : r.trace) {
    if (held_out.count(q.node)) return false;
    traced.insert(q.node);
  }
  for (NodeId v : r.oracle_requests) {
    if (held_out.count(v) || !traced.count(v)) return false;
  }
  return r.oracle_requests.size() == r.trace.size();
}

// ---------------------------------------------------------------------------
// Suites

CellSummary summarize(const std::string& label, const ExperimentConfig& config, const std::vector<RunResult>& runs) {
  CellSummary s;
  s.dataset = config.dataset;
  s.label = label;
  s.strategy = config.strategy;
  s.l_max = config.l_max;
  std::vector<double> ma, mi;
  for (const auto& r : runs) {
    if (!r.ok) {
      ++s.failures;
      continue;
    }
    ma.push_back(r.macro_f1);
    mi.push_back(r.micro_f1);
  }
  s.runs = ma.size();
  auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
    if (v.empty()) return;
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size()));
  };
  stats(ma, s.macro_mean, s.macro_std);
  stats(mi, s.micro_mean, s.micro_std);
  return s;
}

SuiteResult run_suite(const std::vector<SuiteCell>& cells, int jobs,
                      const std::function<void(const SuiteCell&, const RunResult&)>& on_run) {
  // Prepare each distinct dataset/preprocessing combination once.
  std::map<std::string, PreparedDataset> prepared;
  std::vector<const PreparedDataset*> cell_data;
  std::vector<SuiteCell> fitted = cells;
  for (auto& cell : fitted) {
    const auto& c = cell.config;
    const std::string key = c.dataset + "|" + std::to_string(c.normalize_features) + "|" +
                            to_json(c).at("pagerank").dump();
    auto it = prepared.find(key);
    if (it == prepared.end()) it = prepared.emplace(key, prepare(load_dataset(c.dataset), c)).first;
    cell_data.push_back(&it->second);
    if (cell.fit_query_spacing) cell.config = cell.config.with_fitted_query_spacing(it->second.data.num_classes);
    if (cell.label.empty()) cell.label = std::string(to_string(cell.config.strategy));
  }

  struct Job {
    std::size_t cell;
    RunIndex idx;
  };
  std::vector<Job> work;
  SuiteResult out;
  out.runs.resize(fitted.size());
  for (std::size_t c = 0; c < fitted.size(); ++c) {
    const auto& cfg = fitted[c].config;
    for (int v = 0; v < cfg.n_val_samples; ++v) {
      for (int r = 0; r < cfg.n_repeats; ++r) work.push_back({c, {v, r}});
    }
    out.runs[c].resize(static_cast<std::size_t>(cfg.n_val_samples * cfg.n_repeats));
  }

  std::vector<RunResult*> slot(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    const auto& cfg = fitted[work[i].cell].config;
    slot[i] = &out.runs[work[i].cell][static_cast<std::size_t>(work[i].idx.val_sample * cfg.n_repeats + work[i].idx.repeat)];
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<char> done(work.size(), 0);
  std::size_t flushed = 0;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= work.size()) return;
      const auto& job = work[i];
      RunResult r;
      try {
        r = run_active_learning(*cell_data[job.cell], fitted[job.cell].config, job.idx);
      } catch (const std::exception& e) {
        r.index = job.idx;
        r.ok = false;
        r.error = e.what();
        r.config_hash = config_hash(fitted[job.cell].config);
      }
      std::lock_guard lock(mu);
      *slot[i] = std::move(r);
      done[i] = 1;
      // Report in run-index order regardless of completion order.
      while (flushed < work.size() && done[flushed]) {
        if (on_run) on_run(fitted[work[flushed].cell], *slot[flushed]);
        ++flushed;
      }
    }
  };
  const int threads = std::max(1, jobs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t c = 0; c < fitted.size(); ++c) {
    out.cells.push_back(summarize(fitted[c].label, fitted[c].config, out.runs[c]));
  }
  return out;
}

std::vector<SuiteCell> comparison_cells(const ExperimentConfig& base, const std::vector<Strategy>& strategies) {
  std::vector<SuiteCell> cells;
  for (Strategy s : strategies) {
    SuiteCell c{std::string(to_string(s)), base, false};
    c.config.strategy = s;
    cells.push_back(std::move(c));
  }
  return cells;
}

std::vector<SuiteCell> ablation_cells(const ExperimentConfig& base) {
  const std::pair<const char*, Strategy> rows[] = {
      {"GCN", Strategy::random},
      {"GCN+Pool", Strategy::pool_only},
      {"GCN+LP", Strategy::lp_random_pool},
      {"GCN+embedding+LP", Strategy::lp_embed_pool},
      {"GCN+Pool+LP", Strategy::smartquery},
  };
  std::vector<SuiteCell> cells;
  for (auto [label, s] : rows) {
    SuiteCell c{label, base, false};
    c.config.strategy = s;
    cells.push_back(std::move(c));
  }
  return cells;
}

std::vector<SuiteCell> budget_sweep_cells(const ExperimentConfig& base, const std::vector<int>& l_max_values) {
  std::vector<SuiteCell> cells;
  for (int l : l_max_values) {
    SuiteCell c{std::string(to_string(base.strategy)) + "@l_max=" + std::to_string(l), base, true};
    c.config.l_max = l;
    cells.push_back(std::move(c));
  }
  return cells;
}

void write_summary_tsv(const std::vector<CellSummary>& cells, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "dataset\tlabel\tstrategy\tl_max\truns\tfailures\tmacro_f1_mean\tmacro_f1_std\tmicro_f1_mean\tmicro_f1_std\n";
  char buf[256];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%.4f\t%.4f\t%.4f\t%.4f", 100.0 * c.macro_mean, 100.0 * c.macro_std,
                  100.0 * c.micro_mean, 100.0 * c.micro_std);
    out << c.dataset << '\t' << c.label << '\t' << to_string(c.strategy) << '\t' << c.l_max << '\t' << c.runs << '\t'
        << c.failures << '\t' << buf << '\n';
  }
}

void write_summary_json(const std::vector<CellSummary>& cells, const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& c : cells) {
    arr.push_back({{"dataset", c.dataset},
                   {"label", c.label},
                   {"strategy", std::string(to_string(c.strategy))},
                   {"l_max", c.l_max},
                   {"runs", c.runs},
                   {"failures", c.failures},
                   {"macro_f1_mean", c.macro_mean},
                   {"macro_f1_std", c.macro_std},
                   {"micro_f1_mean", c.micro_mean},
                   {"micro_f1_std", c.micro_std}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << arr.dump(2) << '\n';
}

}  // namespace smartquery
