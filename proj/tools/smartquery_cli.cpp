// smartquery: command-line front end for active-learning experiments.
//
// Settings resolve as flag > environment (SMARTQUERY_<FLAG>) > --config file
// > built-in default.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "smartquery/centrality.hpp"
#include "smartquery/harness.hpp"
#include "smartquery/propagation.hpp"
#include "smartquery/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace smartquery;

namespace {

enum class Kind { text, number, flag };

struct Setting {
  const char* flag;  // without leading dashes
  const char* path;  // config JSON path, '.'-separated
  Kind kind;
  const char* help;
};

constexpr Setting kSettings[] = {
    {"dataset", "dataset", Kind::text, "Bundle directory or LINQS .content/.cites directory"},
    {"strategy", "strategy", Kind::text, "smartquery|random|entropy|degree|coreset|age|pool-only|lp-random-pool|lp-embed-pool"},
    {"l-init", "l_init", Kind::number, "Initial labeled nodes per class"},
    {"l-max", "l_max", Kind::number, "Maximum labeled nodes per class"},
    {"epochs", "epochs_total", Kind::number, "Total training epochs"},
    {"epochs-per-query", "epochs_per_query", Kind::number, "Training epochs between queries"},
    {"alpha", "lp.alpha", Kind::number, "Label spreading alpha"},
    {"lp-tol", "lp.tolerance", Kind::number, "Label spreading tolerance (max-abs change)"},
    {"beta", "pagerank.beta", Kind::number, "PageRank damping"},
    {"seed", "seed", Kind::number, "Base seed"},
    {"repeats", "n_repeats", Kind::number, "Repeats per validation sample"},
    {"val-samples", "n_val_samples", Kind::number, "Number of validation samples"},
    {"test-size", "test_size", Kind::number, "Test nodes"},
    {"val-size", "val_size", Kind::number, "Validation nodes"},
    {"hidden", "gcn.hidden", Kind::number, "GCN hidden width"},
    {"lr", "gcn.learning_rate", Kind::number, "Adam learning rate"},
    {"weight-decay", "gcn.weight_decay", Kind::number, "L2 coefficient"},
    {"dropout", "gcn.dropout", Kind::number, "Dropout probability"},
    {"retrain", "retrain_from_scratch", Kind::flag, "Re-initialize the model after each query"},
    {"final-epoch", "select_by_validation", Kind::flag, "Report the final epoch instead of the best validation checkpoint"},
};

std::string env_name(std::string flag) {
  for (char& c : flag) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return "SMARTQUERY_" + flag;
}

void set_path(json& j, const std::string& path, json value) {
  json* cur = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (dot == std::string::npos) {
      (*cur)[key] = std::move(value);
      return;
    }
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

json typed(const Setting& s, const std::string& raw) {
  switch (s.kind) {
    case Kind::text:
      return raw;
    case Kind::number:
      try {
        return json::parse(raw);
      } catch (const json::exception&) {
        throw std::invalid_argument(std::string("--") + s.flag + ": not a number: " + raw);
      }
    case Kind::flag: {
      const bool on = raw != "0" && raw != "false" && raw != "";
      // --final-epoch turns validation selection off.
      return std::string(s.flag) == "final-epoch" ? !on : on;
    }
  }
  return raw;
}

struct CommonOptions {
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  std::string config_file;
  std::string out_dir = "results";
  int jobs = 1;
};

void add_common(CLI::App* app, CommonOptions& o) {
  for (const auto& s : kSettings) {
    if (s.kind == Kind::flag) {
      o.switches[s.flag] = false;
      app->add_flag(std::string("--") + s.flag, o.switches[s.flag], s.help);
    } else {
      app->add_option(std::string("--") + s.flag, o.values[s.flag], s.help);
    }
  }
  app->add_option("--config", o.config_file, "JSON config file");
  app->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  app->add_option("--jobs", o.jobs, "Worker threads for independent runs")->capture_default_str();
}

ExperimentConfig resolve(CLI::App* app, const CommonOptions& o) {
  json layered = json::object();
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    if (!in) throw std::runtime_error("cannot open config " + o.config_file);
    in >> layered;
  }
  for (const auto& s : kSettings) {
    if (const char* env = std::getenv(env_name(s.flag).c_str()); env != nullptr) {
      set_path(layered, s.path, typed(s, env));
    }
  }
  for (const auto& s : kSettings) {
    const std::string name = std::string("--") + s.flag;
    if (app->count(name) == 0) continue;
    if (s.kind == Kind::flag) {
      set_path(layered, s.path, typed(s, "1"));
    } else {
      set_path(layered, s.path, typed(s, o.values.at(s.flag)));
    }
  }
  auto cfg = config_from_json(layered);
  if (cfg.dataset.empty()) throw std::invalid_argument("no dataset given (--dataset or SMARTQUERY_DATASET)");
  return cfg;
}

void print_cells(const std::vector<CellSummary>& cells) {
  std::printf("%-22s %-16s %5s %5s  %-16s %-16s\n", "label", "strategy", "l_max", "runs", "Macro-F1", "Micro-F1");
  for (const auto& c : cells) {
    std::printf("%-22s %-16s %5d %5zu  %6.2f +- %-6.2f %6.2f +- %-6.2f%s\n", c.label.c_str(),
                std::string(to_string(c.strategy)).c_str(), c.l_max, c.runs, 100 * c.macro_mean, 100 * c.macro_std,
                100 * c.micro_mean, 100 * c.micro_std, c.failures ? "  (failures)" : "");
  }
}

int run_cells(const std::vector<SuiteCell>& cells, const CommonOptions& o) {
  fs::create_directories(o.out_dir);
  std::ofstream jsonl(fs::path(o.out_dir) / "results.jsonl", std::ios::app);
  auto result = run_suite(cells, o.jobs, [&](const SuiteCell& cell, const RunResult& r) {
    json line = to_json(r);
    line["label"] = cell.label;
    line["config"] = to_json(cell.config);
    jsonl << line.dump() << '\n';
    jsonl.flush();
    std::fprintf(stderr, "[%s] v%d r%d micro=%.4f macro=%.4f %.1fs%s\n", cell.label.c_str(), r.index.val_sample,
                 r.index.repeat, r.micro_f1, r.macro_f1, r.wall_seconds, r.ok ? "" : (" FAILED: " + r.error).c_str());
  });
  write_summary_tsv(result.cells, fs::path(o.out_dir) / "summary.tsv");
  write_summary_json(result.cells, fs::path(o.out_dir) / "summary.json");
  print_cells(result.cells);
  for (const auto& c : result.cells) {
    if (c.failures) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active learning for GCN node classification"};
  app.require_subcommand(1);

  CommonOptions run_opts, suite_opts, ablation_opts, sweep_opts;
  int val_sample = 0;
  int repeat = 0;
  auto* run = app.add_subcommand("run", "Single active-learning run");
  add_common(run, run_opts);
  run->add_option("--val-index", val_sample, "Validation sample index of the run");
  run->add_option("--repeat-index", repeat, "Repeat index of the run");

  std::string strategies = "age,coreset,degree,random,entropy,smartquery";
  auto* suite = app.add_subcommand("suite", "Strategy comparison table");
  add_common(suite, suite_opts);
  suite->add_option("--strategies", strategies, "Comma-separated strategies")->capture_default_str();

  auto* ablation = app.add_subcommand("ablation", "Component ablation table");
  add_common(ablation, ablation_opts);

  std::vector<int> budgets = {2, 4, 6, 8, 10, 12};
  auto* sweep = app.add_subcommand("sweep-budget", "Performance against labels per class");
  add_common(sweep, sweep_opts);
  sweep->add_option("--budgets", budgets, "l_max values")->delimiter(',');

  std::string pool_dataset, pool_out;
  int pool_l_max = 5;
  double pool_beta = 0.85;
  auto* pool = app.add_subcommand("pool-inspect", "Per-node degree / PageRank / pool score TSV");
  pool->add_option("--dataset", pool_dataset)->required();
  pool->add_option("--l-max", pool_l_max)->capture_default_str();
  pool->add_option("--beta", pool_beta)->capture_default_str();
  pool->add_option("--out", pool_out, "TSV path (default stdout)");

  std::string lp_dataset, lp_seeds, lp_out;
  double lp_alpha = 0.9, lp_tol = 1e-6;
  auto* lp = app.add_subcommand("lp-debug", "Standalone label spreading, F dumped as TSV");
  lp->add_option("--dataset", lp_dataset)->required();
  lp->add_option("--seeds", lp_seeds, "TSV of <node> <class> lines")->required();
  lp->add_option("--alpha", lp_alpha)->capture_default_str();
  lp->add_option("--lp-tol", lp_tol)->capture_default_str();
  lp->add_option("--out", lp_out, "TSV path (default stdout)");

  std::string synth_out;
  bool synth_cora = false;
  SyntheticSpec spec;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "Write a synthetic planted-partition bundle");
  synth->add_option("--out", synth_out)->required();
  synth->add_flag("--cora-like", synth_cora, "Cora-shaped graph (2708 nodes, 7 classes, 1433 features)");
  synth->add_option("--nodes", spec.nodes)->capture_default_str();
  synth->add_option("--classes", spec.classes)->capture_default_str();
  synth->add_option("--dim", spec.feature_dim)->capture_default_str();
  synth->add_option("--avg-degree", spec.avg_degree)->capture_default_str();
  synth->add_option("--homophily", spec.homophily)->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto cfg = resolve(run, run_opts);
      auto ds = prepare(load_dataset(cfg.dataset), cfg);
      auto r = run_active_learning(ds, cfg, {val_sample, repeat});
      fs::create_directories(run_opts.out_dir);
      json line = to_json(r);
      line["config"] = to_json(cfg);
      std::ofstream(fs::path(run_opts.out_dir) / "results.jsonl", std::ios::app) << line.dump() << '\n';
      std::printf("strategy=%s micro_f1=%.4f macro_f1=%.4f queries=%zu checkpoint_epoch=%d config=%s %.2fs\n",
                  std::string(to_string(cfg.strategy)).c_str(), r.micro_f1, r.macro_f1, r.trace.size(),
                  r.checkpoint_epoch, hex64(r.config_hash).c_str(), r.wall_seconds);
      if (!r.ok) {
        std::fprintf(stderr, "run failed: %s\n", r.error.c_str());
        return 1;
      }
      return 0;
    }
    if (suite->parsed()) {
      auto cfg = resolve(suite, suite_opts);
      std::vector<Strategy> list;
      std::stringstream ss(strategies);
      for (std::string s; std::getline(ss, s, ',');) list.push_back(parse_strategy(s));
      return run_cells(comparison_cells(cfg, list), suite_opts);
    }
    if (ablation->parsed()) return run_cells(ablation_cells(resolve(ablation, ablation_opts)), ablation_opts);
    if (sweep->parsed()) return run_cells(budget_sweep_cells(resolve(sweep, sweep_opts), budgets), sweep_opts);

    if (pool->parsed()) {
      const auto ds = load_dataset(pool_dataset);
      PageRankOptions pr;
      pr.damping = pool_beta;
      const auto scores = centrality_scores(ds.graph, pr);
      const std::size_t n = ds.graph.num_nodes();
      LabelState all(n, ds.num_classes, std::vector<char>(n, 0), std::vector<char>(n, 0), 0);
      const auto cand = build_pool(scores, all, pool_l_max, ds.num_classes);
      std::vector<int> rank(n, -1);
      for (std::size_t i = 0; i < cand.members().size(); ++i) rank[static_cast<std::size_t>(cand.members()[i])] = static_cast<int>(i);

      std::ofstream file;
      if (!pool_out.empty()) file.open(pool_out);
      std::ostream& out = pool_out.empty() ? std::cout : file;
      out << "node\tdegree\tdegree_norm\tpagerank\tpagerank_norm\tpool_score\tpool_rank\n";
      char buf[160];
      for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.10g\t%.10g\t%.10g\t%.10g\t%d\n", i, ds.graph.degree(static_cast<NodeId>(i)),
                      scores.degree_norm[i], scores.pagerank[i], scores.pagerank_norm[i], scores.pool_score[i], rank[i]);
        out << buf;
      }
      if (!scores.pagerank_converged) std::fprintf(stderr, "warning: PageRank hit the iteration cap\n");
      return 0;
    }

    if (lp->parsed()) {
      const auto ds = load_dataset(lp_dataset);
      const std::size_t n = ds.graph.num_nodes();
      Matrix seed(n, static_cast<std::size_t>(ds.num_classes));
      std::ifstream in(lp_seeds);
      if (!in) throw std::runtime_error("cannot open " + lp_seeds);
      long long node;
      long long cls;
      while (in >> node >> cls) {
        if (node < 0 || static_cast<std::size_t>(node) >= n || cls < 0 || cls >= ds.num_classes) {
          throw std::runtime_error("seed line out of range: " + std::to_string(node) + " " + std::to_string(cls));
        }
        seed(static_cast<std::size_t>(node), static_cast<std::size_t>(cls)) = 1.0;
      }
      PropagationOptions opts;
      opts.alpha = lp_alpha;
      opts.tolerance = lp_tol;
      const auto res = propagate(normalize(ds.graph, NormalizationKind::plain_symmetric), seed, opts);

      std::ofstream file;
      if (!lp_out.empty()) file.open(lp_out);
      std::ostream& out = lp_out.empty() ? std::cout : file;
      char buf[32];
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < res.f.cols(); ++c) {
          std::snprintf(buf, sizeof buf, "%.17g", res.f(r, c));
          out << (c ? "\t" : "") << buf;
        }
        out << '\n';
      }
      std::fprintf(stderr, "iterations=%d converged=%d graph_uncertainty=%.10g\n", res.iterations, res.converged ? 1 : 0,
                   graph_uncertainty(lp_posterior(res.f)));
      return res.converged ? 0 : 1;
    }

    if (synth->parsed()) {
      SyntheticSpec s = synth_cora ? cora_like_spec() : spec;
      auto ds = synthetic_dataset(s, synth_seed);
      ds.name = fs::path(synth_out).filename().string();
      save_bundle(ds, synth_out);
      std::printf("wrote %s: n=%zu edges=%zu d=%zu k=%d\n", synth_out.c_str(), ds.graph.num_nodes(),
                  ds.graph.num_edges(), ds.features.dim(), ds.num_classes);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
