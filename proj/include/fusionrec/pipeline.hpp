#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fusionrec/checkpoint.hpp"
#include "fusionrec/config.hpp"
#include "fusionrec/evaluator.hpp"

namespace fusionrec {

namespace fs = std::filesystem;

// Output directory layout:
//
//   <out>/.lock                          held while a command runs
//   <out>/dataset/{nodes,interactions,social,id_map}.csv
//   <out>/dataset/{train,val,test}.csv   the chronological split
//   <out>/dataset/manifest.json          content hashes, split hashes, creation time
//   <out>/checkpoints/<variant>_seed<N>.ckpt
//   <out>/logs/train_<variant>_seed<N>.log
//   <out>/reports/<name>.json, <name>_plot.csv, summary.md

inline constexpr const char* kReportSchema = "fusionrec.report/1";
inline constexpr const char* kManifestSchema = "fusionrec.manifest/1";

struct OutputPaths {
  fs::path root;
  fs::path dataset() const { return root / "dataset"; }
  fs::path manifest() const { return dataset() / "manifest.json"; }
  fs::path checkpoints() const { return root / "checkpoints"; }
  fs::path logs() const { return root / "logs"; }
  fs::path reports() const { return root / "reports"; }
  fs::path lock() const { return root / ".lock"; }
  fs::path checkpoint(Variant v, std::uint64_t seed) const {
    return checkpoints() / (std::string(to_string(v)) + "_seed" + std::to_string(seed) + ".ckpt");
  }
  fs::path train_log(Variant v, std::uint64_t seed) const {
    return logs() / ("train_" + std::string(to_string(v)) + "_seed" + std::to_string(seed) + ".log");
  }
};

/// One command per output directory at a time. The lock file is created exclusively and
/// removed on scope exit.
class OutputLock {
 public:
  explicit OutputLock(const OutputPaths& paths) : path_(paths.lock()) {
    fs::create_directories(paths.root);
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f)
      fail_usage("output directory '" + paths.root.string() + "' is locked by another command; remove '" +
                 path_.string() + "' if no command is running");
    std::fclose(f);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

// ---------------------------------------------------------------------------
// Canonical dataset files

namespace detail {

inline std::string nodes_csv(const Dataset& ds) {
  std::string out = "node_id,kind,pseudo_target,text\n";
  for (std::size_t i = 0; i < ds.nodes.size(); ++i) {
    const auto& n = ds.nodes[i];
    out += ds.external_ids[i] + "," + to_string(n.kind) + "," +
           (n.pseudo_target ? std::to_string(*n.pseudo_target) : std::string()) + "," + csv::quote(n.text) + "\n";
  }
  return out;
}

inline std::string interactions_csv(const std::vector<Interaction>& xs, const std::vector<std::string>& ext) {
  std::string out = "user_id,item_id,label,timestamp\n";
  for (const auto& x : xs)
    out += ext[x.user] + "," + ext[x.item] + "," + format_double(x.label) + "," + std::to_string(x.timestamp) + "\n";
  return out;
}

inline std::string social_csv(const Dataset& ds) {
  std::string out = "user_a,user_b\n";
  for (const auto& e : ds.social) out += ds.external_ids[e.a] + "," + ds.external_ids[e.b] + "\n";
  return out;
}

inline std::string id_map_csv(const Dataset& ds) {
  std::string out = "external_id,dense_id\n";
  for (std::size_t i = 0; i < ds.external_ids.size(); ++i) out += ds.external_ids[i] + "," + std::to_string(i) + "\n";
  return out;
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

/// Hash of a partition's records in order, on external ids.
inline std::string split_hash(const std::vector<Interaction>& xs, const std::vector<std::string>& ext) {
  return hex64(fnv1a64(detail::interactions_csv(xs, ext)));
}

/// Reads the configured input: the synthetic generator or the CSV files.
inline Dataset load_input(const RunConfig& cfg) {
  if (cfg.synthetic) return generate_synthetic(cfg.synth).data;
  if (cfg.interactions_file.empty() || cfg.nodes_file.empty())
    fail_usage("interactions_file and nodes_file must be set (or use --synthetic)");
  for (const auto* p : {&cfg.interactions_file, &cfg.nodes_file})
    if (!fs::exists(*p)) fail_data("input file '" + *p + "' does not exist");
  std::optional<std::string> social;
  if (!cfg.social_file.empty()) {
    if (!fs::exists(cfg.social_file)) fail_data("input file '" + cfg.social_file + "' does not exist");
    social = cfg.social_file;
  }
  return ingest(cfg.interactions_file, cfg.nodes_file, social);
}

/// ingest: reads (or generates) the data, splits it chronologically, builds the train graph and
/// writes the canonical dataset plus a manifest of content and split hashes.
inline void cmd_ingest(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const OutputPaths paths{cfg.out_dir};
  OutputLock lock(paths);
  const Dataset ds = load_input(cfg);
  const DatasetSplit split = chronological_split(ds.interactions, cfg.ratios);
  const InteractionGraph graph = build_graph(ds.nodes, split.train, ds.social);

  const std::vector<std::pair<std::string, std::string>> files{
      {"nodes.csv", detail::nodes_csv(ds)},
      {"interactions.csv", detail::interactions_csv(ds.interactions, ds.external_ids)},
      {"social.csv", detail::social_csv(ds)},
      {"id_map.csv", detail::id_map_csv(ds)},
      {"train.csv", detail::interactions_csv(split.train, ds.external_ids)},
      {"val.csv", detail::interactions_csv(split.val, ds.external_ids)},
      {"test.csv", detail::interactions_csv(split.test, ds.external_ids)}};

  nlohmann::ordered_json m;
  m["schema"] = kManifestSchema;
  m["created_at"] = detail::utc_now();
  m["source"] = cfg.synthetic ? "synthetic" : "files";
  m["config_hash"] = config_hash(cfg);
  for (const auto& [name, content] : files) {
    write_file_atomic(paths.dataset() / name, content);
    m["files"][name] = hex64(fnv1a64(content));
  }
  auto part = [&](const std::vector<Interaction>& xs) {
    return nlohmann::ordered_json{{"count", xs.size()}, {"hash", split_hash(xs, ds.external_ids)}};
  };
  m["splits"]["train"] = part(split.train);
  m["splits"]["val"] = part(split.val);
  m["splits"]["test"] = part(split.test);
  m["splits"]["train_end"] = split.train_end;
  m["splits"]["val_end"] = split.val_end;
  m["graph"] = {{"nodes", graph.num_nodes()}, {"users", graph.users().size()}, {"items", graph.items().size()},
                {"train_edges", split.train.size()}, {"social_edges", ds.social.size()}};
  write_file_atomic(paths.manifest(), detail::json_text(m));
  log << "ingested " << ds.nodes.size() << " nodes, " << ds.interactions.size() << " interactions ("
      << split.train.size() << " train / " << split.val.size() << " val / " << split.test.size() << " test) into "
      << paths.dataset().string() << "\n";
}

/// The ingested dataset, re-read from the canonical files and checked against the manifest.
struct LoadedData {
  Dataset dataset;
  PreparedData prepared;
};

inline LoadedData load_dataset(const RunConfig& cfg) {
  const OutputPaths paths{cfg.out_dir};
  if (!fs::exists(paths.manifest()))
    fail_data("no ingested dataset in '" + paths.root.string() + "' (missing '" + paths.manifest().string() +
              "'); run the ingest command first");
  const auto manifest = nlohmann::json::parse(read_file(paths.manifest()), nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("files") || !manifest.contains("splits"))
    fail_data("manifest '" + paths.manifest().string() + "' is unreadable");
  for (const char* name : {"nodes.csv", "interactions.csv", "social.csv"}) {
    const std::string want = manifest["files"].value(name, "");
    if (hex64(fnv1a64(read_file(paths.dataset() / name))) != want)
      fail_data("dataset file '" + (paths.dataset() / name).string() + "' does not match its manifest hash");
  }
  LoadedData out;
  out.dataset = ingest((paths.dataset() / "interactions.csv").string(), (paths.dataset() / "nodes.csv").string(),
                       (paths.dataset() / "social.csv").string());
  std::map<std::string, EmbeddingVector> vectors;
  if (!cfg.vectors_file.empty()) vectors = load_precomputed(cfg.vectors_file, cfg.train.embed_dim);
  out.prepared = prepare(out.dataset, cfg.ratios, cfg.train.embed_dim, cfg.train.text_seed,
                         cfg.vectors_file.empty() ? nullptr : &vectors);
  const auto& split = out.prepared.split;
  const auto& ext = out.dataset.external_ids;
  const std::pair<const char*, const std::vector<Interaction>*> parts[] = {
      {"train", &split.train}, {"val", &split.val}, {"test", &split.test}};
  for (const auto& [name, xs] : parts)
    if (manifest["splits"][name].value("hash", "") != split_hash(*xs, ext))
      fail_data(std::string("the ") + name +
                " split differs from the manifest (were the ratios changed after ingest?)");
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::ordered_json metrics_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["hit_rate_at_k"] = m.hit_rate_at_k;
  j["precision_at_k"] = m.precision_at_k;
  j["recall_at_k"] = m.recall_at_k;
  j["ndcg_at_k"] = m.ndcg_at_k;
  j["mrr"] = m.mrr;
  j["gini"] = m.gini ? nlohmann::ordered_json(*m.gini) : nlohmann::ordered_json(nullptr);
  j["k"] = m.k;
  j["n_users_evaluated"] = m.n_users_evaluated;
  return j;
}

struct ModelRuns {
  std::string name;
  std::vector<std::pair<std::uint64_t, MetricsReport>> runs;
};

inline std::vector<ModelRuns> group_runs(const ComparisonTable& t) {
  std::vector<ModelRuns> out;
  for (const auto& r : t.runs) {
    if (out.empty() || out.back().name != r.model) out.push_back({r.model, {}});
    out.back().runs.emplace_back(r.seed, r.test);
  }
  return out;
}

/// Report JSON: command, config hash and echo, seeds, k, and per model the per-seed metrics
/// with their mean and sample standard deviation.
inline nlohmann::ordered_json report_json(const std::string& command, const RunConfig& cfg,
                                          const std::vector<ModelRuns>& models) {
  nlohmann::ordered_json j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  j["config_hash"] = config_hash(cfg);
  j["seeds"] = cfg.seeds;
  j["k"] = cfg.k;
  j["models"] = nlohmann::ordered_json::array();
  for (const auto& m : models) {
    nlohmann::ordered_json mj;
    mj["name"] = m.name;
    std::vector<MetricsReport> reports;
    mj["runs"] = nlohmann::ordered_json::array();
    for (const auto& [seed, rep] : m.runs) {
      mj["runs"].push_back({{"seed", seed}, {"metrics", metrics_json(rep)}});
      reports.push_back(rep);
    }
    const Aggregate a = aggregate(reports);
    mj["mean"] = metrics_json(a.mean);
    mj["stddev"] = metrics_json(a.stddev);
    j["models"].push_back(std::move(mj));
  }
  j["config"] = config_map(cfg);
  return j;
}

/// Problems with a report against the documented schema; empty when valid.
inline std::vector<std::string> validate_report(const nlohmann::json& j) {
  std::vector<std::string> errs;
  auto need = [&](const nlohmann::json& obj, const char* key, auto pred, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key) || !pred(obj[key])) {
      errs.push_back(where + "." + key + " missing or mistyped");
      return false;
    }
    return true;
  };
  auto is_num = [](const nlohmann::json& v) { return v.is_number(); };
  auto is_uint = [](const nlohmann::json& v) { return v.is_number_unsigned(); };
  auto is_str = [](const nlohmann::json& v) { return v.is_string(); };
  auto is_arr = [](const nlohmann::json& v) { return v.is_array(); };
  auto is_obj = [](const nlohmann::json& v) { return v.is_object(); };
  auto check_metrics = [&](const nlohmann::json& m, const std::string& where) {
    if (!m.is_object()) {
      errs.push_back(where + " is not an object");
      return;
    }
    for (const char* key : {"hit_rate_at_k", "precision_at_k", "recall_at_k", "ndcg_at_k", "mrr"})
      need(m, key, is_num, where);
    need(m, "gini", [](const nlohmann::json& v) { return v.is_null() || v.is_number(); }, where);
    need(m, "k", is_uint, where);
    need(m, "n_users_evaluated", is_uint, where);
  };
  if (need(j, "schema", is_str, "report") && j["schema"] != kReportSchema) errs.push_back("report.schema has wrong value");
  need(j, "command", is_str, "report");
  need(j, "config_hash", is_str, "report");
  need(j, "config", is_obj, "report");
  need(j, "k", is_uint, "report");
  if (need(j, "seeds", is_arr, "report"))
    for (const auto& s : j["seeds"])
      if (!s.is_number_unsigned()) errs.push_back("report.seeds holds a non-integer");
  if (need(j, "models", is_arr, "report")) {
    for (std::size_t i = 0; i < j["models"].size(); ++i) {
      const auto& m = j["models"][i];
      const std::string w = "report.models[" + std::to_string(i) + "]";
      need(m, "name", is_str, w);
      if (need(m, "runs", is_arr, w))
        for (std::size_t r = 0; r < m["runs"].size(); ++r) {
          const auto& run = m["runs"][r];
          const std::string rw = w + ".runs[" + std::to_string(r) + "]";
          need(run, "seed", is_uint, rw);
          if (need(run, "metrics", is_obj, rw)) check_metrics(run["metrics"], rw + ".metrics");
        }
      if (need(m, "mean", is_obj, w)) check_metrics(m["mean"], w + ".mean");
      if (need(m, "stddev", is_obj, w)) check_metrics(m["stddev"], w + ".stddev");
    }
  }
  return errs;
}

/// Plot-ready rows `model,seed,metric,value`, one per run and metric.
inline std::string plot_csv(const std::vector<ModelRuns>& models) {
  std::string out = "model,seed,metric,value\n";
  for (const auto& m : models)
    for (const auto& [seed, rep] : m.runs) {
      const std::pair<const char*, double> rows[] = {{"hit_rate_at_k", rep.hit_rate_at_k},
                                                     {"precision_at_k", rep.precision_at_k},
                                                     {"recall_at_k", rep.recall_at_k},
                                                     {"ndcg_at_k", rep.ndcg_at_k},
                                                     {"mrr", rep.mrr}};
      for (const auto& [metric, value] : rows)
        out += csv::quote(m.name) + "," + std::to_string(seed) + "," + metric + "," + detail::format_double(value) + "\n";
      if (rep.gini)
        out += csv::quote(m.name) + "," + std::to_string(seed) + ",gini," + detail::format_double(*rep.gini) + "\n";
    }
  return out;
}

inline void write_report(const OutputPaths& paths, const std::string& name, const std::string& command,
                         const RunConfig& cfg, const std::vector<ModelRuns>& models) {
  write_file_atomic(paths.reports() / (name + ".json"), detail::json_text(report_json(command, cfg, models)));
  write_file_atomic(paths.reports() / (name + "_plot.csv"), plot_csv(models));
}

inline std::string format_metrics_line(const std::string& model, const MetricsReport& mean, const MetricsReport& sd) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s NDCG@%zu %.4f +- %.4f  HR %.4f  P %.4f  R %.4f  MRR %.4f", model.c_str(),
                mean.k, mean.ndcg_at_k, sd.ndcg_at_k, mean.hit_rate_at_k, mean.precision_at_k, mean.recall_at_k,
                mean.mrr);
  std::string s = buf;
  if (mean.gini) {
    std::snprintf(buf, sizeof buf, "  Gini %.4f", *mean.gini);
    s += buf;
  }
  return s;
}

inline void print_table(const std::vector<ModelRuns>& models, std::ostream& log) {
  for (const auto& m : models) {
    std::vector<MetricsReport> reps;
    for (const auto& r : m.runs) reps.push_back(r.second);
    const auto a = aggregate(reps);
    log << format_metrics_line(m.name, a.mean, a.stddev) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Commands

inline std::string train_log_header() { return "epoch,L_total,L_sup,L_pseudo,L_reg,val_ndcg@10,seconds\n"; }

/// train: one run of the configured variant per seed; checkpoints, per-epoch logs and a
/// validation summary.
inline void cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const OutputPaths paths{cfg.out_dir};
  OutputLock lock(paths);
  const auto data = load_dataset(cfg);
  const auto& prep = data.prepared;
  const ModelSpec spec{to_string(cfg.variant), ModelKind::Hybrid, cfg.variant};
  const std::string echo = config_echo(cfg);

  nlohmann::ordered_json summary;
  summary["schema"] = "fusionrec.train_summary/1";
  summary["config_hash"] = config_hash(cfg);
  summary["variant"] = to_string(cfg.variant);
  summary["seeds"] = cfg.seeds;
  summary["runs"] = nlohmann::ordered_json::array();
  std::vector<double> best_vals;
  for (std::uint64_t seed : cfg.seeds) {
    const TrainConfig tc = config_for(spec, cfg.train, seed);
    HybridModel model(tc.shape(prep.nodes.size()), cfg.variant);
    std::string log_text = train_log_header();
    TrainHooks<HybridParams> hooks;
    hooks.on_epoch = [&](const EpochRecord& rec, const HybridParams&) {
      log_text += format_epoch_line(rec) + "\n";
      log << "seed " << seed << " " << format_epoch_line(rec) << "\n";
    };
    TrainResult<HybridParams> result;
    try {
      result = train(model, tc, prep.train_data(), hooks);
    } catch (const Error& e) {
      throw Error(e.kind(), "seed " + std::to_string(seed) + ": " + e.what());
    }
    save_checkpoint(result.params, echo, paths.checkpoint(cfg.variant, seed));
    write_file_atomic(paths.train_log(cfg.variant, seed), log_text);
    const auto& h = result.history;
    const double best = h.best_epoch ? h.epochs[h.best_epoch - 1].val_ndcg : h.initial_val_ndcg;
    best_vals.push_back(best);
    summary["runs"].push_back({{"seed", seed},
                               {"best_epoch", h.best_epoch},
                               {"epochs_run", h.epochs.size()},
                               {"stopped_early", h.stopped_early},
                               {"initial_val_ndcg", h.initial_val_ndcg},
                               {"best_val_ndcg", best}});
  }
  double mean = 0.0, var = 0.0;
  for (double v : best_vals) mean += v;
  mean /= static_cast<double>(best_vals.size());
  for (double v : best_vals) var += (v - mean) * (v - mean);
  const double sd = best_vals.size() > 1 ? std::sqrt(var / static_cast<double>(best_vals.size() - 1)) : 0.0;
  summary["val_ndcg_mean"] = mean;
  summary["val_ndcg_stddev"] = sd;
  summary["config"] = config_map(cfg);
  write_file_atomic(paths.reports() / "train_summary.json", detail::json_text(summary));
  char buf[128];
  std::snprintf(buf, sizeof buf, "validation NDCG@%zu over %zu seed(s): %.4f +- %.4f\n", cfg.train.val_k,
                best_vals.size(), mean, sd);
  log << buf;
}

/// Restores the checkpoint trained for `variant` and `seed` into a freshly shaped parameter set.
inline HybridParams load_trained(const RunConfig& cfg, const HybridModel& model, std::uint64_t seed) {
  const OutputPaths paths{cfg.out_dir};
  const auto path = paths.checkpoint(cfg.variant, seed);
  if (!fs::exists(path))
    fail_data("missing checkpoint '" + path.string() + "'; run the train command for seed " + std::to_string(seed));
  Rng rng(seed);
  HybridParams p = model.init(rng);
  apply_checkpoint(load_checkpoint(path), p);
  return p;
}

/// evaluate: test metrics for each seed's checkpoint, their aggregate and the plot CSV.
inline void cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const OutputPaths paths{cfg.out_dir};
  OutputLock lock(paths);
  const auto data = load_dataset(cfg);
  const auto& prep = data.prepared;
  HybridModel model(cfg.train.shape(prep.nodes.size()), cfg.variant);
  ModelRuns runs{to_string(cfg.variant), {}};
  for (std::uint64_t seed : cfg.seeds)
    runs.runs.emplace_back(seed, evaluate_test(model, load_trained(cfg, model, seed), prep, cfg.k));
  write_report(paths, "evaluate", "evaluate", cfg, {runs});
  print_table({runs}, log);
}

inline void run_comparison(const RunConfig& cfg, const std::string& command, const std::vector<ModelSpec>& specs,
                           std::ostream& log) {
  cfg.validate();
  const OutputPaths paths{cfg.out_dir};
  OutputLock lock(paths);
  const auto data = load_dataset(cfg);
  const auto table = run_table(specs, data.prepared, cfg.train, cfg.seeds, cfg.k, [&](const RunOutcome& r) {
    log << r.model << " seed " << r.seed << ": NDCG@" << r.test.k << " " << r.test.ndcg_at_k << "\n";
  });
  const auto models = group_runs(table);
  write_report(paths, command, command, cfg, models);
  print_table(models, log);
}

/// ablate: full, no-text, no-graph and no-pseudo, each trained per seed.
inline void cmd_ablate(const RunConfig& cfg, std::ostream& log) { run_comparison(cfg, "ablation", default_ablations(), log); }

/// baselines: CF, GNN-only, LLM-only and the hybrid model.
inline void cmd_baselines(const RunConfig& cfg, std::ostream& log) {
  run_comparison(cfg, "baselines", default_baselines(), log);
}

struct Recommendation {
  std::string item_id;  // external id
  double score = 0.0;
};

/// recommend: a known user gets the trained model's top-k (first configured seed); an unknown
/// user with a text profile gets items ranked by cosine similarity of text embeddings.
inline std::vector<Recommendation> cmd_recommend(const RunConfig& cfg, const std::optional<std::string>& user,
                                                 const std::optional<std::string>& text, std::ostream& log) {
  cfg.validate();
  const OutputPaths paths{cfg.out_dir};
  OutputLock lock(paths);
  const auto data = load_dataset(cfg);
  const auto& prep = data.prepared;
  const auto& ext = data.dataset.external_ids;
  std::optional<NodeId> known;
  if (user) {
    for (std::size_t i = 0; i < ext.size(); ++i)
      if (ext[i] == *user && prep.nodes[i].kind == NodeKind::User) known = static_cast<NodeId>(i);
  }
  std::vector<Recommendation> out;
  if (known) {
    HybridModel model(cfg.train.shape(prep.nodes.size()), cfg.variant);
    const auto params = load_trained(cfg, model, cfg.seeds.front());
    const auto ranked = topk(model, params, *known, prep.context(), cfg.k, prep.train_pos[*known]);
    for (std::size_t r = 0; r < ranked.items.size(); ++r) out.push_back({ext[ranked.items[r]], ranked.scores[r]});
    log << "top-" << cfg.k << " for user " << *user << " (model " << to_string(cfg.variant) << ", seed "
        << cfg.seeds.front() << ")\n";
  } else {
    if (!text)
      fail_data(user ? "unknown user '" + *user + "'; pass --text with a profile for a cold-start recommendation"
                     : std::string("recommend needs --user or --text"));
    EmbeddingIndex index(cfg.train.embed_dim);
    for (NodeId it : prep.graph.items()) index.add(it, prep.text.row(it));
    const auto query = encode_text(clean_text(*text), cfg.train.embed_dim, cfg.train.text_seed);
    for (const auto& nb : cold_start_topk(query, index, cfg.k)) out.push_back({ext[nb.id], nb.similarity});
    log << "cold-start top-" << cfg.k << " by text similarity\n";
  }
  return out;
}

/// report: gathers the JSON reports present in the output directory into summary.md.
inline std::string cmd_report(const RunConfig& cfg, std::ostream& log) {
  const OutputPaths paths{cfg.out_dir};
  OutputLock lock(paths);
  std::string md = "# Results\n";
  bool any = false;
  for (const char* name : {"baselines", "ablation", "evaluate"}) {
    const auto path = paths.reports() / (std::string(name) + ".json");
    if (!fs::exists(path)) continue;
    const auto j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !validate_report(j).empty()) fail_data("report '" + path.string() + "' is malformed");
    any = true;
    md += "\n## " + std::string(name) + "\n\nseeds:";
    for (const auto& s : j["seeds"]) md += " " + std::to_string(s.get<std::uint64_t>());
    md += ", config " + j["config_hash"].get<std::string>() + "\n\n";
    const std::size_t k = j["k"].get<std::size_t>();
    md += "| model | NDCG@" + std::to_string(k) + " | HR@" + std::to_string(k) + " | P@" + std::to_string(k) +
          " | R@" + std::to_string(k) + " | MRR | Gini |\n|---|---|---|---|---|---|---|\n";
    for (const auto& m : j["models"]) {
      const auto& mean = m["mean"];
      const auto& sd = m["stddev"];
      char buf[256];
      std::snprintf(buf, sizeof buf, "| %s | %.4f ± %.4f | %.4f | %.4f | %.4f | %.4f | ",
                    m["name"].get<std::string>().c_str(), mean["ndcg_at_k"].get<double>(), sd["ndcg_at_k"].get<double>(),
                    mean["hit_rate_at_k"].get<double>(), mean["precision_at_k"].get<double>(),
                    mean["recall_at_k"].get<double>(), mean["mrr"].get<double>());
      md += buf;
      if (mean["gini"].is_number()) {
        std::snprintf(buf, sizeof buf, "%.4f |\n", mean["gini"].get<double>());
        md += buf;
      } else {
        md += "n/a |\n";
      }
    }
  }
  if (!any) fail_data("no reports in '" + paths.reports().string() + "'; run baselines, ablate or evaluate first");
  write_file_atomic(paths.reports() / "summary.md", md);
  log << md;
  return md;
}

}  // namespace fusionrec
