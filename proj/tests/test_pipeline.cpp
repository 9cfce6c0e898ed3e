#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "fusionrec/pipeline.hpp"
#include "support/oracles.hpp"

using namespace fusionrec;
namespace fs = std::filesystem;

namespace {

const char* kSmall =
    "synthetic = true\n"
    "synthetic_users = 30\n"
    "synthetic_items = 20\n"
    "embed_dim = 8\n"
    "gnn_layers = 1\n"
    "max_epochs = 3\n"
    "batch_size = 64\n"
    "patience = 2\n";

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(const oracle::TempDir& dir, const std::string& args) {
  const auto out = dir.path() / "stdout.txt", err = dir.path() / "stderr.txt";
  const std::string cmd =
      std::string(FUSIONREC_CLI_PATH) + " " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
}

RunConfig small_config(const fs::path& out) {
  RunConfig c;
  for (const auto& [k, v] : parse_config_text(kSmall, "small")) set_config_value(c, k, v);
  c.out_dir = out.string();
  return c;
}

std::string strip_seconds(const std::string& log) {
  std::istringstream in(log);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_file(p)); }

}  // namespace

TEST(Cli, UsageErrorsExitWithOne) {
  oracle::TempDir dir("cli_usage");
  EXPECT_EQ(cli(dir, "").code, 1);
  EXPECT_EQ(cli(dir, "train --bogus").code, 1);
  EXPECT_EQ(cli(dir, "ingest --set warp=9").code, 1);
  const auto r = cli(dir, "ingest --set k=0 --synthetic --out '" + (dir.path() / "o").string() + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("k must be"), std::string::npos) << r.err;
  EXPECT_EQ(cli(dir, "--help").code, 0);
}

TEST(Cli, MissingNodesFileNamesThePath) {
  oracle::TempDir dir("cli_missing");
  const auto inter = dir.file("inter.csv", "user_id,item_id,label,timestamp\nu,i,1,1\n");
  const auto missing = (dir.path() / "nodes_missing.csv").string();
  const auto r = cli(dir, "ingest --set interactions_file=" + inter + " --set nodes_file=" + missing + " --out '" +
                              (dir.path() / "o").string() + "'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST(Cli, IngestIsReproducible) {
  oracle::TempDir dir("cli_ingest");
  const auto conf = dir.file("small.conf", kSmall);
  for (const char* o : {"a", "b"})
    ASSERT_EQ(cli(dir, "ingest --config " + conf + " --out '" + (dir.path() / o).string() + "'").code, 0);
  auto a = read_json(OutputPaths{dir.path() / "a"}.manifest());
  auto b = read_json(OutputPaths{dir.path() / "b"}.manifest());
  EXPECT_EQ(a["schema"], kManifestSchema);
  a.erase("created_at");
  b.erase("created_at");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["source"], "synthetic");
}

TEST(Cli, TrainEvaluateReportAndRecommend) {
  oracle::TempDir dir("cli_full");
  const auto conf = dir.file("small.conf", kSmall);
  const auto out = dir.path() / "o";
  const std::string common = " --config " + conf + " --out '" + out.string() + "'";
  const OutputPaths paths{out};
  ASSERT_EQ(cli(dir, "ingest" + common).code, 0);

  EXPECT_EQ(cli(dir, "evaluate" + common).code, 2);  // nothing trained yet

  const auto train = cli(dir, "train" + common + " --seed 1 --seed 2 --seed 3");
  ASSERT_EQ(train.code, 0) << train.err;
  for (std::uint64_t s : {1, 2, 3}) {
    EXPECT_TRUE(fs::exists(paths.checkpoint(Variant::Full, s)));
    const auto log = read_file(paths.train_log(Variant::Full, s));
    EXPECT_EQ(log.rfind(train_log_header(), 0), 0u);
  }
  EXPECT_TRUE(fs::exists(paths.reports() / "train_summary.json"));

  const auto eval = cli(dir, "evaluate" + common + " --k 5");
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto report = read_json(paths.reports() / "evaluate.json");
  EXPECT_TRUE(validate_report(report).empty());
  EXPECT_EQ(report["k"], 5);
  EXPECT_EQ(report["models"][0]["mean"]["k"], 5);
  EXPECT_EQ(report["seeds"], (nlohmann::json{1, 2, 3}));
  EXPECT_EQ(report["models"][0]["runs"].size(), 3u);
  EXPECT_TRUE(fs::exists(paths.reports() / "evaluate_plot.csv"));

  const auto rep = cli(dir, "report" + common);
  ASSERT_EQ(rep.code, 0) << rep.err;
  const auto md = read_file(paths.reports() / "summary.md");
  EXPECT_NE(md.find(report["config_hash"].get<std::string>()), std::string::npos);
  EXPECT_NE(md.find("seeds: 1 2 3"), std::string::npos) << md;

  const auto rec = cli(dir, "recommend" + common + " --user 1003 --k 4");
  ASSERT_EQ(rec.code, 0) << rec.err;
  std::istringstream lines(rec.out);
  std::string line;
  std::size_t n = 0;
  std::getline(lines, line);
  EXPECT_EQ(line, "rank,item_id,score");
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 4u);
  EXPECT_EQ(cli(dir, "recommend" + common + " --user nobody").code, 2);
  EXPECT_FALSE(fs::exists(paths.lock()));
}

TEST(Cli, TrainingLogsReproduceExceptSeconds) {
  oracle::TempDir dir("cli_repro");
  const auto conf = dir.file("small.conf", kSmall);
  for (const char* o : {"a", "b"}) {
    const std::string common = " --config " + conf + " --out '" + (dir.path() / o).string() + "' --seed 4";
    ASSERT_EQ(cli(dir, "ingest" + common).code, 0);
    ASSERT_EQ(cli(dir, "train" + common).code, 0);
  }
  const auto a = read_file(OutputPaths{dir.path() / "a"}.train_log(Variant::Full, 4));
  const auto b = read_file(OutputPaths{dir.path() / "b"}.train_log(Variant::Full, 4));
  EXPECT_EQ(strip_seconds(a), strip_seconds(b));
  EXPECT_EQ(read_file(OutputPaths{dir.path() / "a"}.checkpoint(Variant::Full, 4)),
            read_file(OutputPaths{dir.path() / "b"}.checkpoint(Variant::Full, 4)));
}

TEST(Pipeline, LockedOutputDirectoryIsRefused) {
  oracle::TempDir dir("lock");
  const auto cfg = small_config(dir.path() / "o");
  OutputLock held(OutputPaths{cfg.out_dir});
  std::ostringstream log;
  try {
    cmd_ingest(cfg, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Usage);
  }
}

TEST(Pipeline, TamperedDatasetIsDetected) {
  oracle::TempDir dir("tamper");
  const auto cfg = small_config(dir.path() / "o");
  std::ostringstream log;
  cmd_ingest(cfg, log);
  const auto nodes = OutputPaths{cfg.out_dir}.dataset() / "nodes.csv";
  write_file_atomic(nodes, read_file(nodes) + "\n");
  EXPECT_THROW(load_dataset(cfg), Error);
}

TEST(Pipeline, ChangedRatiosAfterIngestAreDetected) {
  oracle::TempDir dir("ratios");
  auto cfg = small_config(dir.path() / "o");
  std::ostringstream log;
  cmd_ingest(cfg, log);
  cfg.ratios = {0.6, 0.2, 0.2};
  EXPECT_THROW(load_dataset(cfg), Error);
}

TEST(Pipeline, ColdStartTextMatchingAnItemRanksItFirst) {
  oracle::TempDir dir("cold");
  auto cfg = small_config(dir.path() / "o");
  std::ostringstream log;
  cmd_ingest(cfg, log);
  const auto data = load_dataset(cfg);
  const NodeId item = data.prepared.graph.items()[3];
  const std::string text = data.dataset.nodes[item].text;
  const auto recs = cmd_recommend(cfg, std::nullopt, text, log);
  ASSERT_FALSE(recs.empty());
  EXPECT_NEAR(recs[0].score, 1.0, 1e-12);
  bool found = false;
  for (const auto& r : recs)
    if (r.item_id == data.dataset.external_ids[item]) {
      found = true;
      EXPECT_NEAR(r.score, 1.0, 1e-12);
    }
  EXPECT_TRUE(found);
  EXPECT_THROW(cmd_recommend(cfg, std::nullopt, std::nullopt, log), Error);
}

TEST(Pipeline, KLargerThanCatalogReturnsEveryCandidate) {
  oracle::TempDir dir("bigk");
  auto cfg = small_config(dir.path() / "o");
  cfg.seeds = {1};
  cfg.train.max_epochs = 1;
  cfg.train.patience = 1;
  std::ostringstream log;
  cmd_ingest(cfg, log);
  cmd_train(cfg, log);
  cfg.k = 500;
  const auto data = load_dataset(cfg);
  const NodeId user = 2;
  const auto recs = cmd_recommend(cfg, data.dataset.external_ids[user], std::nullopt, log);
  EXPECT_EQ(recs.size(), data.prepared.graph.items().size() - data.prepared.train_pos[user].size());
  const auto cold = cmd_recommend(cfg, std::nullopt, std::string("anything at all"), log);
  EXPECT_EQ(cold.size(), data.prepared.graph.items().size());
}

TEST(Report, SchemaValidation) {
  RunConfig cfg;
  MetricsReport m;
  m.k = 10;
  m.n_users_evaluated = 3;
  m.gini = 0.4;
  const auto j = report_json("baselines", cfg, {{"CF", {{1, m}, {2, m}}}});
  EXPECT_TRUE(validate_report(j).empty());
  EXPECT_EQ(j["config_hash"], config_hash(cfg));
  auto broken = nlohmann::json(j);
  broken["models"][0]["runs"][1]["metrics"].erase("ndcg_at_k");
  broken.erase("seeds");
  const auto errs = validate_report(broken);
  ASSERT_EQ(errs.size(), 2u);
  EXPECT_NE(errs[0].find("seeds"), std::string::npos);
  EXPECT_NE(errs[1].find("runs[1].metrics.ndcg_at_k"), std::string::npos);
  const auto plot = plot_csv({{"CF", {{1, m}}}});
  EXPECT_EQ(plot.rfind("model,seed,metric,value\n", 0), 0u);
  EXPECT_NE(plot.find("CF,1,gini,0.4"), std::string::npos);
}
