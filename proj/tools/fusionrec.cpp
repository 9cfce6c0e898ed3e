#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fusionrec/pipeline.hpp"

namespace {

using namespace fusionrec;

int exit_code(ErrorKind k) { return static_cast<int>(k); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-stream graph/text recommender: ingest, train, evaluate, ablate, baselines, recommend, report"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> k;
  bool synthetic = false;
  std::optional<std::string> text, user, out_dir;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seeds, "training seed (repeatable; replaces the configured list)");
    sub->add_option("--k", k, "cutoff for ranking metrics and recommendations");
    sub->add_flag("--synthetic", synthetic, "generate the synthetic dual-signal dataset instead of reading files");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--set", overrides, "override any config key: --set key=value (repeatable)");
  };
  const char* names[] = {"ingest", "train", "evaluate", "ablate", "baselines", "recommend", "report"};
  const char* blurbs[] = {"read or generate data, split it and write the canonical dataset",
                          "train the configured variant once per seed",
                          "test metrics for each trained checkpoint",
                          "train and compare full, no-text, no-graph and no-pseudo",
                          "train and compare CF, GNN-only, LLM-only and the hybrid model",
                          "top-k items for a user, or for a text profile (cold start)",
                          "collect the JSON reports into summary.md"};
  std::vector<CLI::App*> subs;
  for (int i = 0; i < 7; ++i) {
    subs.push_back(app.add_subcommand(names[i], blurbs[i]));
    add_common(subs.back());
  }
  subs[5]->add_option("--user", user, "external user id");
  subs[5]->add_option("--text", text, "profile text for a user with no history");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorKind::Usage);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail_usage("--set expects key=value, got '" + kv + "'");
      set_config_value(cfg, csv::trim(kv.substr(0, eq)), csv::trim(kv.substr(eq + 1)));
    }
    if (!seeds.empty()) cfg.seeds = seeds;
    if (k) cfg.k = *k;
    if (synthetic) cfg.synthetic = true;
    if (out_dir) cfg.out_dir = *out_dir;

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "ingest") cmd_ingest(cfg, std::cout);
    else if (cmd == "train") cmd_train(cfg, std::cout);
    else if (cmd == "evaluate") cmd_evaluate(cfg, std::cout);
    else if (cmd == "ablate") cmd_ablate(cfg, std::cout);
    else if (cmd == "baselines") cmd_baselines(cfg, std::cout);
    else if (cmd == "report") cmd_report(cfg, std::cout);
    else if (cmd == "recommend") {
      const auto recs = cmd_recommend(cfg, user, text, std::cerr);
      std::printf("rank,item_id,score\n");
      for (std::size_t r = 0; r < recs.size(); ++r)
        std::printf("%zu,%s,%.17g\n", r + 1, recs[r].item_id.c_str(), recs[r].score);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::Data);
  }
}
