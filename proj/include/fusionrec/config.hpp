#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fusionrec/common.hpp"
#include "fusionrec/csv.hpp"
#include "fusionrec/data_model.hpp"
#include "fusionrec/fusion_head.hpp"
#include "fusionrec/trainer.hpp"

namespace fusionrec {

/// Everything a command needs: training hyperparameters, data paths, evaluation settings and
/// the synthetic generator's knobs (used when `synthetic` is set).
struct RunConfig {
  TrainConfig train;
  std::string interactions_file;
  std::string nodes_file;
  std::string social_file;   // optional
  std::string vectors_file;  // optional precomputed text embeddings
  std::string out_dir = "fusionrec_out";
  std::size_t k = 10;
  SplitRatios ratios;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  Variant variant = Variant::Full;
  bool synthetic = false;
  SyntheticConfig synth;

  void validate() const {
    train.validate();
    if (k < 1) fail_usage("k must be >= 1");
    if (seeds.empty()) fail_usage("at least one seed is required");
    const double sum = ratios.train + ratios.val + ratios.test;
    if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0) || std::abs(sum - 1.0) > 1e-9)
      fail_usage("ratios must be three positive numbers summing to 1");
    if (out_dir.empty()) fail_usage("out_dir must not be empty");
  }
};

namespace detail {

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double parse_config_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
    fail_usage("config key '" + key + "': expected a number, got '" + v + "'");
  return d;
}

inline std::uint64_t parse_config_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size())
    fail_usage("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

inline bool parse_config_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail_usage("config key '" + key + "': expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v + ",") {
    if (c == ',') {
      out.push_back(csv::trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

struct ConfigField {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline std::vector<ConfigField> config_fields() {
  std::vector<ConfigField> f;
  auto dbl = [&](std::string key, auto access) {
    f.push_back({key, [key, access](RunConfig& c, const std::string& v) { access(c) = parse_config_double(key, v); },
                 [access](const RunConfig& c) { return format_double(access(c)); }});
  };
  auto uns = [&](std::string key, auto access) {
    f.push_back({key,
                 [key, access](RunConfig& c, const std::string& v) {
                   access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(parse_config_uint(key, v));
                 },
                 [access](const RunConfig& c) { return std::to_string(access(c)); }});
  };
  auto str = [&](std::string key, auto access) {
    f.push_back({key, [access](RunConfig& c, const std::string& v) { access(c) = v; },
                 [access](const RunConfig& c) { return access(c); }});
  };
  auto boolean = [&](std::string key, auto access) {
    f.push_back({key, [key, access](RunConfig& c, const std::string& v) { access(c) = parse_config_bool(key, v); },
                 [access](const RunConfig& c) { return std::string(access(c) ? "true" : "false"); }});
  };

  // Training.
  dbl("learning_rate", [](auto& c) -> auto& { return c.train.learning_rate; });
  uns("embed_dim", [](auto& c) -> auto& { return c.train.embed_dim; });
  uns("gnn_layers", [](auto& c) -> auto& { return c.train.gnn_layers; });
  uns("batch_size", [](auto& c) -> auto& { return c.train.batch_size; });
  dbl("dropout", [](auto& c) -> auto& { return c.train.dropout; });
  dbl("lambda_pseudo", [](auto& c) -> auto& { return c.train.lambda_pseudo; });
  dbl("lambda_sup", [](auto& c) -> auto& { return c.train.lambda_sup; });
  dbl("lambda_reg", [](auto& c) -> auto& { return c.train.lambda_reg; });
  boolean("reg_biases", [](auto& c) -> auto& { return c.train.reg_biases; });
  uns("max_epochs", [](auto& c) -> auto& { return c.train.max_epochs; });
  uns("patience", [](auto& c) -> auto& { return c.train.patience; });
  uns("neg_per_pos", [](auto& c) -> auto& { return c.train.neg_per_pos; });
  f.push_back({"sup_loss",
               [](RunConfig& c, const std::string& v) {
                 if (v == "pairwise_ranking") c.train.sup_loss = SupLoss::PairwiseRanking;
                 else if (v == "binary_cross_entropy") c.train.sup_loss = SupLoss::BinaryCrossEntropy;
                 else fail_usage("config key 'sup_loss': expected pairwise_ranking or binary_cross_entropy, got '" + v + "'");
               },
               [](const RunConfig& c) { return std::string(to_string(c.train.sup_loss)); }});
  dbl("leaky_slope", [](auto& c) -> auto& { return c.train.leaky_slope; });
  dbl("adam_beta1", [](auto& c) -> auto& { return c.train.adam_beta1; });
  dbl("adam_beta2", [](auto& c) -> auto& { return c.train.adam_beta2; });
  dbl("adam_eps", [](auto& c) -> auto& { return c.train.adam_eps; });
  uns("text_seed", [](auto& c) -> auto& { return c.train.text_seed; });
  uns("val_k", [](auto& c) -> auto& { return c.train.val_k; });

  // Run.
  str("interactions_file", [](auto& c) -> auto& { return c.interactions_file; });
  str("nodes_file", [](auto& c) -> auto& { return c.nodes_file; });
  str("social_file", [](auto& c) -> auto& { return c.social_file; });
  str("vectors_file", [](auto& c) -> auto& { return c.vectors_file; });
  str("out_dir", [](auto& c) -> auto& { return c.out_dir; });
  uns("k", [](auto& c) -> auto& { return c.k; });
  f.push_back({"ratios",
               [](RunConfig& c, const std::string& v) {
                 auto parts = split_list(v);
                 if (parts.size() != 3) fail_usage("config key 'ratios': expected three comma-separated numbers");
                 c.ratios = {parse_config_double("ratios", parts[0]), parse_config_double("ratios", parts[1]),
                             parse_config_double("ratios", parts[2])};
               },
               [](const RunConfig& c) {
                 return format_double(c.ratios.train) + "," + format_double(c.ratios.val) + "," +
                        format_double(c.ratios.test);
               }});
  f.push_back({"seeds",
               [](RunConfig& c, const std::string& v) {
                 c.seeds.clear();
                 for (const auto& s : split_list(v)) c.seeds.push_back(parse_config_uint("seeds", s));
               },
               [](const RunConfig& c) {
                 std::string s;
                 for (auto x : c.seeds) s += (s.empty() ? "" : ",") + std::to_string(x);
                 return s;
               }});
  f.push_back({"variant", [](RunConfig& c, const std::string& v) {
                 auto parsed = parse_variant(v);
                 if (!parsed) fail_usage("config key 'variant': unknown variant '" + v + "'");
                 c.variant = *parsed;
               },
               [](const RunConfig& c) { return std::string(to_string(c.variant)); }});
  boolean("synthetic", [](auto& c) -> auto& { return c.synthetic; });

  // Synthetic generator.
  uns("synthetic_users", [](auto& c) -> auto& { return c.synth.n_users; });
  uns("synthetic_items", [](auto& c) -> auto& { return c.synth.n_items; });
  uns("synthetic_communities", [](auto& c) -> auto& { return c.synth.n_communities; });
  uns("synthetic_topics", [](auto& c) -> auto& { return c.synth.n_topics; });
  uns("synthetic_vocab_per_topic", [](auto& c) -> auto& { return c.synth.vocab_per_topic; });
  uns("synthetic_words_per_text", [](auto& c) -> auto& { return c.synth.words_per_text; });
  dbl("synthetic_text_noise", [](auto& c) -> auto& { return c.synth.text_noise; });
  dbl("synthetic_p_none", [](auto& c) -> auto& { return c.synth.p_none; });
  dbl("synthetic_p_community", [](auto& c) -> auto& { return c.synth.p_community; });
  dbl("synthetic_p_topic", [](auto& c) -> auto& { return c.synth.p_topic; });
  dbl("synthetic_p_both", [](auto& c) -> auto& { return c.synth.p_both; });
  dbl("synthetic_p_social_same", [](auto& c) -> auto& { return c.synth.p_social_same; });
  dbl("synthetic_p_social_other", [](auto& c) -> auto& { return c.synth.p_social_other; });
  dbl("synthetic_appeal_share", [](auto& c) -> auto& { return c.synth.appeal_share; });
  dbl("synthetic_appeal_high", [](auto& c) -> auto& { return c.synth.appeal_high; });
  dbl("synthetic_appeal_low", [](auto& c) -> auto& { return c.synth.appeal_low; });
  dbl("synthetic_appeal_word_noise", [](auto& c) -> auto& { return c.synth.appeal_word_noise; });
  boolean("synthetic_label_appeal", [](auto& c) -> auto& { return c.synth.label_appeal; });
  uns("synthetic_seed", [](auto& c) -> auto& { return c.synth.seed; });
  return f;
}

}  // namespace detail

/// Sets one field by its config-file key.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : detail::config_fields())
    if (f.key == key) return f.set(cfg, value);
  fail_usage("unknown config key '" + key + "'");
}

/// Parses flat `key = value` text. '#' starts a comment; blank lines are ignored; a key may
/// appear once.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                          const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = csv::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) fail_usage(where + ": expected 'key = value'");
    std::string key = csv::trim(line.substr(0, eq));
    std::string value = csv::trim(line.substr(eq + 1));
    if (key.empty()) fail_usage(where + ": missing key");
    if (auto it = seen.find(key); it != seen.end())
      fail_usage(where + ": key '" + key + "' already set on line " + std::to_string(it->second));
    seen.emplace(key, lineno);
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

/// Applies a config file over `cfg`. Errors name the file and line.
inline void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_usage("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  for (const auto& [k, v] : parse_config_text(ss.str(), path.string())) {
    try {
      set_config_value(cfg, k, v);
    } catch (const Error& e) {
      fail_usage(path.string() + ": " + e.what());
    }
  }
}

/// Every field except out_dir as `key = value` lines in a fixed order. Identical configs give
/// identical text wherever their outputs go.
inline std::string config_echo(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : detail::config_fields())
    if (f.key != "out_dir") out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

inline std::map<std::string, std::string> config_map(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& f : detail::config_fields()) out.emplace(f.key, f.get(cfg));
  return out;
}

inline std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a64(config_echo(cfg))); }

}  // namespace fusionrec
