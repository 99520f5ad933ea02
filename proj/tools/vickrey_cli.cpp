// vickrey: command-line driver for the VickreyFeedback pipeline.
//
// Every subcommand writes its artifacts plus "<primary output>.manifest.json"
// recording the subcommand, resolved flags, input/output digests, master seed
// and tool version. Exit codes: 0 ok, 1 internal invariant failure, 2 usage
// or input error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vickrey/vickrey.h"

namespace {

using json = nlohmann::ordered_json;

struct Failure {
  int exit_code;
  std::string message;
};

[[noreturn]] void usage_error(std::string msg) { throw Failure{2, std::move(msg)}; }

void check(vk_status s) {
  if (s == VK_OK) return;
  const int code = (s == VK_ERR_INVARIANT || s == VK_ERR_INTERNAL || s == VK_ERR_TRAINING) ? 1 : 2;
  throw Failure{code, std::string(vk_status_name(s)) + " error: " + vk_last_error()};
}

std::string digest(const std::string& path) {
  char hex[65];
  check(vk_file_sha256(path.c_str(), hex));
  return hex;
}

// Default pool id: a digest prefix, stable under renames.
std::string digest_prefix(const std::string& path) { return digest(path).substr(0, 16); }

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Pool = Handle<vk_pool, vk_pool_free>;
using SimConfig = Handle<vk_sim_config, vk_sim_config_free>;
using Dataset = Handle<vk_dataset, vk_dataset_free>;
using Model = Handle<vk_model, vk_model_free>;

// Collects what a run consumed and produced, then writes the sidecar.
class Manifest {
 public:
  explicit Manifest(std::string subcommand) { j_["subcommand"] = std::move(subcommand); }

  template <class V>
  void set(const std::string& key, V value) { config_[key] = std::move(value); }
  void input(const std::string& path) { inputs_[path] = digest(path); }
  void output(const std::string& path) { outputs_[path] = digest(path); }
  void seed(std::optional<std::uint64_t> s) { seed_ = s; }

  void write(const std::string& primary_output) {
    j_["config"] = config_;
    j_["inputs"] = inputs_;
    j_["outputs"] = outputs_;
    j_["seed"] = seed_ ? json(*seed_) : json(nullptr);
    j_["tool"] = "vickrey";
    j_["version"] = vk_version();
    const std::string path = primary_output + ".manifest.json";
    std::ofstream f(path, std::ios::binary);
    f << j_.dump(2) << '\n';
    if (!f) throw Failure{2, "cannot write " + path};
  }

 private:
  json j_ = json::object();
  json config_ = json::object();
  json inputs_ = json::object();
  json outputs_ = json::object();
  std::optional<std::uint64_t> seed_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_error(std::string(flag) + ": not a number: '" + item + "'");
    }
  }
  return out;
}

Pool read_pool(const std::string& path, bool strict, Manifest& m) {
  Pool pool;
  check(vk_pool_read(path.c_str(), strict ? unsigned{VK_POOL_STRICT} : 0u, pool.out()));
  if (vk_pool_warning_count(pool.get()) > 0) {
    std::cerr << "warning: " << vk_pool_warning_count(pool.get())
              << " unknown field(s) ignored in " << path << '\n';
  }
  m.input(path);
  return pool;
}

Dataset read_dataset(const std::string& path, Manifest& m) {
  Dataset ds;
  check(vk_dataset_read(path.c_str(), ds.out()));
  m.input(path);
  return ds;
}

vk_tokenizer tokenizer_of(const std::string& name) {
  return name == "field" ? VK_TOKENIZER_FIELD : VK_TOKENIZER_DEFAULT;
}

// ---- options ---------------------------------------------------------------

struct GenPoolOpts {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

struct ValidateOpts {
  std::string pool;
  bool strict = false;
};

struct ProcureOpts {
  std::string pool, agents, out;
  double budget = 0.0;
  std::uint64_t seed = 0;
  std::string quality = "token_length";
  std::string tokenizer = "default";
  bool strict = false;
};

struct BuildOpts {
  std::string pool, mode, out, pool_id;
  double subsample = 1.0;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

struct CostOpts {
  std::string dataset, out;
  double price = 1.0;
  std::string tokenizer = "default";
};

struct StatsOpts {
  std::string dataset, source_out, score_out;
  std::string edges = "1,2,3,4,5";
  double threshold = 3.75;
};

struct InitModelOpts {
  std::string out;
  std::size_t vocab = 32;
  std::size_t contexts = 64;
  std::uint64_t hash_seed = 0;
};

struct TrainOpts {
  std::string dataset, base, out, trace;
  std::string algorithm = "qa_dpo";
  vk_train_config cfg{};
};

struct EvalOpts {
  std::vector<std::string> models;
  std::string instructions, out, verdicts;
  std::string judge = "oracle_score";
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  std::size_t max_len = 32;
  std::size_t limit = 0;
};

struct DeviationOpts {
  std::vector<std::string> agents;
  std::string mechanism = "vickrey_feedback";
  std::string grid = "1,2,3,4,5,6,7";
  std::size_t trials = 100;
  std::size_t rivals = 3;
  double kappa = 0.0;
  bool exhaustive = false;
  std::uint64_t seed = 0;
  std::string out;
};

struct EfficiencyOpts {
  std::vector<std::string> runs;
  std::string out;
};

// ---- commands --------------------------------------------------------------

int cmd_gen_pool(const GenPoolOpts& o) {
  Manifest m("gen-pool");
  SimConfig cfg;
  check(vk_sim_config_read(o.config.c_str(), cfg.out()));
  m.input(o.config);
  const std::uint64_t seed = o.seed.value_or(vk_sim_config_seed(cfg.get()));
  Pool pool;
  check(vk_pool_generate(cfg.get(), &seed, pool.out()));
  check(vk_pool_write(pool.get(), o.out.c_str()));
  m.set("config", o.config);
  m.set("out", o.out);
  m.seed(seed);
  m.output(o.out);
  m.write(o.out);
  std::cout << "entries=" << vk_pool_size(pool.get()) << '\n';
  return 0;
}

int cmd_validate(const ValidateOpts& o) {
  Pool pool;
  check(vk_pool_read(o.pool.c_str(), (o.strict ? unsigned{VK_POOL_STRICT} : 0u) | unsigned{VK_POOL_NO_VALIDATE},
                     pool.out()));
  std::size_t n = 0;
  check(vk_pool_validate(pool.get(), &n));
  for (std::size_t i = 0; i < n; ++i) std::cout << vk_pool_finding(pool.get(), i) << '\n';
  std::cout << "entries=" << vk_pool_size(pool.get()) << " findings=" << n << '\n';
  return n == 0 ? 0 : 2;
}

int cmd_procure(const ProcureOpts& o) {
  if (!(o.budget >= 0.0)) usage_error("--budget must be >= 0");
  Manifest m("procure");
  Pool pool = read_pool(o.pool, o.strict, m);
  SimConfig agents;
  if (!o.agents.empty()) {
    check(vk_sim_config_read(o.agents.c_str(), agents.out()));
    m.input(o.agents);
  }
  const vk_quality_source q =
      o.quality == "overall_score" ? VK_QUALITY_OVERALL_SCORE : VK_QUALITY_TOKEN_LENGTH;
  vk_procurement_summary s{};
  check(vk_procure(pool.get(), agents.get(), o.budget, o.seed, q, tokenizer_of(o.tokenizer),
                   o.out.c_str(), &s));
  m.set("pool", o.pool);
  m.set("agents", o.agents);
  m.set("budget", o.budget);
  m.set("quality", o.quality);
  m.set("tokenizer", o.tokenizer);
  m.set("strict", o.strict);
  m.set("out", o.out);
  m.seed(o.seed);
  m.output(o.out);
  m.write(o.out);
  std::cout << "auctions=" << s.auctions << " spent=" << fmt(s.spent)
            << " budget=" << fmt(s.budget) << " remaining=" << fmt(s.budget - s.spent)
            << " stopped=" << (s.stopped ? "true" : "false") << '\n';
  return 0;
}

int cmd_build(const BuildOpts& o) {
  vk_policy policy;
  if (o.mode == "vanilla") {
    policy = VK_POLICY_VANILLA;
  } else if (o.mode == "vickrey") {
    policy = VK_POLICY_VICKREY;
  } else {
    usage_error("--mode must be vanilla or vickrey, got '" + o.mode + "'");
  }
  if (!(o.subsample > 0.0 && o.subsample <= 1.0)) usage_error("--subsample must be in (0, 1]");
  if (policy == VK_POLICY_VANILLA && !o.seed) usage_error("--seed is required for --mode vanilla");
  if (o.subsample < 1.0 && !o.seed) usage_error("--seed is required when subsampling");

  Manifest m("build");
  Pool pool = read_pool(o.pool, o.strict, m);
  const std::string pool_id = o.pool_id.empty() ? digest_prefix(o.pool) : o.pool_id;
  Dataset full;
  check(vk_dataset_build(pool.get(), policy, o.seed ? &*o.seed : nullptr, pool_id.c_str(),
                         full.out()));
  Dataset kept;
  check(vk_dataset_subsample(full.get(), o.subsample, o.seed.value_or(0), kept.out()));
  check(vk_dataset_write(kept.get(), o.out.c_str()));
  m.set("pool", o.pool);
  m.set("mode", o.mode);
  m.set("subsample", o.subsample);
  m.set("pool_id", pool_id);
  m.set("strict", o.strict);
  m.set("out", o.out);
  m.seed(o.seed);
  m.output(o.out);
  m.write(o.out);
  std::cout << "samples=" << vk_dataset_size(kept.get()) << '\n';
  return 0;
}

int cmd_cost(const CostOpts& o) {
  if (!(o.price >= 0.0)) usage_error("--price-per-token must be >= 0");
  Manifest m("cost");
  Dataset ds = read_dataset(o.dataset, m);
  vk_cost_summary s{};
  check(vk_dataset_cost(ds.get(), tokenizer_of(o.tokenizer), o.price, o.out.c_str(), &s));
  m.set("dataset", o.dataset);
  m.set("price_per_token", o.price);
  m.set("tokenizer", o.tokenizer);
  m.set("out", o.out);
  m.output(o.out);
  m.write(o.out);
  std::cout << "samples=" << s.n_samples << " tokens=" << s.total_tokens
            << " per_sample=" << fmt(s.per_sample_mean) << " dollars=" << fmt(s.total_dollars)
            << '\n';
  return 0;
}

int cmd_stats(const StatsOpts& o) {
  Manifest m("stats");
  Dataset ds = read_dataset(o.dataset, m);
  const std::vector<double> edges = parse_list(o.edges, "--edges");
  double max_fraction = 0.0;
  check(vk_source_histogram_csv(ds.get(), o.source_out.c_str(), &max_fraction));
  check(vk_score_histogram_csv(ds.get(), edges.data(), edges.size(), o.score_out.c_str()));
  double above = 0.0;
  double mean_rejected = 0.0;
  check(vk_dataset_fraction_above(ds.get(), o.threshold, &above));
  check(vk_dataset_mean_rejected_score(ds.get(), &mean_rejected));
  m.set("dataset", o.dataset);
  m.set("edges", edges);
  m.set("threshold", o.threshold);
  m.set("source_out", o.source_out);
  m.set("score_out", o.score_out);
  m.output(o.source_out);
  m.output(o.score_out);
  m.write(o.score_out);
  std::cout << "max_source_fraction=" << fmt(max_fraction) << " fraction_above=" << fmt(above)
            << " mean_rejected_score=" << fmt(mean_rejected) << '\n';
  return 0;
}

int cmd_init_model(const InitModelOpts& o) {
  Manifest m("init-model");
  Model model;
  check(vk_model_new(o.vocab, o.contexts, o.hash_seed, model.out()));
  check(vk_model_write(model.get(), o.out.c_str()));
  m.set("vocab_size", o.vocab);
  m.set("context_count", o.contexts);
  m.set("hash_seed", o.hash_seed);
  m.set("out", o.out);
  m.output(o.out);
  m.write(o.out);
  return 0;
}

int cmd_train(TrainOpts o) {
  if (o.algorithm == "dpo") {
    o.cfg.algorithm = VK_ALGO_DPO;
  } else if (o.algorithm == "qa_dpo") {
    o.cfg.algorithm = VK_ALGO_QA_DPO;
  } else {
    usage_error("--algorithm must be dpo or qa_dpo");
  }
  Manifest m("train");
  Dataset ds = read_dataset(o.dataset, m);
  Model base;
  check(vk_model_read(o.base.c_str(), base.out()));
  m.input(o.base);
  Model trained;
  double final_loss = 0.0;
  check(vk_train(ds.get(), base.get(), &o.cfg, o.trace.empty() ? nullptr : o.trace.c_str(),
                 trained.out(), &final_loss));
  check(vk_model_write(trained.get(), o.out.c_str()));
  m.set("dataset", o.dataset);
  m.set("base", o.base);
  m.set("algorithm", o.algorithm);
  m.set("beta", o.cfg.beta);
  m.set("learning_rate", o.cfg.learning_rate);
  m.set("epochs", o.cfg.epochs);
  m.set("batch_size", o.cfg.batch_size);
  m.set("quality_scale", o.cfg.quality_scale);
  m.set("trace", o.trace);
  m.set("out", o.out);
  m.seed(o.cfg.seed);
  m.output(o.out);
  if (!o.trace.empty()) m.output(o.trace);
  m.write(o.out);
  std::cout << "final_epoch_loss=" << fmt(final_loss) << '\n';
  return 0;
}

int cmd_eval(const EvalOpts& o) {
  if (o.models.size() < 2) usage_error("eval needs at least 2 --model entries");
  vk_judge_config judge{};
  if (o.judge == "oracle_score") {
    judge.mode = VK_JUDGE_ORACLE_SCORE;
  } else if (o.judge == "noisy_oracle") {
    judge.mode = VK_JUDGE_NOISY_ORACLE;
  } else if (o.judge == "length_preferring") {
    judge.mode = VK_JUDGE_LENGTH_PREFERRING;
  } else {
    usage_error("unknown --judge '" + o.judge + "'");
  }
  judge.noise_sd = o.noise_sd;
  judge.seed = o.seed;

  Manifest m("eval");
  std::vector<Model> models;
  std::vector<std::string> labels;
  json model_cfg = json::array();
  for (const std::string& spec : o.models) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      usage_error("--model expects LABEL=PATH, got '" + spec + "'");
    }
    labels.push_back(spec.substr(0, eq));
    const std::string path = spec.substr(eq + 1);
    models.emplace_back();
    check(vk_model_read(path.c_str(), models.back().out()));
    m.input(path);
    model_cfg.push_back({{"label", labels.back()}, {"path", path}});
  }
  Pool pool = read_pool(o.instructions, false, m);

  std::vector<const vk_model*> handles;
  std::vector<const char*> label_ptrs;
  for (std::size_t i = 0; i < models.size(); ++i) {
    handles.push_back(models[i].get());
    label_ptrs.push_back(labels[i].c_str());
  }
  const std::size_t n = models.size();
  std::vector<double> matrix(n * n);
  check(vk_evaluate(handles.data(), label_ptrs.data(), n, pool.get(), o.limit, &judge, o.seed,
                    o.max_len, o.out.c_str(), o.verdicts.empty() ? nullptr : o.verdicts.c_str(),
                    matrix.data()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (matrix[i * n + j] + matrix[j * n + i] != 1.0) {
        throw Failure{1, "win-rate matrix is not antisymmetric"};
      }
    }
  }
  m.set("models", model_cfg);
  m.set("instructions", o.instructions);
  m.set("judge", o.judge);
  m.set("noise_sd", o.noise_sd);
  m.set("max_len", o.max_len);
  m.set("limit", o.limit);
  m.set("out", o.out);
  m.set("verdicts", o.verdicts);
  m.seed(o.seed);
  m.output(o.out);
  if (!o.verdicts.empty()) m.output(o.verdicts);
  m.write(o.out);
  for (std::size_t i = 1; i < n; ++i) {
    std::cout << labels[i] << "_vs_" << labels[0] << "=" << fmt(matrix[i * n]) << '\n';
  }
  return 0;
}

int cmd_deviation(const DeviationOpts& o) {
  vk_deviation_config cfg{};
  if (o.mechanism == "vickrey_feedback") {
    cfg.mechanism = VK_MECH_VICKREY_FEEDBACK;
  } else if (o.mechanism == "second_price") {
    cfg.mechanism = VK_MECH_SECOND_PRICE;
  } else {
    usage_error("--mechanism must be vickrey_feedback or second_price");
  }
  if (o.agents.empty()) usage_error("deviation needs at least one --agent ID=VALUE");
  const std::vector<double> grid = parse_list(o.grid, "--grid");
  std::vector<std::string> ids;
  std::vector<double> values;
  for (const std::string& spec : o.agents) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) usage_error("--agent expects ID=VALUE, got '" + spec + "'");
    ids.push_back(spec.substr(0, eq));
    values.push_back(parse_list(spec.substr(eq + 1), "--agent").at(0));
  }
  std::vector<const char*> id_ptrs;
  for (const auto& id : ids) id_ptrs.push_back(id.c_str());
  cfg.trials = o.trials;
  cfg.bid_grid = grid.data();
  cfg.grid_size = grid.size();
  cfg.seed = o.seed;
  cfg.rivals = o.rivals;
  cfg.kappa = o.kappa;
  cfg.exhaustive = o.exhaustive ? 1 : 0;
  std::vector<double> fractions(ids.size());
  check(vk_deviation_test(id_ptrs.data(), values.data(), ids.size(), &cfg, o.out.c_str(),
                          fractions.data()));
  Manifest m("deviation");
  m.set("agents", o.agents);
  m.set("mechanism", o.mechanism);
  m.set("grid", grid);
  m.set("trials", o.trials);
  m.set("rivals", o.rivals);
  m.set("kappa", o.kappa);
  m.set("exhaustive", o.exhaustive);
  m.set("out", o.out);
  m.seed(o.seed);
  m.output(o.out);
  m.write(o.out);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::cout << ids[i] << " dominance_fraction=" << fmt(fractions[i]) << '\n';
  }
  return 0;
}

int cmd_efficiency(const EfficiencyOpts& o) {
  std::vector<std::string> labels;
  std::vector<vk_efficiency_run> runs;
  labels.reserve(o.runs.size());
  for (const std::string& spec : o.runs) {
    const auto c1 = spec.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : spec.find(',', c1 + 1);
    if (c2 == std::string::npos) usage_error("--run expects LABEL,COST,WIN_RATE, got '" + spec + "'");
    labels.push_back(spec.substr(0, c1));
    const auto nums = parse_list(spec.substr(c1 + 1), "--run");
    if (nums.size() != 2) usage_error("--run expects LABEL,COST,WIN_RATE, got '" + spec + "'");
    runs.push_back({nullptr, nums[0], nums[1]});
  }
  for (std::size_t i = 0; i < runs.size(); ++i) runs[i].label = labels[i].c_str();
  check(vk_cost_efficiency_csv(runs.data(), runs.size(), o.out.c_str()));
  Manifest m("efficiency");
  m.set("runs", o.runs);
  m.set("out", o.out);
  m.output(o.out);
  m.write(o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VickreyFeedback procurement simulator and preference-data toolkit"};
  app.set_version_flag("--version", std::string(vk_version()));
  app.require_subcommand(1);

  GenPoolOpts gen;
  auto* gen_cmd = app.add_subcommand("gen-pool", "Generate a synthetic response pool");
  gen_cmd->add_option("config", gen.config, "Pool/agent config file")->required();
  gen_cmd->add_option("--out", gen.out, "Pool file to write")->required();
  gen_cmd->add_option("--seed", gen.seed, "Master seed (overrides the config)");

  ValidateOpts val;
  auto* val_cmd = app.add_subcommand("validate", "Check a pool file and list every finding");
  val_cmd->add_option("--pool", val.pool)->required();
  val_cmd->add_flag("--strict", val.strict, "Reject unknown fields");

  ProcureOpts pro;
  auto* pro_cmd = app.add_subcommand("procure", "Run budgeted VickreyFeedback auctions on a pool");
  pro_cmd->add_option("--pool", pro.pool)->required();
  pro_cmd->add_option("--agents", pro.agents, "Agent config file (strategies); default truthful");
  pro_cmd->add_option("--budget", pro.budget)->required();
  pro_cmd->add_option("--out", pro.out, "Auction log to write")->required();
  pro_cmd->add_option("--seed", pro.seed)->capture_default_str();
  pro_cmd->add_option("--quality", pro.quality)
      ->check(CLI::IsMember({"token_length", "overall_score"}))
      ->capture_default_str();
  pro_cmd->add_option("--tokenizer", pro.tokenizer)
      ->check(CLI::IsMember({"default", "field"}))
      ->capture_default_str();
  pro_cmd->add_flag("--strict", pro.strict);

  BuildOpts bld;
  auto* bld_cmd = app.add_subcommand("build", "Build a vanilla or Vickrey preference dataset");
  bld_cmd->add_option("--pool", bld.pool)->required();
  bld_cmd->add_option("--mode", bld.mode, "vanilla | vickrey")->required();
  bld_cmd->add_option("--subsample", bld.subsample, "Fraction kept, in (0, 1]")
      ->capture_default_str();
  bld_cmd->add_option("--seed", bld.seed);
  bld_cmd->add_option("--pool-id", bld.pool_id, "Provenance id (default: digest prefix)");
  bld_cmd->add_option("--out", bld.out)->required();
  bld_cmd->add_flag("--strict", bld.strict);

  CostOpts cst;
  auto* cst_cmd = app.add_subcommand("cost", "Cumulative response-token cost of a dataset");
  cst_cmd->add_option("--dataset", cst.dataset)->required();
  cst_cmd->add_option("--price-per-token", cst.price)->capture_default_str();
  cst_cmd->add_option("--tokenizer", cst.tokenizer)
      ->check(CLI::IsMember({"default", "field"}))
      ->capture_default_str();
  cst_cmd->add_option("--out", cst.out)->required();

  StatsOpts sts;
  auto* sts_cmd = app.add_subcommand("stats", "Source-model and score histograms of a dataset");
  sts_cmd->add_option("--dataset", sts.dataset)->required();
  sts_cmd->add_option("--source-out", sts.source_out)->required();
  sts_cmd->add_option("--score-out", sts.score_out)->required();
  sts_cmd->add_option("--edges", sts.edges, "Comma-separated bin edges")->capture_default_str();
  sts_cmd->add_option("--threshold", sts.threshold)->capture_default_str();

  InitModelOpts ini;
  auto* ini_cmd = app.add_subcommand("init-model", "Write an untrained (uniform) base model");
  ini_cmd->add_option("--vocab", ini.vocab)->capture_default_str();
  ini_cmd->add_option("--contexts", ini.contexts)->capture_default_str();
  ini_cmd->add_option("--hash-seed", ini.hash_seed)->capture_default_str();
  ini_cmd->add_option("--out", ini.out)->required();

  TrainOpts trn;
  vk_train_config_default(&trn.cfg);
  auto* trn_cmd = app.add_subcommand("train", "Train a policy with DPO or QA-DPO");
  trn_cmd->add_option("--dataset", trn.dataset)->required();
  trn_cmd->add_option("--base", trn.base, "Initial and reference model")->required();
  trn_cmd->add_option("--algorithm", trn.algorithm, "dpo | qa_dpo")->capture_default_str();
  trn_cmd->add_option("--beta", trn.cfg.beta)->capture_default_str();
  trn_cmd->add_option("--lr", trn.cfg.learning_rate)->capture_default_str();
  trn_cmd->add_option("--epochs", trn.cfg.epochs)->capture_default_str();
  trn_cmd->add_option("--batch-size", trn.cfg.batch_size)->capture_default_str();
  trn_cmd->add_option("--quality-scale", trn.cfg.quality_scale)->capture_default_str();
  trn_cmd->add_option("--seed", trn.cfg.seed)->capture_default_str();
  trn_cmd->add_option("--trace", trn.trace, "Loss trace CSV");
  trn_cmd->add_option("--out", trn.out)->required();

  EvalOpts evl;
  auto* evl_cmd = app.add_subcommand("eval", "Pairwise win-rate matrix between models");
  evl_cmd->add_option("--model", evl.models, "LABEL=PATH (repeat; first is the baseline)");
  evl_cmd->add_option("--instructions", evl.instructions, "Pool file supplying instructions")
      ->required();
  evl_cmd->add_option("--judge", evl.judge)->capture_default_str();
  evl_cmd->add_option("--noise-sd", evl.noise_sd)->capture_default_str();
  evl_cmd->add_option("--seed", evl.seed)->capture_default_str();
  evl_cmd->add_option("--max-len", evl.max_len)->capture_default_str();
  evl_cmd->add_option("--limit", evl.limit, "Use the first N instructions (0 = all)")
      ->capture_default_str();
  evl_cmd->add_option("--out", evl.out, "Win-rate matrix CSV")->required();
  evl_cmd->add_option("--verdicts", evl.verdicts, "Verdict log");

  DeviationOpts dev;
  auto* dev_cmd = app.add_subcommand("deviation", "Empirical truthfulness test");
  dev_cmd->add_option("--agent", dev.agents, "ID=TRUE_VALUE (repeat)");
  dev_cmd->add_option("--mechanism", dev.mechanism)->capture_default_str();
  dev_cmd->add_option("--grid", dev.grid, "Comma-separated bid grid")->capture_default_str();
  dev_cmd->add_option("--trials", dev.trials)->capture_default_str();
  dev_cmd->add_option("--rivals", dev.rivals)->capture_default_str();
  dev_cmd->add_option("--kappa", dev.kappa)->capture_default_str();
  dev_cmd->add_flag("--exhaustive", dev.exhaustive, "Enumerate every rival profile");
  dev_cmd->add_option("--seed", dev.seed)->capture_default_str();
  dev_cmd->add_option("--out", dev.out)->required();

  EfficiencyOpts eff;
  auto* eff_cmd = app.add_subcommand("efficiency", "Cost-efficiency table of training runs");
  eff_cmd->add_option("--run", eff.runs, "LABEL,COST,WIN_RATE (repeat)")->required();
  eff_cmd->add_option("--out", eff.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd) return cmd_gen_pool(gen);
    if (*val_cmd) return cmd_validate(val);
    if (*pro_cmd) return cmd_procure(pro);
    if (*bld_cmd) return cmd_build(bld);
    if (*cst_cmd) return cmd_cost(cst);
    if (*sts_cmd) return cmd_stats(sts);
    if (*ini_cmd) return cmd_init_model(ini);
    if (*trn_cmd) return cmd_train(trn);
    if (*evl_cmd) return cmd_eval(evl);
    if (*dev_cmd) return cmd_deviation(dev);
    if (*eff_cmd) return cmd_efficiency(eff);
  } catch (const Failure& f) {
    std::cerr << "vickrey: " << f.message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "vickrey: internal error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
