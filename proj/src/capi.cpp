#include "vickrey/vickrey.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>
#include <vector>

#include "vickrey/auction.hpp"
#include "vickrey/core.hpp"
#include "vickrey/cost.hpp"
#include "vickrey/dataset.hpp"
#include "vickrey/error.hpp"
#include "vickrey/eval.hpp"
#include "vickrey/qa_dpo.hpp"
#include "vickrey/suppliers.hpp"
#include "vickrey/util.hpp"

#ifndef VK_VERSION_STRING
#define VK_VERSION_STRING "0.0.0"
#endif

struct vk_pool {
  vickrey::ResponsePool pool;
  std::vector<std::string> warnings;
  std::vector<std::string> findings;
};

struct vk_sim_config {
  vickrey::SyntheticPoolConfig cfg;
};

struct vk_dataset {
  vickrey::PreferenceDataset ds;
};

struct vk_model {
  vickrey::PolicyModel model;
};

namespace {

thread_local std::string g_last_error;

vk_status status_of(vickrey::ErrorKind kind) {
  using vickrey::ErrorKind;
  switch (kind) {
    case ErrorKind::parse: return VK_ERR_PARSE;
    case ErrorKind::validation: return VK_ERR_VALIDATION;
    case ErrorKind::argument: return VK_ERR_ARGUMENT;
    case ErrorKind::input: return VK_ERR_INPUT;
    case ErrorKind::config: return VK_ERR_CONFIG;
    case ErrorKind::training: return VK_ERR_TRAINING;
    case ErrorKind::invariant: return VK_ERR_INVARIANT;
    case ErrorKind::io: return VK_ERR_IO;
  }
  return VK_ERR_INTERNAL;
}

vk_status fail(vk_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class F>
vk_status guard(F&& f) noexcept {
  try {
    f();
    return VK_OK;
  } catch (const vickrey::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(VK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(VK_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(VK_ERR_INTERNAL, "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw vickrey::Error(vickrey::ErrorKind::argument, what);
}

template <class Writer>
void write_file(const char* path, Writer&& w) {
  auto out = vickrey::open_output(path);
  w(out);
  out.flush();
  if (!out) throw vickrey::Error(vickrey::ErrorKind::io, std::string("write failed: ") + path);
}

vickrey::TokenizerMode tokenizer_of(vk_tokenizer t) {
  switch (t) {
    case VK_TOKENIZER_DEFAULT: return vickrey::TokenizerMode::default_rules;
    case VK_TOKENIZER_FIELD: return vickrey::TokenizerMode::field;
  }
  throw vickrey::Error(vickrey::ErrorKind::argument, "unknown tokenizer");
}

vickrey::Algorithm algorithm_of(vk_algorithm a) {
  switch (a) {
    case VK_ALGO_DPO: return vickrey::Algorithm::dpo;
    case VK_ALGO_QA_DPO: return vickrey::Algorithm::qa_dpo;
  }
  throw vickrey::Error(vickrey::ErrorKind::argument, "unknown algorithm");
}

}  // namespace

extern "C" {

const char* vk_version(void) { return VK_VERSION_STRING; }

const char* vk_status_name(vk_status status) {
  switch (status) {
    case VK_OK: return "ok";
    case VK_ERR_PARSE: return "parse";
    case VK_ERR_VALIDATION: return "validation";
    case VK_ERR_ARGUMENT: return "argument";
    case VK_ERR_INPUT: return "input";
    case VK_ERR_CONFIG: return "config";
    case VK_ERR_TRAINING: return "training";
    case VK_ERR_INVARIANT: return "invariant";
    case VK_ERR_IO: return "io";
    case VK_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* vk_last_error(void) { return g_last_error.c_str(); }

vk_status vk_file_sha256(const char* path, char out_hex[65]) {
  return guard([&] {
    require(path && out_hex, "null argument");
    const std::string hex = vickrey::sha256_file(path);
    std::memcpy(out_hex, hex.c_str(), 65);
  });
}

// ---- pools -----------------------------------------------------------------

vk_status vk_pool_read(const char* path, unsigned flags, vk_pool** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto p = std::make_unique<vk_pool>();
    auto in = vickrey::open_input(path);
    vickrey::ParseOptions opts;
    opts.strict = (flags & VK_POOL_STRICT) != 0;
    opts.warnings = &p->warnings;
    if (flags & VK_POOL_NO_VALIDATE) {
      p->pool = vickrey::read_pool_records(in, opts);
    } else {
      p->pool = vickrey::parse_pool(in, opts);
    }
    *out = p.release();
  });
}

vk_status vk_pool_write(const vk_pool* pool, const char* path) {
  return guard([&] {
    require(pool && path, "null argument");
    write_file(path, [&](std::ostream& o) { vickrey::serialize_pool(pool->pool, o); });
  });
}

size_t vk_pool_size(const vk_pool* pool) { return pool ? pool->pool.entries.size() : 0; }

size_t vk_pool_warning_count(const vk_pool* pool) { return pool ? pool->warnings.size() : 0; }

vk_status vk_pool_validate(vk_pool* pool, size_t* n_findings) {
  return guard([&] {
    require(pool && n_findings, "null argument");
    pool->findings.clear();
    for (const auto& f : vickrey::validate_pool(pool->pool)) {
      pool->findings.push_back(vickrey::format_finding(f));
    }
    *n_findings = pool->findings.size();
  });
}

const char* vk_pool_finding(const vk_pool* pool, size_t index) {
  if (!pool || index >= pool->findings.size()) return nullptr;
  return pool->findings[index].c_str();
}

void vk_pool_free(vk_pool* pool) { delete pool; }

// ---- synthetic suppliers ---------------------------------------------------

vk_status vk_sim_config_read(const char* path, vk_sim_config** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new vk_sim_config{vickrey::load_synthetic_config(path)};
  });
}

vk_status vk_sim_config_default(size_t n_instructions, uint64_t seed, vk_sim_config** out) {
  return guard([&] {
    require(out, "null argument");
    *out = new vk_sim_config{vickrey::default_synthetic_config(n_instructions, seed)};
  });
}

size_t vk_sim_config_agent_count(const vk_sim_config* cfg) {
  return cfg ? cfg->cfg.agents.size() : 0;
}

const char* vk_sim_config_agent_id(const vk_sim_config* cfg, size_t index) {
  if (!cfg || index >= cfg->cfg.agents.size()) return nullptr;
  return cfg->cfg.agents[index].agent_id.c_str();
}

double vk_sim_config_agent_length_mean(const vk_sim_config* cfg, size_t index) {
  if (!cfg || index >= cfg->cfg.agents.size()) return std::nan("");
  return cfg->cfg.agents[index].length_mean;
}

uint64_t vk_sim_config_seed(const vk_sim_config* cfg) { return cfg ? cfg->cfg.seed : 0; }

void vk_sim_config_free(vk_sim_config* cfg) { delete cfg; }

vk_status vk_pool_generate(const vk_sim_config* cfg, const uint64_t* seed_override,
                           vk_pool** out) {
  return guard([&] {
    require(cfg && out, "null argument");
    vickrey::SyntheticPoolConfig c = cfg->cfg;
    if (seed_override) c.seed = *seed_override;
    auto p = std::make_unique<vk_pool>();
    p->pool = vickrey::generate_synthetic_pool(c);
    *out = p.release();
  });
}

// ---- auctions --------------------------------------------------------------

vk_status vk_vickrey_feedback(const double* declared_qualities, size_t n,
                              vk_auction_outcome* out) {
  return guard([&] {
    require(out && (declared_qualities || n == 0), "null argument");
    const auto o = vickrey::run_vickrey_feedback(std::span<const double>(declared_qualities, n));
    *out = vk_auction_outcome{o.winner_index, o.runner_up_index, o.unit_price, o.total_payment};
  });
}

vk_status vk_second_price(const double* bids, size_t n, size_t* winner_index, double* price) {
  return guard([&] {
    require(winner_index && price && (bids || n == 0), "null argument");
    const auto r = vickrey::second_price_auction(std::span<const double>(bids, n));
    *winner_index = r.winner_index;
    *price = r.price;
  });
}

vk_status vk_procure(const vk_pool* pool, const vk_sim_config* agents, double budget,
                     uint64_t seed, vk_quality_source quality, vk_tokenizer tokenizer,
                     const char* log_path, vk_procurement_summary* out) {
  return guard([&] {
    require(pool && out, "null argument");
    vickrey::ProcurementOptions opts;
    opts.budget = budget;
    opts.seed = seed;
    switch (quality) {
      case VK_QUALITY_TOKEN_LENGTH: opts.quality = vickrey::QualitySource::token_length; break;
      case VK_QUALITY_OVERALL_SCORE: opts.quality = vickrey::QualitySource::overall_score; break;
      default: require(false, "unknown quality source");
    }
    opts.tokenizer = tokenizer_of(tokenizer);
    static const std::vector<vickrey::AgentConfig> kNoAgents;
    const auto run = vickrey::run_budgeted_procurement(pool->pool,
                                                       agents ? agents->cfg.agents : kNoAgents, opts);
    if (log_path) write_file(log_path, [&](std::ostream& o) { vickrey::write_auction_log(run, o); });
    out->auctions = run.outcomes.size();
    out->spent = run.spent;
    out->budget = run.budget;
    out->stopped = run.stopped_at ? 1 : 0;
    out->stopped_at = run.stopped_at.value_or(0);
  });
}

vk_status vk_deviation_test(const char* const* agent_ids, const double* true_values,
                            size_t n_agents, const vk_deviation_config* cfg,
                            const char* csv_path, double* fractions_out) {
  return guard([&] {
    require(cfg && (n_agents == 0 || (agent_ids && true_values)), "null argument");
    require(cfg->bid_grid || cfg->grid_size == 0, "null bid grid");
    vickrey::DeviationConfig c;
    switch (cfg->mechanism) {
      case VK_MECH_VICKREY_FEEDBACK: c.mechanism = vickrey::Mechanism::vickrey_feedback; break;
      case VK_MECH_SECOND_PRICE: c.mechanism = vickrey::Mechanism::second_price; break;
      default: require(false, "unknown mechanism");
    }
    c.trials = cfg->trials;
    c.bid_grid.assign(cfg->bid_grid, cfg->bid_grid + cfg->grid_size);
    c.seed = cfg->seed;
    c.rivals = cfg->rivals;
    c.kappa = cfg->kappa;
    c.exhaustive = cfg->exhaustive != 0;
    std::vector<vickrey::DeviationAgent> agents;
    for (size_t i = 0; i < n_agents; ++i) {
      require(agent_ids[i] != nullptr, "null agent id");
      agents.push_back({agent_ids[i], true_values[i]});
    }
    const auto rows = vickrey::deviation_test(agents, c);
    if (csv_path) write_file(csv_path, [&](std::ostream& o) { vickrey::write_deviation_csv(rows, o); });
    if (fractions_out) {
      for (size_t i = 0; i < rows.size(); ++i) fractions_out[i] = rows[i].dominance_fraction;
    }
  });
}

// ---- datasets --------------------------------------------------------------

vk_status vk_dataset_build(const vk_pool* pool, vk_policy policy, const uint64_t* seed,
                           const char* pool_id, vk_dataset** out) {
  return guard([&] {
    require(pool && out, "null argument");
    std::string id = pool_id ? pool_id : "";
    auto d = std::make_unique<vk_dataset>();
    switch (policy) {
      case VK_POLICY_VANILLA:
        require(seed != nullptr, "vanilla build requires a seed");
        d->ds = vickrey::build_vanilla(pool->pool, *seed, std::move(id));
        break;
      case VK_POLICY_VICKREY:
        d->ds = vickrey::build_vickrey(pool->pool, std::move(id));
        break;
      default: require(false, "unknown policy");
    }
    *out = d.release();
  });
}

vk_status vk_dataset_subsample(const vk_dataset* dataset, double ratio, uint64_t seed,
                               vk_dataset** out) {
  return guard([&] {
    require(dataset && out, "null argument");
    *out = new vk_dataset{vickrey::subsample(dataset->ds, ratio, seed)};
  });
}

vk_status vk_dataset_read(const char* path, vk_dataset** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto in = vickrey::open_input(path);
    *out = new vk_dataset{vickrey::read_dataset(in)};
  });
}

vk_status vk_dataset_write(const vk_dataset* dataset, const char* path) {
  return guard([&] {
    require(dataset && path, "null argument");
    write_file(path, [&](std::ostream& o) { vickrey::write_dataset(dataset->ds, o); });
  });
}

size_t vk_dataset_size(const vk_dataset* dataset) {
  return dataset ? dataset->ds.samples.size() : 0;
}

vk_policy vk_dataset_policy(const vk_dataset* dataset) {
  return dataset && dataset->ds.policy_tag == vickrey::PolicyTag::vickrey ? VK_POLICY_VICKREY
                                                                          : VK_POLICY_VANILLA;
}

void vk_dataset_free(vk_dataset* dataset) { delete dataset; }

vk_status vk_source_histogram_csv(const vk_dataset* dataset, const char* path,
                                  double* max_fraction) {
  return guard([&] {
    require(dataset, "null argument");
    const auto buckets = vickrey::source_distribution(dataset->ds.samples);
    if (path) write_file(path, [&](std::ostream& o) { vickrey::write_source_csv(buckets, o); });
    if (max_fraction) {
      double m = 0.0;
      for (const auto& b : buckets) m = std::max(m, b.fraction);
      *max_fraction = m;
    }
  });
}

vk_status vk_score_histogram_csv(const vk_dataset* dataset, const double* edges, size_t n_edges,
                                 const char* path) {
  return guard([&] {
    require(dataset && path && (edges || n_edges == 0), "null argument");
    const auto bins =
        vickrey::score_distribution(dataset->ds.samples, std::span<const double>(edges, n_edges));
    write_file(path, [&](std::ostream& o) { vickrey::write_score_csv(bins, o); });
  });
}

vk_status vk_dataset_fraction_above(const vk_dataset* dataset, double threshold, double* out) {
  return guard([&] {
    require(dataset && out, "null argument");
    *out = vickrey::fraction_above(dataset->ds.samples, threshold);
  });
}

vk_status vk_dataset_mean_rejected_score(const vk_dataset* dataset, double* out) {
  return guard([&] {
    require(dataset && out, "null argument");
    *out = vickrey::mean_rejected_score(dataset->ds.samples);
  });
}

// ---- cost ------------------------------------------------------------------

vk_status vk_count_tokens(const char* utf8, size_t length, uint64_t* out) {
  return guard([&] {
    require(out && (utf8 || length == 0), "null argument");
    *out = vickrey::count_tokens_default(std::string_view(utf8 ? utf8 : "", length));
  });
}

vk_status vk_dataset_cost(const vk_dataset* dataset, vk_tokenizer tokenizer,
                          double price_per_token, const char* csv_path, vk_cost_summary* out) {
  return guard([&] {
    require(dataset && out, "null argument");
    require(std::isfinite(price_per_token) && price_per_token >= 0.0,
            "price per token must be finite and >= 0");
    const auto report = vickrey::dataset_cost(dataset->ds.samples, tokenizer_of(tokenizer));
    if (csv_path) {
      write_file(csv_path,
                 [&](std::ostream& o) { vickrey::write_cost_csv(report, price_per_token, o); });
    }
    out->n_samples = dataset->ds.samples.size();
    out->total_tokens = report.total_tokens;
    out->per_sample_mean = report.per_sample_mean;
    out->total_dollars = static_cast<double>(report.total_tokens) * price_per_token;
  });
}

vk_status vk_cost_efficiency_csv(const vk_efficiency_run* runs, size_t n, const char* csv_path) {
  return guard([&] {
    require(csv_path && (runs || n == 0), "null argument");
    std::vector<vickrey::EfficiencyRun> v;
    for (size_t i = 0; i < n; ++i) {
      require(runs[i].label != nullptr, "null run label");
      v.push_back({runs[i].label, runs[i].cost, runs[i].win_rate});
    }
    const auto table = vickrey::cost_efficiency_table(std::move(v));
    write_file(csv_path, [&](std::ostream& o) { vickrey::write_efficiency_csv(table, o); });
  });
}

// ---- models and training ---------------------------------------------------

void vk_train_config_default(vk_train_config* out) {
  if (!out) return;
  const vickrey::TrainConfig d;
  out->algorithm = d.algorithm == vickrey::Algorithm::qa_dpo ? VK_ALGO_QA_DPO : VK_ALGO_DPO;
  out->beta = d.beta;
  out->learning_rate = d.learning_rate;
  out->epochs = d.epochs;
  out->batch_size = d.batch_size;
  out->seed = d.seed;
  out->quality_scale = d.quality_scale;
}

vk_status vk_model_new(size_t vocab_size, size_t context_count, uint64_t hash_seed,
                       vk_model** out) {
  return guard([&] {
    require(out, "null argument");
    *out = new vk_model{vickrey::PolicyModel(vocab_size, context_count, hash_seed)};
  });
}

vk_status vk_model_read(const char* path, vk_model** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto in = vickrey::open_input(path);
    *out = new vk_model{vickrey::read_checkpoint(in)};
  });
}

vk_status vk_model_write(const vk_model* model, const char* path) {
  return guard([&] {
    require(model && path, "null argument");
    write_file(path, [&](std::ostream& o) { vickrey::write_checkpoint(model->model, o); });
  });
}

size_t vk_model_vocab_size(const vk_model* model) { return model ? model->model.vocab_size() : 0; }

size_t vk_model_context_count(const vk_model* model) {
  return model ? model->model.context_count() : 0;
}

void vk_model_free(vk_model* model) { delete model; }

double vk_qa_weight(double b_accepted, double b_rejected) {
  return vickrey::qa_weight(b_accepted, b_rejected);
}

vk_status vk_loss(const vk_model* model, const vk_model* reference, const vk_dataset* dataset,
                  vk_algorithm algorithm, double beta, double quality_scale, double* out) {
  return guard([&] {
    require(model && reference && dataset && out, "null argument");
    const vickrey::ReferenceModel ref(reference->model);
    const auto batch = vickrey::encode_samples(dataset->ds.samples, model->model);
    vickrey::LossOptions opts;
    opts.beta = beta;
    opts.algorithm = algorithm_of(algorithm);
    opts.quality_scale = quality_scale;
    *out = vickrey::preference_loss(model->model, ref, batch, opts);
  });
}

vk_status vk_train(const vk_dataset* dataset, const vk_model* initial, const vk_train_config* cfg,
                   const char* trace_csv_path, vk_model** out, double* final_epoch_loss) {
  return guard([&] {
    require(dataset && initial && cfg && out, "null argument");
    vickrey::TrainConfig c;
    c.algorithm = algorithm_of(cfg->algorithm);
    c.beta = cfg->beta;
    c.learning_rate = cfg->learning_rate;
    c.epochs = cfg->epochs;
    c.batch_size = cfg->batch_size;
    c.seed = cfg->seed;
    c.quality_scale = cfg->quality_scale;
    const auto encoded = vickrey::encode_samples(dataset->ds.samples, initial->model);
    auto result = vickrey::train(encoded, initial->model, c);
    if (trace_csv_path) {
      write_file(trace_csv_path, [&](std::ostream& o) {
        vickrey::write_trace_csv(result.steps, c.algorithm, o);
      });
    }
    if (final_epoch_loss) {
      *final_epoch_loss = result.epoch_loss.empty() ? std::nan("") : result.epoch_loss.back();
    }
    *out = new vk_model{std::move(result.model)};
  });
}

// ---- evaluation ------------------------------------------------------------

vk_status vk_win_rate(const vk_verdict* verdicts, size_t n, double* out) {
  return guard([&] {
    require(out && (verdicts || n == 0), "null argument");
    std::vector<vickrey::Verdict> v;
    v.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      switch (verdicts[i]) {
        case VK_VERDICT_A_WINS: v.push_back(vickrey::Verdict::a_wins); break;
        case VK_VERDICT_B_WINS: v.push_back(vickrey::Verdict::b_wins); break;
        case VK_VERDICT_TIE: v.push_back(vickrey::Verdict::tie); break;
        default: require(false, "unknown verdict");
      }
    }
    *out = vickrey::win_rate(v);
  });
}

vk_status vk_evaluate(const vk_model* const* models, const char* const* labels, size_t n,
                      const vk_pool* instructions, size_t max_instructions,
                      const vk_judge_config* judge, uint64_t seed, size_t max_len,
                      const char* matrix_csv_path, const char* verdict_log_path,
                      double* matrix_out) {
  return guard([&] {
    require(instructions && judge && (n == 0 || (models && labels)), "null argument");
    std::vector<vickrey::LabeledModel> lm;
    for (size_t i = 0; i < n; ++i) {
      require(models[i] && labels[i], "null model or label");
      lm.push_back({labels[i], &models[i]->model});
    }
    std::vector<vickrey::EvalInstruction> ins;
    for (const auto& e : instructions->pool.entries) {
      if (max_instructions != 0 && ins.size() == max_instructions) break;
      ins.push_back({e.instruction_id, e.instruction});
    }
    vickrey::JudgeConfig j;
    switch (judge->mode) {
      case VK_JUDGE_ORACLE_SCORE: j.mode = vickrey::JudgeMode::oracle_score; break;
      case VK_JUDGE_NOISY_ORACLE: j.mode = vickrey::JudgeMode::noisy_oracle; break;
      case VK_JUDGE_LENGTH_PREFERRING: j.mode = vickrey::JudgeMode::length_preferring; break;
      default: require(false, "unknown judge mode");
    }
    j.noise_sd = judge->noise_sd;
    j.seed = judge->seed;
    vickrey::EvalOptions opts;
    opts.seed = seed;
    opts.max_len = max_len;
    const auto m = vickrey::win_rate_matrix(lm, ins, j, opts);
    if (matrix_csv_path) {
      write_file(matrix_csv_path, [&](std::ostream& o) { vickrey::write_matrix_csv(m, o); });
    }
    if (verdict_log_path) {
      write_file(verdict_log_path,
                 [&](std::ostream& o) { vickrey::write_verdict_log(m.verdicts, o); });
    }
    if (matrix_out) std::copy(m.values.begin(), m.values.end(), matrix_out);
  });
}

}  // extern "C"
