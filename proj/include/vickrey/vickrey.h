/*
 * C interface to the VickreyFeedback toolkit.
 *
 * Objects are opaque handles created by vk_*_read / _new / _build functions
 * and released with the matching vk_*_free. Every fallible call returns a
 * vk_status; on failure vk_last_error() holds a message for the calling
 * thread until its next failing call. Output pointers are written only on
 * VK_OK.
 */
#ifndef VICKREY_VICKREY_H
#define VICKREY_VICKREY_H

#include <stddef.h>
#include <stdint.h>

#if defined(VK_BUILDING_LIBRARY)
#define VK_API __attribute__((visibility("default")))
#else
#define VK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vk_status {
  VK_OK = 0,
  VK_ERR_PARSE = 1,
  VK_ERR_VALIDATION = 2,
  VK_ERR_ARGUMENT = 3,
  VK_ERR_INPUT = 4,
  VK_ERR_CONFIG = 5,
  VK_ERR_TRAINING = 6,
  VK_ERR_INVARIANT = 7,
  VK_ERR_IO = 8,
  VK_ERR_INTERNAL = 9
} vk_status;

typedef struct vk_pool vk_pool;
typedef struct vk_sim_config vk_sim_config;
typedef struct vk_dataset vk_dataset;
typedef struct vk_model vk_model;

VK_API const char* vk_version(void);
VK_API const char* vk_status_name(vk_status status);
VK_API const char* vk_last_error(void);

/* Lower-case hex SHA-256 of a file; out_hex receives 64 chars plus NUL. */
VK_API vk_status vk_file_sha256(const char* path, char out_hex[65]);

/* ---- response pools ------------------------------------------------------ */

enum {
  VK_POOL_STRICT = 1,      /* unknown fields are parse errors */
  VK_POOL_NO_VALIDATE = 2  /* skip invariant checks; use vk_pool_validate */
};

VK_API vk_status vk_pool_read(const char* path, unsigned flags, vk_pool** out);
VK_API vk_status vk_pool_write(const vk_pool* pool, const char* path);
VK_API size_t vk_pool_size(const vk_pool* pool);
/* Unknown-field warnings collected while reading in non-strict mode. */
VK_API size_t vk_pool_warning_count(const vk_pool* pool);
/* Runs the invariant checks; findings stay readable via vk_pool_finding. */
VK_API vk_status vk_pool_validate(vk_pool* pool, size_t* n_findings);
VK_API const char* vk_pool_finding(const vk_pool* pool, size_t index);
VK_API void vk_pool_free(vk_pool* pool);

/* ---- synthetic suppliers ------------------------------------------------- */

VK_API vk_status vk_sim_config_read(const char* path, vk_sim_config** out);
VK_API vk_status vk_sim_config_default(size_t n_instructions, uint64_t seed,
                                       vk_sim_config** out);
VK_API size_t vk_sim_config_agent_count(const vk_sim_config* cfg);
VK_API const char* vk_sim_config_agent_id(const vk_sim_config* cfg, size_t index);
VK_API double vk_sim_config_agent_length_mean(const vk_sim_config* cfg, size_t index);
VK_API uint64_t vk_sim_config_seed(const vk_sim_config* cfg);
VK_API void vk_sim_config_free(vk_sim_config* cfg);

/* seed_override may be NULL to use the config's seed. */
VK_API vk_status vk_pool_generate(const vk_sim_config* cfg, const uint64_t* seed_override,
                                  vk_pool** out);

/* ---- auctions ------------------------------------------------------------- */

typedef struct vk_auction_outcome {
  size_t winner_index;
  size_t runner_up_index;
  double unit_price;
  double total_payment;
} vk_auction_outcome;

VK_API vk_status vk_vickrey_feedback(const double* declared_qualities, size_t n,
                                     vk_auction_outcome* out);
VK_API vk_status vk_second_price(const double* bids, size_t n, size_t* winner_index,
                                 double* price);

typedef enum vk_quality_source {
  VK_QUALITY_TOKEN_LENGTH = 0,
  VK_QUALITY_OVERALL_SCORE = 1
} vk_quality_source;

typedef enum vk_tokenizer { VK_TOKENIZER_DEFAULT = 0, VK_TOKENIZER_FIELD = 1 } vk_tokenizer;

typedef struct vk_procurement_summary {
  size_t auctions;
  double spent;
  double budget;
  int stopped;        /* 1 if the budget halted procurement */
  size_t stopped_at;  /* valid when stopped */
} vk_procurement_summary;

/* agents may be NULL (every supplier bids truthfully). log_path may be NULL. */
VK_API vk_status vk_procure(const vk_pool* pool, const vk_sim_config* agents, double budget,
                            uint64_t seed, vk_quality_source quality, vk_tokenizer tokenizer,
                            const char* log_path, vk_procurement_summary* out);

typedef enum vk_mechanism {
  VK_MECH_VICKREY_FEEDBACK = 0,
  VK_MECH_SECOND_PRICE = 1
} vk_mechanism;

typedef struct vk_deviation_config {
  vk_mechanism mechanism;
  size_t trials;
  const double* bid_grid;
  size_t grid_size;
  uint64_t seed;
  size_t rivals;
  double kappa;
  int exhaustive;
} vk_deviation_config;

/* fractions_out (nullable) receives one dominance fraction per agent. */
VK_API vk_status vk_deviation_test(const char* const* agent_ids, const double* true_values,
                                   size_t n_agents, const vk_deviation_config* cfg,
                                   const char* csv_path, double* fractions_out);

/* ---- preference datasets ------------------------------------------------- */

typedef enum vk_policy { VK_POLICY_VANILLA = 0, VK_POLICY_VICKREY = 1 } vk_policy;

/* seed is required (non-NULL) for VK_POLICY_VANILLA and ignored otherwise. */
VK_API vk_status vk_dataset_build(const vk_pool* pool, vk_policy policy, const uint64_t* seed,
                                  const char* pool_id, vk_dataset** out);
VK_API vk_status vk_dataset_subsample(const vk_dataset* dataset, double ratio, uint64_t seed,
                                      vk_dataset** out);
VK_API vk_status vk_dataset_read(const char* path, vk_dataset** out);
VK_API vk_status vk_dataset_write(const vk_dataset* dataset, const char* path);
VK_API size_t vk_dataset_size(const vk_dataset* dataset);
VK_API vk_policy vk_dataset_policy(const vk_dataset* dataset);
VK_API void vk_dataset_free(vk_dataset* dataset);

VK_API vk_status vk_source_histogram_csv(const vk_dataset* dataset, const char* path,
                                         double* max_fraction);
VK_API vk_status vk_score_histogram_csv(const vk_dataset* dataset, const double* edges,
                                        size_t n_edges, const char* path);
VK_API vk_status vk_dataset_fraction_above(const vk_dataset* dataset, double threshold,
                                           double* out);
VK_API vk_status vk_dataset_mean_rejected_score(const vk_dataset* dataset, double* out);

/* ---- cost accounting ----------------------------------------------------- */

VK_API vk_status vk_count_tokens(const char* utf8, size_t length, uint64_t* out);

typedef struct vk_cost_summary {
  size_t n_samples;
  uint64_t total_tokens;
  double per_sample_mean;
  double total_dollars;
} vk_cost_summary;

/* csv_path may be NULL. */
VK_API vk_status vk_dataset_cost(const vk_dataset* dataset, vk_tokenizer tokenizer,
                                 double price_per_token, const char* csv_path,
                                 vk_cost_summary* out);

typedef struct vk_efficiency_run {
  const char* label;
  double cost;
  double win_rate;
} vk_efficiency_run;

VK_API vk_status vk_cost_efficiency_csv(const vk_efficiency_run* runs, size_t n,
                                        const char* csv_path);

/* ---- policy models and training ------------------------------------------ */

typedef enum vk_algorithm { VK_ALGO_DPO = 0, VK_ALGO_QA_DPO = 1 } vk_algorithm;

typedef struct vk_train_config {
  vk_algorithm algorithm;
  double beta;
  double learning_rate;
  size_t epochs;
  size_t batch_size;
  uint64_t seed;
  double quality_scale;
} vk_train_config;

VK_API void vk_train_config_default(vk_train_config* out);

VK_API vk_status vk_model_new(size_t vocab_size, size_t context_count, uint64_t hash_seed,
                              vk_model** out);
VK_API vk_status vk_model_read(const char* path, vk_model** out);
VK_API vk_status vk_model_write(const vk_model* model, const char* path);
VK_API size_t vk_model_vocab_size(const vk_model* model);
VK_API size_t vk_model_context_count(const vk_model* model);
VK_API void vk_model_free(vk_model* model);

VK_API double vk_qa_weight(double b_accepted, double b_rejected);

/* Loss of `model` against the frozen `reference` over the whole dataset. */
VK_API vk_status vk_loss(const vk_model* model, const vk_model* reference,
                         const vk_dataset* dataset, vk_algorithm algorithm, double beta,
                         double quality_scale, double* out);

/* trace_csv_path and final_epoch_loss may be NULL. */
VK_API vk_status vk_train(const vk_dataset* dataset, const vk_model* initial,
                          const vk_train_config* cfg, const char* trace_csv_path,
                          vk_model** out, double* final_epoch_loss);

/* ---- evaluation ---------------------------------------------------------- */

typedef enum vk_verdict { VK_VERDICT_A_WINS = 0, VK_VERDICT_B_WINS = 1, VK_VERDICT_TIE = 2 } vk_verdict;

VK_API vk_status vk_win_rate(const vk_verdict* verdicts, size_t n, double* out);

typedef enum vk_judge_mode {
  VK_JUDGE_ORACLE_SCORE = 0,
  VK_JUDGE_NOISY_ORACLE = 1,
  VK_JUDGE_LENGTH_PREFERRING = 2
} vk_judge_mode;

typedef struct vk_judge_config {
  vk_judge_mode mode;
  double noise_sd;
  uint64_t seed;
} vk_judge_config;

/*
 * Pairwise evaluation of n models on the instructions of `instructions`
 * (the first max_instructions entries; 0 means all). matrix_out (nullable)
 * receives n*n row-major win rates; csv and log paths may be NULL.
 */
VK_API vk_status vk_evaluate(const vk_model* const* models, const char* const* labels, size_t n,
                             const vk_pool* instructions, size_t max_instructions,
                             const vk_judge_config* judge, uint64_t seed, size_t max_len,
                             const char* matrix_csv_path, const char* verdict_log_path,
                             double* matrix_out);

#ifdef __cplusplus
}
#endif

#endif /* VICKREY_VICKREY_H */
