#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vickrey/core.hpp"

namespace vickrey {

/// Tabular conditional categorical policy: one row of logits per instruction
/// bucket, tokens drawn i.i.d. from softmax(row). Exact likelihoods and
/// gradients make the DPO identities checkable to machine precision.
class PolicyModel {
 public:
  static constexpr std::size_t kMaxVocab = 64;

  /// All-zero logits (the uniform model). Throws Error(argument) for a vocab
  /// outside [1, 64] or zero contexts.
  PolicyModel(std::size_t vocab_size, std::size_t context_count, std::uint64_t hash_seed = 0);

  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::size_t context_count() const noexcept { return context_count_; }
  std::uint64_t hash_seed() const noexcept { return hash_seed_; }

  /// Bucket of an instruction: fnv1a64(x) seeded by hash_seed, mod context_count.
  std::size_t context_of(std::string_view instruction) const noexcept;

  std::span<double> row(std::size_t context);
  std::span<const double> row(std::size_t context) const;
  std::span<double> logits() noexcept { return logits_; }
  std::span<const double> logits() const noexcept { return logits_; }

  /// log-sum-exp of one row.
  double log_partition(std::size_t context) const;
  /// softmax(row(context)).
  std::vector<double> probabilities(std::size_t context) const;

  bool operator==(const PolicyModel&) const = default;

 private:
  std::size_t vocab_size_;
  std::size_t context_count_;
  std::uint64_t hash_seed_;
  std::vector<double> logits_;  // row-major context_count x vocab_size
};

/// Frozen copy of the policy taken before training.
class ReferenceModel {
 public:
  explicit ReferenceModel(PolicyModel model) : model_(std::move(model)) {}
  const PolicyModel& model() const noexcept { return model_; }

 private:
  const PolicyModel model_;
};

/// Maps text to token ids: default-tokenizer tokens of the form "t<k>" with
/// k < V map to k; every other token maps to fnv1a64(token) mod V.
std::vector<std::uint32_t> encode_text(std::string_view text, std::size_t vocab_size);

/// A preference sample resolved against a model's vocabulary and contexts.
struct EncodedSample {
  std::size_t context = 0;
  std::vector<std::uint32_t> accepted;
  std::vector<std::uint32_t> rejected;
  double b_accepted = 0.0;
  double b_rejected = 0.0;
};

std::vector<EncodedSample> encode_samples(std::span<const PreferenceSample> samples,
                                          const PolicyModel& model);

/// Sum over positions of log softmax(row)[token]. Throws Error(input) for a
/// token id >= vocab_size.
double log_likelihood(const PolicyModel& model, std::size_t context,
                      std::span<const std::uint32_t> tokens);
double log_likelihood(const PolicyModel& model, std::string_view instruction,
                      std::span<const std::uint32_t> tokens);

/// 0.5 + sigmoid(scale * (b_a - b_r)); scale defaults to the literal formula.
double qa_weight(double b_accepted, double b_rejected, double scale = 1.0) noexcept;

enum class Algorithm { dpo, qa_dpo };

const char* to_string(Algorithm a) noexcept;
std::optional<Algorithm> algorithm_from_string(std::string_view name) noexcept;

struct LossOptions {
  double beta = 0.1;
  Algorithm algorithm = Algorithm::dpo;
  double quality_scale = 1.0;  // applied to b_a - b_r before the sigmoid
};

/// beta * ([log pi(y_a) - log ref(y_a)] - [log pi(y_r) - log ref(y_r)]).
double preference_margin(const PolicyModel& model, const ReferenceModel& ref,
                         const EncodedSample& sample, double beta);

/// Mean of -log sigmoid(margin). Throws Error(argument) on an empty batch or
/// beta <= 0.
double dpo_loss(const PolicyModel& model, const ReferenceModel& ref,
                std::span<const EncodedSample> batch, double beta);

/// Mean of qa_weight(b_a, b_r) * -log sigmoid(margin).
double qa_dpo_loss(const PolicyModel& model, const ReferenceModel& ref,
                   std::span<const EncodedSample> batch, double beta,
                   double quality_scale = 1.0);

double preference_loss(const PolicyModel& model, const ReferenceModel& ref,
                       std::span<const EncodedSample> batch, const LossOptions& options);

/// Exact gradient of preference_loss with respect to the logits, laid out
/// like PolicyModel::logits().
std::vector<double> loss_gradient(const PolicyModel& model, const ReferenceModel& ref,
                                  std::span<const EncodedSample> batch,
                                  const LossOptions& options);

/// Max over logits with |analytic| > 1e-8 of |central difference - analytic| /
/// |analytic|; 0 when no entry passes the threshold. Throws Error(argument)
/// unless h > 0.
double finite_diff_check(const PolicyModel& model, const ReferenceModel& ref,
                         std::span<const EncodedSample> batch, const LossOptions& options,
                         double h);

struct TrainConfig {
  double beta = 0.1;
  Algorithm algorithm = Algorithm::dpo;
  double learning_rate = 0.05;
  std::size_t epochs = 2;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  double quality_scale = 1.0;
};

struct TraceRow {
  std::size_t epoch = 0;
  std::size_t step = 0;  // global step, counted from 0
  double loss = 0.0;     // minibatch loss before the update
};

struct TrainResult {
  PolicyModel model;
  std::vector<TraceRow> steps;
  std::vector<double> epoch_loss;  // mean of the step losses of each epoch
};

/// Plain gradient descent over seeded shuffled minibatches, with the reference
/// frozen at `initial`. Throws Error(training) naming the step on a non-finite
/// loss and Error(argument) on an empty dataset or invalid config.
TrainResult train(std::span<const EncodedSample> dataset, const PolicyModel& initial,
                  const TrainConfig& config);

/// Columns: epoch, step, loss, algorithm.
void write_trace_csv(std::span<const TraceRow> trace, Algorithm algorithm, std::ostream& out);

/// Versioned JSON checkpoint.
void write_checkpoint(const PolicyModel& model, std::ostream& out);
PolicyModel read_checkpoint(std::istream& in);

}  // namespace vickrey
