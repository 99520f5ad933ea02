#include "vickrey/qa_dpo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "vickrey/cost.hpp"
#include "vickrey/error.hpp"
#include "vickrey/rng.hpp"
#include "vickrey/util.hpp"

namespace vickrey {

PolicyModel::PolicyModel(std::size_t vocab_size, std::size_t context_count,
                         std::uint64_t hash_seed)
    : vocab_size_(vocab_size), context_count_(context_count), hash_seed_(hash_seed) {
  if (vocab_size == 0 || vocab_size > kMaxVocab) {
    throw Error(ErrorKind::argument, "vocab_size must lie in [1, 64]");
  }
  if (context_count == 0) throw Error(ErrorKind::argument, "context_count must be positive");
  logits_.assign(vocab_size * context_count, 0.0);
}

std::size_t PolicyModel::context_of(std::string_view instruction) const noexcept {
  return static_cast<std::size_t>(splitmix64(fnv1a64(instruction) ^ hash_seed_) %
                                  context_count_);
}

std::span<double> PolicyModel::row(std::size_t context) {
  return std::span<double>(logits_).subspan(context * vocab_size_, vocab_size_);
}

std::span<const double> PolicyModel::row(std::size_t context) const {
  return std::span<const double>(logits_).subspan(context * vocab_size_, vocab_size_);
}

double PolicyModel::log_partition(std::size_t context) const {
  const auto r = row(context);
  const double top = *std::max_element(r.begin(), r.end());
  double total = 0.0;
  for (double z : r) total += std::exp(z - top);
  return top + std::log(total);
}

std::vector<double> PolicyModel::probabilities(std::size_t context) const {
  const auto r = row(context);
  const double log_z = log_partition(context);
  std::vector<double> p(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) p[k] = std::exp(r[k] - log_z);
  return p;
}

std::vector<std::uint32_t> encode_text(std::string_view text, std::size_t vocab_size) {
  std::vector<std::uint32_t> ids;
  for_each_token_default(text, [&](std::string_view tok) {
    if (tok.size() > 1 && tok[0] == 't') {
      std::uint64_t k = 0;
      const char* first = tok.data() + 1;
      const char* last = tok.data() + tok.size();
      auto [ptr, ec] = std::from_chars(first, last, k);
      if (ec == std::errc() && ptr == last && k < vocab_size) {
        ids.push_back(static_cast<std::uint32_t>(k));
        return;
      }
    }
    ids.push_back(static_cast<std::uint32_t>(fnv1a64(tok) % vocab_size));
  });
  return ids;
}

std::vector<EncodedSample> encode_samples(std::span<const PreferenceSample> samples,
                                          const PolicyModel& model) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const PreferenceSample& s : samples) {
    out.push_back(EncodedSample{model.context_of(s.instruction),
                                encode_text(s.accepted.text, model.vocab_size()),
                                encode_text(s.rejected.text, model.vocab_size()),
                                s.b_accepted, s.b_rejected});
  }
  return out;
}

namespace {

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -log sigmoid(m) without overflow.
double neg_log_sigmoid(double m) noexcept {
  return std::max(-m, 0.0) + std::log1p(std::exp(-std::abs(m)));
}

double sequence_log_likelihood(const PolicyModel& model, std::size_t context, double log_z,
                               std::span<const std::uint32_t> tokens) {
  const auto r = model.row(context);
  double total = 0.0;
  for (std::uint32_t t : tokens) {
    if (t >= model.vocab_size()) {
      throw Error(ErrorKind::input, "token id " + std::to_string(t) + " outside vocabulary of " +
                                        std::to_string(model.vocab_size()));
    }
    total += r[t];
  }
  return total - static_cast<double>(tokens.size()) * log_z;
}

void check_compatible(const PolicyModel& model, const ReferenceModel& ref) {
  const PolicyModel& r = ref.model();
  if (r.vocab_size() != model.vocab_size() || r.context_count() != model.context_count()) {
    throw Error(ErrorKind::argument, "policy and reference shapes differ");
  }
}

void check_batch(std::size_t n, double beta) {
  if (n == 0) throw Error(ErrorKind::argument, "batch is empty");
  if (!(beta > 0.0)) throw Error(ErrorKind::argument, "beta must be positive");
}

std::vector<double> all_log_partitions(const PolicyModel& m) {
  std::vector<double> z(m.context_count());
  for (std::size_t c = 0; c < z.size(); ++c) z[c] = m.log_partition(c);
  return z;
}

// Loss (and optionally its gradient) over dataset[indices].
double evaluate(const PolicyModel& model, const ReferenceModel& ref,
                std::span<const EncodedSample> dataset, std::span<const std::size_t> indices,
                const LossOptions& options, std::vector<double>* grad) {
  check_batch(indices.size(), options.beta);
  check_compatible(model, ref);
  const auto log_z = all_log_partitions(model);
  const auto ref_log_z = all_log_partitions(ref.model());
  const std::size_t vocab = model.vocab_size();
  const double inv_n = 1.0 / static_cast<double>(indices.size());

  if (grad != nullptr) grad->assign(model.logits().size(), 0.0);
  std::vector<double> count_diff(vocab);

  double total = 0.0;
  for (std::size_t idx : indices) {
    const EncodedSample& s = dataset[idx];
    if (s.context >= model.context_count()) {
      throw Error(ErrorKind::input, "sample context outside the model's context table");
    }
    const double d_acc = sequence_log_likelihood(model, s.context, log_z[s.context], s.accepted) -
                         sequence_log_likelihood(ref.model(), s.context, ref_log_z[s.context],
                                                 s.accepted);
    const double d_rej = sequence_log_likelihood(model, s.context, log_z[s.context], s.rejected) -
                         sequence_log_likelihood(ref.model(), s.context, ref_log_z[s.context],
                                                 s.rejected);
    const double margin = options.beta * (d_acc - d_rej);
    const double w = options.algorithm == Algorithm::qa_dpo
                         ? qa_weight(s.b_accepted, s.b_rejected, options.quality_scale)
                         : 1.0;
    total += w * neg_log_sigmoid(margin);

    if (grad == nullptr) continue;
    // d/dz_k log pi(y) = count_y(k) - |y| p_k, so the margin gradient is
    // beta * [(count_a - count_r)(k) - (|y_a| - |y_r|) p_k].
    const double coef = -w * sigmoid(-margin) * options.beta * inv_n;
    std::fill(count_diff.begin(), count_diff.end(), 0.0);
    for (std::uint32_t t : s.accepted) count_diff[t] += 1.0;
    for (std::uint32_t t : s.rejected) count_diff[t] -= 1.0;
    const double len_diff =
        static_cast<double>(s.accepted.size()) - static_cast<double>(s.rejected.size());
    const auto r = model.row(s.context);
    double* g = grad->data() + s.context * vocab;
    for (std::size_t k = 0; k < vocab; ++k) {
      const double p = std::exp(r[k] - log_z[s.context]);
      g[k] += coef * (count_diff[k] - len_diff * p);
    }
  }
  return total * inv_n;
}

std::vector<std::size_t> identity_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

double log_likelihood(const PolicyModel& model, std::size_t context,
                      std::span<const std::uint32_t> tokens) {
  if (context >= model.context_count()) {
    throw Error(ErrorKind::input, "context outside the model's context table");
  }
  return sequence_log_likelihood(model, context, model.log_partition(context), tokens);
}

double log_likelihood(const PolicyModel& model, std::string_view instruction,
                      std::span<const std::uint32_t> tokens) {
  return log_likelihood(model, model.context_of(instruction), tokens);
}

double qa_weight(double b_accepted, double b_rejected, double scale) noexcept {
  return 0.5 + sigmoid(scale * (b_accepted - b_rejected));
}

const char* to_string(Algorithm a) noexcept { return a == Algorithm::qa_dpo ? "qa_dpo" : "dpo"; }

std::optional<Algorithm> algorithm_from_string(std::string_view name) noexcept {
  if (name == "dpo") return Algorithm::dpo;
  if (name == "qa_dpo") return Algorithm::qa_dpo;
  return std::nullopt;
}

double preference_margin(const PolicyModel& model, const ReferenceModel& ref,
                         const EncodedSample& sample, double beta) {
  check_compatible(model, ref);
  const double d_acc = log_likelihood(model, sample.context, sample.accepted) -
                       log_likelihood(ref.model(), sample.context, sample.accepted);
  const double d_rej = log_likelihood(model, sample.context, sample.rejected) -
                       log_likelihood(ref.model(), sample.context, sample.rejected);
  return beta * (d_acc - d_rej);
}

double dpo_loss(const PolicyModel& model, const ReferenceModel& ref,
                std::span<const EncodedSample> batch, double beta) {
  return preference_loss(model, ref, batch, LossOptions{beta, Algorithm::dpo, 1.0});
}

double qa_dpo_loss(const PolicyModel& model, const ReferenceModel& ref,
                   std::span<const EncodedSample> batch, double beta, double quality_scale) {
  return preference_loss(model, ref, batch, LossOptions{beta, Algorithm::qa_dpo, quality_scale});
}

double preference_loss(const PolicyModel& model, const ReferenceModel& ref,
                       std::span<const EncodedSample> batch, const LossOptions& options) {
  const auto idx = identity_indices(batch.size());
  return evaluate(model, ref, batch, idx, options, nullptr);
}

std::vector<double> loss_gradient(const PolicyModel& model, const ReferenceModel& ref,
                                  std::span<const EncodedSample> batch,
                                  const LossOptions& options) {
  const auto idx = identity_indices(batch.size());
  std::vector<double> grad;
  evaluate(model, ref, batch, idx, options, &grad);
  return grad;
}

double finite_diff_check(const PolicyModel& model, const ReferenceModel& ref,
                         std::span<const EncodedSample> batch, const LossOptions& options,
                         double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::argument, "step h must be positive");
  const auto analytic = loss_gradient(model, ref, batch, options);
  PolicyModel probe = model;
  auto theta = probe.logits();
  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (std::abs(analytic[i]) <= 1e-8) continue;
    const double saved = theta[i];
    theta[i] = saved + h;
    const double up = preference_loss(probe, ref, batch, options);
    theta[i] = saved - h;
    const double down = preference_loss(probe, ref, batch, options);
    theta[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(numeric - analytic[i]) / std::abs(analytic[i]));
  }
  return worst;
}

TrainResult train(std::span<const EncodedSample> dataset, const PolicyModel& initial,
                  const TrainConfig& config) {
  if (dataset.empty()) throw Error(ErrorKind::argument, "training dataset is empty");
  if (!(config.beta > 0.0)) throw Error(ErrorKind::argument, "beta must be positive");
  if (config.batch_size == 0) throw Error(ErrorKind::argument, "batch_size must be positive");
  if (!(config.learning_rate >= 0.0)) {
    throw Error(ErrorKind::argument, "learning_rate must be non-negative");
  }

  const ReferenceModel ref(initial);
  TrainResult result{initial, {}, {}};
  PolicyModel& model = result.model;
  const LossOptions options{config.beta, config.algorithm, config.quality_scale};

  std::vector<std::size_t> order = identity_indices(dataset.size());
  std::vector<double> grad;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng stream(derive_seed(config.seed, {"shuffle", std::to_string(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[stream.index(i)]);

    double epoch_total = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const double loss = evaluate(model, ref, dataset, batch, options, &grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::training, "non-finite loss at epoch " + std::to_string(epoch) +
                                             " step " + std::to_string(step));
      }
      auto theta = model.logits();
      for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= config.learning_rate * grad[k];
      result.steps.push_back(TraceRow{epoch, step, loss});
      epoch_total += loss;
      ++epoch_steps;
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(epoch_steps));
  }
  for (double z : model.logits()) {
    if (!std::isfinite(z)) {
      throw Error(ErrorKind::training, "non-finite logits after step " + std::to_string(step));
    }
  }
  return result;
}

void write_trace_csv(std::span<const TraceRow> trace, Algorithm algorithm, std::ostream& out) {
  out << "epoch,step,loss,algorithm\n";
  for (const TraceRow& r : trace) {
    out << r.epoch << ',' << r.step << ',' << format_double(r.loss) << ',' << to_string(algorithm)
        << '\n';
  }
}

namespace {
constexpr const char* kCheckpointFormat = "vickrey-policy";
constexpr int kCheckpointVersion = 1;
constexpr const char* kHashAlgorithm = "splitmix64(fnv1a64(x) ^ seed) mod context_count";
}  // namespace

void write_checkpoint(const PolicyModel& model, std::ostream& out) {
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["vocab_size"] = model.vocab_size();
  j["context_count"] = model.context_count();
  j["context_hash"] = {{"algorithm", kHashAlgorithm}, {"seed", model.hash_seed()}};
  j["logits"] = std::vector<double>(model.logits().begin(), model.logits().end());
  out << j.dump() << '\n';
}

PolicyModel read_checkpoint(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error(ErrorKind::parse, "checkpoint: unknown format");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorKind::parse, "checkpoint: unsupported version");
    }
    if (j.at("context_hash").at("algorithm").get<std::string>() != kHashAlgorithm) {
      throw Error(ErrorKind::parse, "checkpoint: unknown context hash");
    }
    PolicyModel model(j.at("vocab_size").get<std::size_t>(),
                      j.at("context_count").get<std::size_t>(),
                      j.at("context_hash").at("seed").get<std::uint64_t>());
    const auto logits = j.at("logits").get<std::vector<double>>();
    if (logits.size() != model.logits().size()) {
      throw Error(ErrorKind::parse, "checkpoint: logits table has the wrong size");
    }
    for (double z : logits) {
      if (!std::isfinite(z)) throw Error(ErrorKind::parse, "checkpoint: non-finite logit");
    }
    std::copy(logits.begin(), logits.end(), model.logits().begin());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("checkpoint: ") + e.what());
  }
}

}  // namespace vickrey
