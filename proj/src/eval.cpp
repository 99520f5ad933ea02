#include "vickrey/eval.hpp"

#include <algorithm>
#include <ostream>

#include "json.hpp"
#include "vickrey/error.hpp"
#include "vickrey/suppliers.hpp"
#include "vickrey/util.hpp"

namespace vickrey {

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::a_wins: return "A_wins";
    case Verdict::b_wins: return "B_wins";
    case Verdict::tie: return "tie";
  }
  return "tie";
}

Verdict mirror(Verdict v) noexcept {
  if (v == Verdict::a_wins) return Verdict::b_wins;
  if (v == Verdict::b_wins) return Verdict::a_wins;
  return Verdict::tie;
}

const char* to_string(JudgeMode m) noexcept {
  switch (m) {
    case JudgeMode::oracle_score: return "oracle_score";
    case JudgeMode::noisy_oracle: return "noisy_oracle";
    case JudgeMode::length_preferring: return "length_preferring";
  }
  return "oracle_score";
}

std::optional<JudgeMode> judge_mode_from_string(std::string_view name) noexcept {
  if (name == "oracle_score") return JudgeMode::oracle_score;
  if (name == "noisy_oracle") return JudgeMode::noisy_oracle;
  if (name == "length_preferring") return JudgeMode::length_preferring;
  return std::nullopt;
}

std::vector<std::uint32_t> generate_response(const PolicyModel& model,
                                             std::string_view instruction, std::size_t max_len,
                                             Rng& stream) {
  if (max_len == 0) throw Error(ErrorKind::argument, "max_len must be at least 1");
  const auto p = model.probabilities(model.context_of(instruction));
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) cdf[k] = (acc += p[k]);

  std::vector<std::uint32_t> tokens(max_len);
  for (auto& t : tokens) {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), stream.uniform() * acc);
    if (it == cdf.end()) --it;
    t = static_cast<std::uint32_t>(it - cdf.begin());
  }
  return tokens;
}

namespace {

Verdict compare(double a, double b) {
  if (a > b) return Verdict::a_wins;
  if (b > a) return Verdict::b_wins;
  return Verdict::tie;
}

}  // namespace

Verdict judge_pair(const JudgeConfig& judge, std::string_view /*instruction*/,
                   std::span<const std::uint32_t> response_a,
                   std::span<const std::uint32_t> response_b,
                   const std::optional<GroundTruth>& ground_truth, std::uint64_t pair_index) {
  switch (judge.mode) {
    case JudgeMode::length_preferring:
      return compare(static_cast<double>(response_a.size()),
                     static_cast<double>(response_b.size()));
    case JudgeMode::oracle_score:
    case JudgeMode::noisy_oracle:
      break;
  }
  if (!ground_truth) {
    throw Error(ErrorKind::config, std::string(to_string(judge.mode)) +
                                       " judge needs ground-truth scores");
  }
  if (judge.mode == JudgeMode::oracle_score || judge.noise_sd == 0.0) {
    return compare(ground_truth->first, ground_truth->second);
  }
  if (!(judge.noise_sd >= 0.0)) throw Error(ErrorKind::config, "noise_sd must be >= 0");
  Rng stream(derive_seed(judge.seed, {"judge", std::to_string(pair_index)}));
  const double a = ground_truth->first + judge.noise_sd * stream.normal();
  const double b = ground_truth->second + judge.noise_sd * stream.normal();
  return compare(a, b);
}

double win_rate(std::span<const Verdict> verdicts) {
  if (verdicts.empty()) throw Error(ErrorKind::argument, "win rate of an empty verdict list");
  std::size_t wins = 0;
  std::size_t ties = 0;
  for (Verdict v : verdicts) {
    wins += v == Verdict::a_wins;
    ties += v == Verdict::tie;
  }
  return (static_cast<double>(wins) + 0.5 * static_cast<double>(ties)) /
         static_cast<double>(verdicts.size());
}

QualityOracle synthetic_quality_oracle() {
  return [](std::span<const std::uint32_t> tokens, const PolicyModel& model) {
    return synthetic_sequence_quality(tokens, model.vocab_size());
  };
}

WinRateMatrix win_rate_matrix(std::span<const LabeledModel> models,
                              std::span<const EvalInstruction> instructions,
                              const JudgeConfig& judge, const EvalOptions& options,
                              const QualityOracle& quality) {
  if (models.size() < 2) throw Error(ErrorKind::argument, "need at least 2 models to compare");
  if (instructions.empty()) throw Error(ErrorKind::argument, "no evaluation instructions");

  const std::size_t n = models.size();
  WinRateMatrix m;
  for (const LabeledModel& lm : models) m.labels.push_back(lm.label);

  // score[i*n+j] counts wins of i over j plus half ties.
  std::vector<double> score(n * n, 0.0);
  const std::size_t pairs_per_instruction = n * (n - 1) / 2;

  for (std::size_t t = 0; t < instructions.size(); ++t) {
    const EvalInstruction& ins = instructions[t];
    std::vector<std::vector<std::uint32_t>> responses(n);
    std::vector<double> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      Rng stream(derive_seed(options.seed, {"generate", ins.instruction_id}));
      responses[i] = generate_response(*models[i].model, ins.text, options.max_len, stream);
      truth[i] = quality(responses[i], *models[i].model);
    }
    std::size_t pair = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j, ++pair) {
        const std::uint64_t pair_index = t * pairs_per_instruction + pair;
        const Verdict v = judge_pair(judge, ins.text, responses[i], responses[j],
                                     GroundTruth{truth[i], truth[j]}, pair_index);
        m.verdicts.push_back(VerdictRecord{ins.instruction_id, m.labels[i], m.labels[j], v});
        const double si = v == Verdict::a_wins ? 1.0 : v == Verdict::tie ? 0.5 : 0.0;
        score[i * n + j] += si;
      }
    }
  }

  const double count = static_cast<double>(instructions.size());
  m.values.assign(n * n, 0.5);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      m.values[i * n + j] = score[i * n + j] / count;
      m.values[j * n + i] = 1.0 - m.values[i * n + j];
    }
  }
  return m;
}

void write_matrix_csv(const WinRateMatrix& matrix, std::ostream& out) {
  out << "model";
  for (const std::string& l : matrix.labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
    out << matrix.labels[i];
    for (std::size_t j = 0; j < matrix.labels.size(); ++j) {
      out << ',' << format_double(matrix.at(i, j));
    }
    out << '\n';
  }
}

void write_verdict_log(std::span<const VerdictRecord> verdicts, std::ostream& out) {
  for (const VerdictRecord& r : verdicts) {
    nlohmann::ordered_json j;
    j["instruction_id"] = r.instruction_id;
    j["model_a"] = r.model_a;
    j["model_b"] = r.model_b;
    j["verdict"] = to_string(r.verdict);
    out << j.dump() << '\n';
  }
}

}  // namespace vickrey
