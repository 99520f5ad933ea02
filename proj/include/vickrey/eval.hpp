#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vickrey/qa_dpo.hpp"
#include "vickrey/rng.hpp"

namespace vickrey {

enum class Verdict { a_wins, b_wins, tie };

const char* to_string(Verdict v) noexcept;
Verdict mirror(Verdict v) noexcept;

enum class JudgeMode { oracle_score, noisy_oracle, length_preferring };

const char* to_string(JudgeMode m) noexcept;
std::optional<JudgeMode> judge_mode_from_string(std::string_view name) noexcept;

struct JudgeConfig {
  JudgeMode mode = JudgeMode::oracle_score;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

/// Ancestral sampling of max_len tokens from the instruction's row. Throws
/// Error(argument) for max_len == 0.
std::vector<std::uint32_t> generate_response(const PolicyModel& model,
                                             std::string_view instruction, std::size_t max_len,
                                             Rng& stream);

/// Ground-truth quality scores (a, b) of the two responses.
using GroundTruth = std::pair<double, double>;

/// Verdict for response A against response B.
///   oracle_score:      compares ground truth; exact equality is a tie.
///   noisy_oracle:      adds N(0, noise_sd) to each score from the sub-stream
///                      of (judge.seed, pair_index), then compares.
///   length_preferring: longer response wins.
/// Oracle modes without ground truth throw Error(config).
Verdict judge_pair(const JudgeConfig& judge, std::string_view instruction,
                   std::span<const std::uint32_t> response_a,
                   std::span<const std::uint32_t> response_b,
                   const std::optional<GroundTruth>& ground_truth, std::uint64_t pair_index = 0);

/// (A wins + ties / 2) / n. Throws Error(argument) for an empty list.
double win_rate(std::span<const Verdict> verdicts);

/// Quality of a generated response under the synthetic world.
using QualityOracle =
    std::function<double(std::span<const std::uint32_t> tokens, const PolicyModel& model)>;

QualityOracle synthetic_quality_oracle();

struct LabeledModel {
  std::string label;
  const PolicyModel* model = nullptr;
};

struct EvalInstruction {
  std::string instruction_id;
  std::string text;
};

struct VerdictRecord {
  std::string instruction_id;
  std::string model_a;
  std::string model_b;
  Verdict verdict = Verdict::tie;
};

struct WinRateMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;  // row-major; entry (i, j) = win rate of i against j
  std::vector<VerdictRecord> verdicts;

  double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }
};

struct EvalOptions {
  std::uint64_t seed = 0;
  std::size_t max_len = 32;
};

/// Every model answers every instruction from the same per-instruction
/// sub-stream; each unordered pair is judged once in index order and mirrored.
/// Throws Error(argument) for fewer than 2 models or no instructions.
WinRateMatrix win_rate_matrix(std::span<const LabeledModel> models,
                              std::span<const EvalInstruction> instructions,
                              const JudgeConfig& judge, const EvalOptions& options,
                              const QualityOracle& quality = synthetic_quality_oracle());

/// Header row and column of model labels.
void write_matrix_csv(const WinRateMatrix& matrix, std::ostream& out);

/// One JSON record per judged pair: instruction_id, model_a, model_b, verdict.
void write_verdict_log(std::span<const VerdictRecord> verdicts, std::ostream& out);

}  // namespace vickrey
