#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vickrey/core.hpp"

namespace vickrey {

/// Default tokenizer.
///
/// Scans UTF-8 text code point by code point:
///   - a maximal run of alphanumeric (Unicode letter or decimal digit) or
///     '_' code points is one token;
///   - every other code point that is not Unicode White_Space is one token;
///   - White_Space code points separate tokens and count zero.
/// Invalid UTF-8 throws Error(input).
std::uint64_t count_tokens_default(std::string_view text);

/// Same scan as count_tokens_default, reporting each token's byte range.
void for_each_token_default(std::string_view text,
                            const std::function<void(std::string_view)>& visit);

enum class TokenizerMode {
  default_rules,  // count_tokens_default over the text
  field,          // replay the response's precomputed token_count
};

/// Tokens of one response. In field mode a missing token_count throws
/// Error(input) naming `owner`.
std::uint64_t response_tokens(const SampleResponse& r, TokenizerMode mode,
                              std::string_view owner = {});
std::uint64_t response_tokens(const CandidateResponse& r, TokenizerMode mode,
                              std::string_view owner = {});

/// tokens(accepted) + tokens(rejected); the instruction is free.
std::uint64_t sample_cost(const PreferenceSample& sample, TokenizerMode mode);

struct CostPoint {
  std::size_t n_samples = 0;
  std::uint64_t cumulative_tokens = 0;

  bool operator==(const CostPoint&) const = default;
};

struct CostReport {
  std::uint64_t total_tokens = 0;
  double per_sample_mean = 0.0;
  std::vector<CostPoint> series;  // one point per sample, in dataset order
};

CostReport dataset_cost(std::span<const PreferenceSample> samples, TokenizerMode mode);

/// Columns: n_samples, cumulative_tokens, cumulative_dollars.
void write_cost_csv(const CostReport& report, double price_per_token, std::ostream& out);

struct EfficiencyRun {
  std::string label;
  double cost = 0.0;
  double win_rate = 0.0;
};

/// Sorts runs ascending by cost, equal costs by label. Negative cost or a win
/// rate outside [0, 1] throws Error(argument).
std::vector<EfficiencyRun> cost_efficiency_table(std::vector<EfficiencyRun> runs);

/// Columns: label, cost, win_rate.
void write_efficiency_csv(std::span<const EfficiencyRun> table, std::ostream& out);

}  // namespace vickrey
