#include "vickrey/cost.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cmath>
#include <ostream>

#include "vickrey/error.hpp"
#include "vickrey/util.hpp"

namespace vickrey {

namespace {

bool is_word_char(UChar32 c) { return c == '_' || u_isalnum(c); }

}  // namespace

void for_each_token_default(std::string_view text,
                            const std::function<void(std::string_view)>& visit) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  std::int32_t i = 0;
  std::int32_t word_start = -1;
  while (i < length) {
    const std::int32_t start = i;
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) {
      throw Error(ErrorKind::input, "invalid UTF-8 at byte offset " + std::to_string(start));
    }
    if (is_word_char(c)) {
      if (word_start < 0) word_start = start;
      continue;
    }
    if (word_start >= 0) {
      visit(text.substr(word_start, start - word_start));
      word_start = -1;
    }
    if (!u_isUWhiteSpace(c)) visit(text.substr(start, i - start));
  }
  if (word_start >= 0) visit(text.substr(word_start));
}

std::uint64_t count_tokens_default(std::string_view text) {
  std::uint64_t n = 0;
  for_each_token_default(text, [&n](std::string_view) { ++n; });
  return n;
}

namespace {

template <typename Response>
std::uint64_t tokens_of(const Response& r, TokenizerMode mode, std::string_view owner) {
  if (mode == TokenizerMode::default_rules) return count_tokens_default(r.text);
  if (!r.token_count) {
    throw Error(ErrorKind::input, "token_count missing for response of model '" +
                                      r.source_model + "' in " + std::string(owner));
  }
  return *r.token_count;
}

}  // namespace

std::uint64_t response_tokens(const SampleResponse& r, TokenizerMode mode,
                              std::string_view owner) {
  return tokens_of(r, mode, owner);
}

std::uint64_t response_tokens(const CandidateResponse& r, TokenizerMode mode,
                              std::string_view owner) {
  return tokens_of(r, mode, owner);
}

std::uint64_t sample_cost(const PreferenceSample& sample, TokenizerMode mode) {
  const std::string owner = "sample '" + sample.instruction_id + "'";
  return response_tokens(sample.accepted, mode, owner) +
         response_tokens(sample.rejected, mode, owner);
}

CostReport dataset_cost(std::span<const PreferenceSample> samples, TokenizerMode mode) {
  CostReport report;
  report.series.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    report.total_tokens += sample_cost(samples[i], mode);
    report.series.push_back(CostPoint{i + 1, report.total_tokens});
  }
  if (!samples.empty()) {
    report.per_sample_mean =
        static_cast<double>(report.total_tokens) / static_cast<double>(samples.size());
  }
  return report;
}

void write_cost_csv(const CostReport& report, double price_per_token, std::ostream& out) {
  out << "n_samples,cumulative_tokens,cumulative_dollars\n";
  for (const CostPoint& p : report.series) {
    out << p.n_samples << ',' << p.cumulative_tokens << ','
        << format_double(static_cast<double>(p.cumulative_tokens) * price_per_token) << '\n';
  }
}

std::vector<EfficiencyRun> cost_efficiency_table(std::vector<EfficiencyRun> runs) {
  for (const EfficiencyRun& r : runs) {
    if (!(r.cost >= 0.0) || !std::isfinite(r.cost)) {
      throw Error(ErrorKind::argument, "run '" + r.label + "': cost must be non-negative");
    }
    if (!(r.win_rate >= 0.0 && r.win_rate <= 1.0)) {
      throw Error(ErrorKind::argument, "run '" + r.label + "': win rate must lie in [0, 1]");
    }
  }
  std::stable_sort(runs.begin(), runs.end(), [](const EfficiencyRun& a, const EfficiencyRun& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.label < b.label;
  });
  return runs;
}

void write_efficiency_csv(std::span<const EfficiencyRun> table, std::ostream& out) {
  out << "label,cost,win_rate\n";
  for (const EfficiencyRun& r : table) {
    out << r.label << ',' << format_double(r.cost) << ',' << format_double(r.win_rate) << '\n';
  }
}

}  // namespace vickrey
