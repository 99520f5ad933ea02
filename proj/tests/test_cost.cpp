#include "vickrey/cost.hpp"

#include <gtest/gtest.h>

#include <cctype>
#include <random>
#include <sstream>

#include "test_support.hpp"
#include "vickrey/error.hpp"

using vickrey::count_tokens_default;
using vickrey::TokenizerMode;

namespace {

// ASCII-only oracle of the tokenizer rule.
std::uint64_t ascii_oracle(const std::string& s) {
  std::uint64_t n = 0;
  bool in_word = false;
  for (unsigned char c : s) {
    const bool word = std::isalnum(c) || c == '_';
    if (word) {
      if (!in_word) ++n;
      in_word = true;
      continue;
    }
    in_word = false;
    if (!std::isspace(c)) ++n;
  }
  return n;
}

std::string random_ascii(std::mt19937_64& gen, std::size_t max_len) {
  static const std::string alphabet = "ab_Z09 \t\n(),.;=+-!?'\"";
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s(len(gen), ' ');
  for (char& c : s) c = alphabet[pick(gen)];
  return s;
}

vickrey::PreferenceSample sample(std::string a, std::string r,
                                 std::optional<std::uint64_t> ca = std::nullopt,
                                 std::optional<std::uint64_t> cr = std::nullopt) {
  vickrey::PreferenceSample s;
  s.instruction_id = "s";
  s.instruction = "a long instruction that must not be counted";
  s.accepted = {"ma", std::move(a), 4.0, ca};
  s.rejected = {"mr", std::move(r), 3.0, cr};
  return s;
}

}  // namespace

TEST(CountTokens, SpecExamples) {
  EXPECT_EQ(count_tokens_default(""), 0u);
  EXPECT_EQ(count_tokens_default("hello world"), 2u);
  EXPECT_EQ(count_tokens_default("f(x)=y"), 6u);
}

TEST(CountTokens, HandTraces) {
  EXPECT_EQ(count_tokens_default("don't"), 3u);          // don ' t
  EXPECT_EQ(count_tokens_default("snake_case_42 x"), 2u);
  EXPECT_EQ(count_tokens_default("  \t\n "), 0u);
  EXPECT_EQ(count_tokens_default("a...b"), 5u);
}

TEST(CountTokens, UnicodeClasses) {
  EXPECT_EQ(count_tokens_default("h\xc3\xa9llo w\xc3\xb6rld"), 2u);    // accented letters join words
  EXPECT_EQ(count_tokens_default("\xe6\x97\xa5\xe6\x9c\xac"), 1u);      // two ideographs: one run
  EXPECT_EQ(count_tokens_default("ok \xf0\x9f\x91\x8d"), 2u);          // emoji is one symbol token
  EXPECT_EQ(count_tokens_default("a\xc2\xa0" "b"), 2u);                // no-break space separates
  EXPECT_EQ(count_tokens_default("\xd9\xa3\xd9\xa4"), 1u);             // Arabic-Indic digits
}

TEST(CountTokens, InvalidUtf8IsInputError) {
  for (const char* bad : {"\xff", "abc\xc3", "\xe6\x97", "\xc0\xaf"}) {
    try {
      count_tokens_default(bad);
      FAIL() << "accepted invalid UTF-8";
    } catch (const vickrey::Error& e) {
      EXPECT_EQ(e.kind(), vickrey::ErrorKind::input);
    }
  }
}

TEST(CountTokens, MatchesAsciiOracle) {
  std::mt19937_64 gen(23);
  for (int t = 0; t < 3000; ++t) {
    const std::string s = random_ascii(gen, 40);
    ASSERT_EQ(count_tokens_default(s), ascii_oracle(s)) << '"' << s << '"';
  }
}

TEST(CountTokens, WhitespaceConcatenationIsAdditive) {
  std::mt19937_64 gen(29);
  for (int t = 0; t < 2000; ++t) {
    const std::string a = random_ascii(gen, 20);
    const std::string b = random_ascii(gen, 20);
    ASSERT_EQ(count_tokens_default(a + " " + b), count_tokens_default(a) + count_tokens_default(b));
    ASSERT_EQ(count_tokens_default("  " + a + "\n"), count_tokens_default(a));
  }
}

TEST(CountTokens, VisitorYieldsTokenText) {
  std::vector<std::string> seen;
  vickrey::for_each_token_default("f(x) = y_1", [&](std::string_view t) { seen.emplace_back(t); });
  EXPECT_EQ(seen, (std::vector<std::string>{"f", "(", "x", ")", "=", "y_1"}));
}

TEST(SampleCost, Additivity) {
  // 10 and 7 tokens; the instruction is free.
  const auto s = sample("a b c d e f g h i j", "1 2 3 4 5 6 7");
  EXPECT_EQ(vickrey::sample_cost(s, TokenizerMode::default_rules), 17u);
}

TEST(SampleCost, FieldModePassthrough) {
  const auto s = sample("x", "y", 123, 456);
  EXPECT_EQ(vickrey::sample_cost(s, TokenizerMode::field), 579u);
  EXPECT_EQ(vickrey::sample_cost(s, TokenizerMode::default_rules), 2u);
}

TEST(SampleCost, FieldModeMissingCountNamesSample) {
  auto s = sample("x", "y", 5, std::nullopt);
  s.instruction_id = "inst-77";
  try {
    vickrey::sample_cost(s, TokenizerMode::field);
    FAIL();
  } catch (const vickrey::Error& e) {
    EXPECT_EQ(e.kind(), vickrey::ErrorKind::input);
    EXPECT_NE(std::string(e.what()).find("inst-77"), std::string::npos);
  }
}

TEST(DatasetCost, EmptyDataset) {
  const auto r = vickrey::dataset_cost({}, TokenizerMode::default_rules);
  EXPECT_EQ(r.total_tokens, 0u);
  EXPECT_TRUE(r.series.empty());
}

TEST(DatasetCost, ConstantSeries) {
  std::vector<vickrey::PreferenceSample> ds(3, sample("a b c", "d e"));
  const auto r = vickrey::dataset_cost(ds, TokenizerMode::default_rules);
  EXPECT_EQ(r.total_tokens, 15u);
  EXPECT_EQ(r.per_sample_mean, 5.0);
  const std::vector<vickrey::CostPoint> want{{1, 5}, {2, 10}, {3, 15}};
  EXPECT_EQ(r.series, want);
}

TEST(DatasetCost, PermutationAndMonotonicity) {
  std::mt19937_64 gen(31);
  std::vector<vickrey::PreferenceSample> ds;
  for (int i = 0; i < 40; ++i) ds.push_back(sample(random_ascii(gen, 30), random_ascii(gen, 30)));
  const auto base = vickrey::dataset_cost(ds, TokenizerMode::default_rules);

  std::uint64_t running = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    running += vickrey::sample_cost(ds[i], TokenizerMode::default_rules);
    ASSERT_EQ(base.series[i].n_samples, i + 1);
    ASSERT_EQ(base.series[i].cumulative_tokens, running);
    if (i > 0) { ASSERT_GE(base.series[i].cumulative_tokens, base.series[i - 1].cumulative_tokens); }
  }
  EXPECT_EQ(base.total_tokens, running);
  EXPECT_NEAR(base.per_sample_mean * static_cast<double>(ds.size()),
              static_cast<double>(base.total_tokens), 1e-9);

  std::shuffle(ds.begin(), ds.end(), gen);
  EXPECT_EQ(vickrey::dataset_cost(ds, TokenizerMode::default_rules).total_tokens, base.total_tokens);
}

TEST(CostCsv, ColumnsAndDollars) {
  std::vector<vickrey::PreferenceSample> ds(2, sample("a b c", "d e"));
  std::ostringstream out;
  vickrey::write_cost_csv(vickrey::dataset_cost(ds, TokenizerMode::default_rules), 0.5, out);
  EXPECT_EQ(out.str(), "n_samples,cumulative_tokens,cumulative_dollars\n1,5,2.5\n2,10,5\n");
}

TEST(CostEfficiency, SortedByCostThenLabel) {
  const auto t = vickrey::cost_efficiency_table(
      {{"c", 30.0, 0.6}, {"b", 10.0, 0.55}, {"a", 10.0, 0.52}, {"d", 20.0, 0.7}});
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[0].label, "a");
  EXPECT_EQ(t[1].label, "b");
  EXPECT_EQ(t[2].label, "d");
  EXPECT_EQ(t[3].label, "c");
  EXPECT_EQ(vickrey::cost_efficiency_table({{"only", 1.0, 0.5}}).size(), 1u);
}

TEST(CostEfficiency, RejectsInvalidRuns) {
  EXPECT_THROW(vickrey::cost_efficiency_table({{"x", -1.0, 0.5}}), vickrey::Error);
  EXPECT_THROW(vickrey::cost_efficiency_table({{"x", 1.0, 1.5}}), vickrey::Error);
}

TEST(CostEfficiency, CsvColumns) {
  std::ostringstream out;
  vickrey::write_efficiency_csv(vickrey::cost_efficiency_table({{"r", 12.0, 0.625}}), out);
  EXPECT_EQ(out.str(), "label,cost,win_rate\nr,12,0.625\n");
}
