#include "vickrey/suppliers.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "test_support.hpp"
#include "vickrey/cost.hpp"
#include "vickrey/error.hpp"

using vickrey::Strategy;

namespace {

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

vickrey::AgentConfig agent(std::string id, Strategy s = Strategy::truthful()) {
  vickrey::AgentConfig a;
  a.agent_id = std::move(id);
  a.length_mean = 120.0;
  a.length_dispersion = 0.3;
  a.strategy = s;
  a.vocab_profile = vickrey::tilted_vocab_profile(16, 0.5);
  return a;
}

std::string pool_bytes(const vickrey::ResponsePool& pool) {
  std::ostringstream out;
  vickrey::serialize_pool(pool, out);
  return out.str();
}

}  // namespace

TEST(Strategy, ParseAndFormat) {
  EXPECT_EQ(vickrey::parse_strategy("truthful"), Strategy::truthful());
  EXPECT_EQ(vickrey::parse_strategy("underbid:0.5"), Strategy::underbid(0.5));
  EXPECT_EQ(vickrey::parse_strategy("overbid_capped:0.8"), Strategy::overbid_capped(0.8));
  EXPECT_EQ(vickrey::parse_strategy("random_in:1:9"), Strategy::random_in(1, 9));
  for (const char* text : {"truthful", "underbid:0.25", "overbid_capped:1", "random_in:0:2.5"}) {
    EXPECT_EQ(vickrey::parse_strategy(vickrey::to_string(vickrey::parse_strategy(text))),
              vickrey::parse_strategy(text));
  }
}

TEST(Strategy, InvalidSpecsRejected) {
  for (const char* bad : {"", "lying", "underbid", "underbid:0", "underbid:1.5", "overbid_capped:-1",
                          "random_in:5:1", "random_in:-1:2", "underbid:abc"}) {
    EXPECT_THROW(vickrey::parse_strategy(bad), vickrey::Error) << bad;
  }
}

TEST(Strategy, ClosedFormTransformations) {
  vickrey::Rng rng(1);
  EXPECT_EQ(vickrey::apply_strategy(Strategy::truthful(), 120, rng), 120.0);
  EXPECT_EQ(vickrey::apply_strategy(Strategy::underbid(0.5), 120, rng), 60.0);
  EXPECT_EQ(vickrey::apply_strategy(Strategy::overbid_capped(0.5), 120, rng), 240.0);
  for (int i = 0; i < 1000; ++i) {
    const double q = vickrey::apply_strategy(Strategy::random_in(2, 7), 120, rng);
    ASSERT_GE(q, 2.0);
    ASSERT_LT(q, 7.0);
  }
}

TEST(VocabProfile, TiltedProfileIsDistributionAndMonotone) {
  for (double tilt : {-2.0, 0.0, 1.5}) {
    const auto p = vickrey::tilted_vocab_profile(32, tilt);
    ASSERT_EQ(p.size(), 32u);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (std::size_t k = 1; k < p.size(); ++k) {
      if (tilt > 0) { EXPECT_GT(p[k], p[k - 1]); }
      if (tilt < 0) { EXPECT_LT(p[k], p[k - 1]); }
      if (tilt == 0) { EXPECT_DOUBLE_EQ(p[k], p[0]); }
    }
  }
}

TEST(VocabProfile, TokenQualityEndpoints) {
  EXPECT_EQ(vickrey::vocab_token(7), "t7");
  EXPECT_EQ(vickrey::synthetic_token_quality(0, 32), 1.0);
  EXPECT_EQ(vickrey::synthetic_token_quality(31, 32), 5.0);
  const std::vector<std::uint32_t> seq{0, 31};
  EXPECT_EQ(vickrey::synthetic_sequence_quality(seq, 32), 3.0);
  EXPECT_EQ(vickrey::synthetic_sequence_quality({}, 32), 1.0);
}

TEST(AgentRespond, DeclarationFollowsStrategyOfTrueLength) {
  for (const Strategy& s : {Strategy::truthful(), Strategy::underbid(0.5), Strategy::overbid_capped(0.75)}) {
    const auto a = agent("x", s);
    for (int t = 0; t < 50; ++t) {
      vickrey::Rng rng(vickrey::respond_stream_seed(4, "x", vickrey::instruction_id_for(t)));
      const auto bid = vickrey::agent_respond(a, rng);
      ASSERT_TRUE(bid.response.token_count.has_value());
      const auto length = *bid.response.token_count;
      ASSERT_GE(length, 1u);
      EXPECT_EQ(vickrey::count_tokens_default(bid.response.text), length);
      vickrey::Rng unused(0);
      EXPECT_EQ(bid.declared_quality, vickrey::apply_strategy(s, static_cast<double>(length), unused));
      EXPECT_EQ(bid.valuation, bid.declared_quality);
      EXPECT_EQ(bid.agent_id, "x");
    }
  }
}

TEST(AgentRespond, SameStreamSameBid) {
  const auto a = agent("x", Strategy::random_in(1, 100));
  vickrey::Rng r1(vickrey::respond_stream_seed(9, "x", "inst-000003"));
  vickrey::Rng r2(vickrey::respond_stream_seed(9, "x", "inst-000003"));
  const auto b1 = vickrey::agent_respond(a, r1);
  const auto b2 = vickrey::agent_respond(a, r2);
  EXPECT_EQ(b1.response, b2.response);
  EXPECT_EQ(b1.declared_quality, b2.declared_quality);
}

TEST(SyntheticPool, ShapeAndEmpty) {
  vickrey::SyntheticPoolConfig cfg;
  cfg.agents = {agent("a"), agent("b")};
  cfg.n_instructions = 0;
  EXPECT_TRUE(vickrey::generate_synthetic_pool(cfg).entries.empty());

  cfg.n_instructions = 5;
  const auto pool = vickrey::generate_synthetic_pool(cfg);
  ASSERT_EQ(pool.entries.size(), 5u);
  for (const auto& e : pool.entries) {
    ASSERT_EQ(e.responses.size(), 2u);
    EXPECT_EQ(e.responses[0].source_model, "a");
    EXPECT_EQ(e.responses[1].source_model, "b");
  }
  EXPECT_TRUE(vickrey::validate_pool(pool).empty());
}

TEST(SyntheticPool, ByteIdenticalForSameSeed) {
  const auto cfg = vickrey::default_synthetic_config(200, 77);
  EXPECT_EQ(pool_bytes(vickrey::generate_synthetic_pool(cfg)),
            pool_bytes(vickrey::generate_synthetic_pool(cfg)));
  auto other = cfg;
  other.seed = 78;
  EXPECT_NE(pool_bytes(vickrey::generate_synthetic_pool(cfg)),
            pool_bytes(vickrey::generate_synthetic_pool(other)));
}

TEST(SyntheticPool, EntriesIndependentOfPoolSize) {
  // Per-(agent, instruction) streams: a prefix of a larger pool is the smaller pool.
  const auto small = vickrey::generate_synthetic_pool(vickrey::default_synthetic_config(20, 5));
  const auto large = vickrey::generate_synthetic_pool(vickrey::default_synthetic_config(60, 5));
  for (std::size_t i = 0; i < small.entries.size(); ++i) EXPECT_EQ(small.entries[i], large.entries[i]);
}

TEST(SyntheticPool, LengthScoreRankCorrelation) {
  const auto pool = vickrey::generate_synthetic_pool(vickrey::default_synthetic_config(500, 2024));
  std::vector<double> len, score;
  for (const auto& e : pool.entries) {
    for (const auto& r : e.responses) {
      ASSERT_GE(*r.token_count, 1u);
      len.push_back(static_cast<double>(*r.token_count));
      score.push_back(vickrey::overall_score(r.scores));
    }
  }
  EXPECT_GE(spearman(len, score), 0.5);
}

TEST(SpearmanOracle, KnownValues) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  // rho = 1 - 6 * sum d^2 / (n (n^2 - 1)) for d = (0, 1, -1, 0) gives 0.8.
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8, 1e-12);
}

TEST(SyntheticConfig, ValidationErrors) {
  auto cfg = vickrey::default_synthetic_config(10, 1);
  cfg.agents.resize(1);
  EXPECT_THROW(vickrey::validate(cfg), vickrey::Error);
  cfg = vickrey::default_synthetic_config(10, 1);
  cfg.agents[1].agent_id = cfg.agents[0].agent_id;
  EXPECT_THROW(vickrey::validate(cfg), vickrey::Error);
  auto a = agent("z");
  a.vocab_profile[0] += 0.1;
  EXPECT_THROW(vickrey::validate(a), vickrey::Error);
  a = agent("z");
  a.length_mean = 0;
  EXPECT_THROW(vickrey::validate(a), vickrey::Error);
}

TEST(SyntheticConfig, LoadsIniFile) {
  vktest::TempDir dir;
  vktest::write_text(dir / "pool.ini",
                     "[pool]\n"
                     "n_instructions = 12\n"
                     "seed = 99\n"
                     "vocab_size = 8\n"
                     "\n"
                     "[score_model]\n"
                     "slope = 1.5\n"
                     "\n"
                     "[agent.long]\n"
                     "length_mean = 300\n"
                     "length_dispersion = 0.2\n"
                     "strategy = underbid:0.5\n"
                     "vocab_tilt = 1.0\n"
                     "\n"
                     "[agent.short]\n"
                     "length_mean = 40\n"
                     "vocab_profile = 1,1,1,1,0,0,0,0\n");
  const auto cfg = vickrey::load_synthetic_config(dir / "pool.ini");
  EXPECT_EQ(cfg.n_instructions, 12u);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.score_model.slope, 1.5);
  EXPECT_EQ(cfg.score_model.intercept, vickrey::ScoreModel{}.intercept);
  ASSERT_EQ(cfg.agents.size(), 2u);
  EXPECT_EQ(cfg.agents[0].agent_id, "long");
  EXPECT_EQ(cfg.agents[0].strategy, Strategy::underbid(0.5));
  EXPECT_EQ(cfg.agents[0].vocab_profile.size(), 8u);
  EXPECT_EQ(cfg.agents[1].vocab_profile[0], 0.25);
  EXPECT_EQ(cfg.agents[1].vocab_profile[7], 0.0);
  EXPECT_EQ(vickrey::generate_synthetic_pool(cfg).entries.size(), 12u);
}

TEST(SyntheticConfig, UnknownKeyAndMissingFileAreConfigErrors) {
  vktest::TempDir dir;
  vktest::write_text(dir / "bad.ini", "[pool]\nn_instructions = 3\ncolour = red\n");
  try {
    vickrey::load_synthetic_config(dir / "bad.ini");
    FAIL();
  } catch (const vickrey::Error& e) {
    EXPECT_EQ(e.kind(), vickrey::ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
  EXPECT_THROW(vickrey::load_synthetic_config(dir / "missing.ini"), vickrey::Error);
}

TEST(SyntheticConfig, ShippedDefaultMatchesBuiltIn) {
  const auto loaded = vickrey::load_synthetic_config(VK_TEST_SOURCE_DIR "/config/default_pool.ini");
  const auto built = vickrey::default_synthetic_config(loaded.n_instructions, loaded.seed);
  EXPECT_EQ(pool_bytes(vickrey::generate_synthetic_pool(loaded)),
            pool_bytes(vickrey::generate_synthetic_pool(built)));
}
