#include "vickrey/auction.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "test_support.hpp"
#include "vickrey/error.hpp"
#include "vickrey/suppliers.hpp"

using vickrey::AuctionOutcome;
using vickrey::run_vickrey_feedback;

namespace {

AuctionOutcome vf(std::vector<double> q) { return run_vickrey_feedback(std::span<const double>(q)); }

// Textbook second-price utility written out longhand, subject first.
double spa_oracle(double value, double bid, const std::vector<double>& rivals) {
  double best_rival = -1.0;
  for (double r : rivals) best_rival = std::max(best_rival, r);
  if (bid >= best_rival) return value - best_rival;  // index 0 wins ties
  return 0.0;
}

vickrey::AuctionRound round_with(std::vector<double> q, std::string id = "r") {
  vickrey::AuctionRound r{std::move(id), {}};
  for (std::size_t i = 0; i < q.size(); ++i) {
    r.bids.push_back({"a" + std::to_string(i), vktest::response("a" + std::to_string(i), "t", 3), q[i], q[i]});
  }
  return r;
}

}  // namespace

TEST(VickreyFeedback, SpecExamples) {
  auto o = vf({10, 7, 5, 3});
  EXPECT_EQ(o.winner_index, 0u);
  EXPECT_EQ(o.runner_up_index, 1u);
  EXPECT_EQ(o.unit_price, 7.0);
  EXPECT_EQ(o.total_payment, 14.0);

  o = vf({4, 4});
  EXPECT_EQ(o.winner_index, 0u);
  EXPECT_EQ(o.runner_up_index, 1u);
  EXPECT_EQ(o.total_payment, 8.0);

  o = vf({0, 0, 9});
  EXPECT_EQ(o.winner_index, 2u);
  EXPECT_EQ(o.runner_up_index, 0u);
  EXPECT_EQ(o.unit_price, 0.0);
  EXPECT_EQ(o.total_payment, 0.0);
}

TEST(VickreyFeedback, ArityAndDomainErrors) {
  EXPECT_THROW(vf({}), vickrey::Error);
  EXPECT_THROW(vf({3}), vickrey::Error);
  EXPECT_THROW(vf({3, -1}), vickrey::Error);
  EXPECT_THROW(vf({3, std::nan("")}), vickrey::Error);
}

TEST(VickreyFeedback, RandomProfilesAgreeWithSortOracle) {
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<int> n_dist(2, 8);
  std::uniform_real_distribution<double> q_dist(0.0, 500.0);
  for (int t = 0; t < 5000; ++t) {
    std::vector<double> q(static_cast<std::size_t>(n_dist(gen)));
    for (double& x : q) x = t % 3 == 0 ? std::floor(q_dist(gen) / 100.0) : q_dist(gen);
    const auto o = vf(q);
    const auto want = vktest::sorted_top_two(q);
    ASSERT_EQ(o.winner_index, want.first);
    ASSERT_EQ(o.runner_up_index, want.second);
    ASSERT_NE(o.winner_index, o.runner_up_index);
    ASSERT_EQ(o.unit_price, q[want.second]);
    ASSERT_EQ(o.total_payment, 2.0 * o.unit_price);
  }
}

TEST(VickreyFeedback, AllocationMonotonicity) {
  // Raising one declaration never deselects it; 4 agents over a 6-level grid.
  const std::vector<double> grid{0, 1, 2, 3, 4, 5};
  std::vector<std::size_t> d(4, 0);
  std::size_t checked = 0;
  while (true) {
    std::vector<double> q(4);
    for (std::size_t i = 0; i < 4; ++i) q[i] = grid[d[i]];
    const auto base = vf(q);
    for (std::size_t i = 0; i < 4; ++i) {
      const bool selected = base.winner_index == i || base.runner_up_index == i;
      if (!selected) continue;
      for (double up : grid) {
        if (up <= q[i]) continue;
        auto raised = q;
        raised[i] = up;
        const auto o = vf(raised);
        ASSERT_TRUE(o.winner_index == i || o.runner_up_index == i);
        ++checked;
      }
    }
    std::size_t pos = 0;
    while (pos < 4 && ++d[pos] == grid.size()) d[pos++] = 0;
    if (pos == 4) break;
  }
  EXPECT_GT(checked, 0u);
}

TEST(VickreyFeedback, WinnerPaymentInvariance) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> q{u(gen), u(gen), u(gen), u(gen)};
    const auto base = vf(q);
    const double qj = q[base.runner_up_index];
    auto moved = q;
    moved[base.winner_index] = qj + 1.0 + u(gen) * 100.0;
    const auto o = vf(moved);
    ASSERT_EQ(o.winner_index, base.winner_index);
    ASSERT_EQ(o.unit_price, base.unit_price);
    ASSERT_EQ(o.total_payment, base.total_payment);
  }
}

TEST(VickreyFeedback, SelectedPairFollowsIndices) {
  const auto round = round_with({1, 8, 6});
  const auto o = run_vickrey_feedback(std::span<const vickrey::SupplierBid>(round.bids));
  const auto [a, b] = vickrey::selected_pair(round.bids, o);
  EXPECT_EQ(a.source_model, "a1");
  EXPECT_EQ(b.source_model, "a2");
}

TEST(BudgetedProcurement, SpecHandTrace) {
  // Payments 14, 8, 8 under budget 20.
  const auto run = vickrey::run_budgeted_procurement(
      {round_with({10, 7, 5}), round_with({4, 4}), round_with({9, 4, 1})}, 20.0);
  ASSERT_EQ(run.outcomes.size(), 1u);
  EXPECT_EQ(run.spent, 14.0);
  EXPECT_EQ(run.stopped_at, 1u);
}

TEST(BudgetedProcurement, ZeroBudget) {
  auto run = vickrey::run_budgeted_procurement({round_with({3, 2}), round_with({1, 1})}, 0.0);
  EXPECT_TRUE(run.outcomes.empty());
  EXPECT_EQ(run.stopped_at, 0u);

  // A zero-priced auction fits a zero budget.
  run = vickrey::run_budgeted_procurement({round_with({3, 0}), round_with({1, 1})}, 0.0);
  EXPECT_EQ(run.outcomes.size(), 1u);
  EXPECT_EQ(run.stopped_at, 1u);
}

TEST(BudgetedProcurement, ExactBudgetConsumesPool) {
  const auto run = vickrey::run_budgeted_procurement(
      {round_with({10, 7}), round_with({4, 4}), round_with({9, 1})}, 14.0 + 8.0 + 2.0);
  EXPECT_EQ(run.outcomes.size(), 3u);
  EXPECT_FALSE(run.stopped_at.has_value());
  EXPECT_EQ(run.spent, 24.0);
}

TEST(BudgetedProcurement, NegativeBudgetRejected) {
  EXPECT_THROW(vickrey::run_budgeted_procurement({round_with({1, 2})}, -1.0), vickrey::Error);
}

TEST(BudgetedProcurement, SpentNeverExceedsBudget) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<vickrey::AuctionRound> rounds;
    double sum = 0.0;
    for (int i = 0; i < 20; ++i) {
      rounds.push_back(round_with({u(gen), u(gen), u(gen)}));
      sum += 2.0 * vf({rounds.back().bids[0].declared_quality, rounds.back().bids[1].declared_quality,
                       rounds.back().bids[2].declared_quality})
                       .unit_price;
    }
    const double budget = u(gen) * 20.0;
    const auto run = vickrey::run_budgeted_procurement(rounds, budget);
    ASSERT_LE(run.spent, budget);
    double recomputed = 0.0;
    for (const auto& rec : run.outcomes) recomputed += rec.outcome.total_payment;
    ASSERT_EQ(recomputed, run.spent);
    if (!run.stopped_at) { ASSERT_LE(sum, budget + 1e-9); }
  }
}

TEST(BudgetedProcurement, FromPoolUsesTokenLengthAndStrategies) {
  vickrey::ResponsePool pool;
  pool.entries.push_back({"i0", "x", {vktest::response("alpha", "a b c d", 2),
                                      vktest::response("beta", "a b", 4),
                                      vktest::response("gamma", "a b c", 3)}});
  vickrey::ProcurementOptions opts;
  opts.budget = 1e9;
  auto run = vickrey::run_budgeted_procurement(pool, {}, opts);
  ASSERT_EQ(run.outcomes.size(), 1u);
  EXPECT_EQ(run.outcomes[0].outcome.winner_index, 0u);
  EXPECT_EQ(run.outcomes[0].outcome.unit_price, 3.0);

  opts.quality = vickrey::QualitySource::overall_score;
  run = vickrey::run_budgeted_procurement(pool, {}, opts);
  EXPECT_EQ(run.outcomes[0].outcome.winner_index, 1u);
  EXPECT_EQ(run.outcomes[0].outcome.unit_price, 3.0);

  // alpha underbids to half its length and drops to runner-up, tied with beta.
  vickrey::AgentConfig alpha;
  alpha.agent_id = "alpha";
  alpha.strategy = vickrey::Strategy::underbid(0.5);
  opts.quality = vickrey::QualitySource::token_length;
  run = vickrey::run_budgeted_procurement(pool, {alpha}, opts);
  EXPECT_EQ(run.outcomes[0].bids[0].declared_quality, 2.0);
  EXPECT_EQ(run.outcomes[0].outcome.winner_index, 2u);
  EXPECT_EQ(run.outcomes[0].outcome.runner_up_index, 0u);
}

TEST(BudgetedProcurement, AuctionLogFields) {
  const auto run = vickrey::run_budgeted_procurement({round_with({10, 7, 5}, "inst-1")}, 100.0);
  std::ostringstream out;
  vickrey::write_auction_log(run, out);
  const auto j = nlohmann::ordered_json::parse(out.str());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"instruction_id", "bids", "winner_index",
                                            "runner_up_index", "unit_price", "total_payment"}));
  EXPECT_EQ(j["bids"][1]["agent_id"], "a1");
  EXPECT_EQ(j["bids"][1]["declared_quality"], 7.0);
  EXPECT_EQ(j["total_payment"], 14.0);
}

TEST(SecondPrice, SpecExamples) {
  using R = vickrey::SecondPriceResult;
  EXPECT_EQ(vickrey::second_price_auction(std::vector<double>{3, 9, 5}), (R{1, 5}));
  EXPECT_EQ(vickrey::second_price_auction(std::vector<double>{7, 7}), (R{0, 7}));
  EXPECT_EQ(vickrey::second_price_auction(std::vector<double>{0, 0}), (R{0, 0}));
  EXPECT_THROW(vickrey::second_price_auction(std::vector<double>{1}), vickrey::Error);
}

TEST(SpaUtility, SpecExamples) {
  EXPECT_EQ(vickrey::spa_utility(10, 10, std::vector<double>{6}), 4.0);
  EXPECT_EQ(vickrey::spa_utility(10, 5, std::vector<double>{6}), 0.0);
  EXPECT_EQ(vickrey::spa_utility(3.5, 3.5, std::vector<double>{3.5}), 0.0);
}

TEST(SpaUtility, MatchesLonghandOracle) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> lvl(0, 6);
  for (int t = 0; t < 5000; ++t) {
    std::vector<double> rivals(1 + t % 4);
    for (double& r : rivals) r = lvl(gen);
    const double v = lvl(gen), b = lvl(gen);
    ASSERT_EQ(vickrey::spa_utility(v, b, rivals), spa_oracle(v, b, rivals));
  }
}

TEST(SpaUtility, TruthfulDominatesOnSevenLevelGrid) {
  // Oracle-side brute force over every profile of up to 4 rivals.
  const std::vector<double> grid{0, 1, 2, 3, 4, 5, 6};
  for (std::size_t n_rivals = 1; n_rivals <= 4; ++n_rivals) {
    std::vector<std::size_t> d(n_rivals, 0);
    while (true) {
      std::vector<double> rivals(n_rivals);
      for (std::size_t r = 0; r < n_rivals; ++r) rivals[r] = grid[d[r]];
      for (double v : grid) {
        const double truthful = spa_oracle(v, v, rivals);
        for (double b : grid) ASSERT_GE(truthful, spa_oracle(v, b, rivals));
        ASSERT_EQ(vickrey::spa_utility(v, v, rivals), truthful);
      }
      std::size_t pos = 0;
      while (pos < n_rivals && ++d[pos] == grid.size()) d[pos++] = 0;
      if (pos == n_rivals) break;
    }
  }
}

TEST(VickreyFeedbackUtility, PaymentMinusEffort) {
  const std::vector<double> rivals{6, 2};
  // Selected as winner, paid the runner-up quality 6.
  EXPECT_EQ(vickrey::vickrey_feedback_utility(8, 8, rivals, 0.0), 6.0);
  // Selected as runner-up, paid its own declaration.
  EXPECT_EQ(vickrey::vickrey_feedback_utility(4, 4, rivals, 0.0), 4.0);
  // Not selected: pays effort only.
  EXPECT_EQ(vickrey::vickrey_feedback_utility(1, 1, rivals, 0.5), -0.5);
  EXPECT_EQ(vickrey::vickrey_feedback_utility(8, 8, rivals, 0.25), 4.0);
}

TEST(Deviation, SecondPriceExhaustiveIsFullyDominant) {
  vickrey::DeviationConfig cfg;
  cfg.mechanism = vickrey::Mechanism::second_price;
  for (int k = 0; k <= 10; ++k) cfg.bid_grid.push_back(k);
  cfg.rivals = 3;
  cfg.exhaustive = true;
  for (int v = 0; v <= 10; ++v) {
    const auto row = vickrey::deviation_test({"agent", static_cast<double>(v)}, cfg);
    EXPECT_EQ(row.trials, 11u * 11u * 11u);
    EXPECT_EQ(row.deviations, row.trials * 10u);
    EXPECT_EQ(row.dominance_fraction, 1.0);
  }
}

TEST(Deviation, VickreyFeedbackZeroRivalsIsWeaklyDominant) {
  vickrey::DeviationConfig cfg;
  cfg.mechanism = vickrey::Mechanism::vickrey_feedback;
  cfg.bid_grid = {0, 1, 2, 3, 4, 5};
  cfg.rivals = 1;
  cfg.kappa = 0.0;
  cfg.trials = 1;
  // Grid {0} for rivals: enumerate by hand with a one-level rival grid.
  for (double v : cfg.bid_grid) {
    for (double b : cfg.bid_grid) {
      EXPECT_GE(vickrey::vickrey_feedback_utility(v, v, std::vector<double>{0}, 0.0),
                vickrey::vickrey_feedback_utility(v, b, std::vector<double>{0}, 0.0));
    }
  }
}

TEST(Deviation, SingletonGridIsVacuous) {
  vickrey::DeviationConfig cfg;
  cfg.mechanism = vickrey::Mechanism::vickrey_feedback;
  cfg.bid_grid = {4.0};
  cfg.trials = 1;
  const auto row = vickrey::deviation_test({"a", 4.0}, cfg);
  EXPECT_EQ(row.deviations, 0u);
  EXPECT_EQ(row.dominance_fraction, 1.0);
}

TEST(Deviation, SampledRunsAreReproducibleAndCounted) {
  vickrey::DeviationConfig cfg;
  cfg.mechanism = vickrey::Mechanism::vickrey_feedback;
  cfg.bid_grid = {1, 2, 3, 4, 5};
  cfg.trials = 200;
  cfg.seed = 9;
  cfg.kappa = 0.1;
  const std::vector<vickrey::DeviationAgent> agents{{"a", 3.0}, {"b", 5.0}};
  const auto r1 = vickrey::deviation_test(agents, cfg);
  const auto r2 = vickrey::deviation_test(agents, cfg);
  ASSERT_EQ(r1.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r1[i].trials, 200u);
    EXPECT_EQ(r1[i].deviations, 800u);
    EXPECT_EQ(r1[i].truthful_not_worse, r2[i].truthful_not_worse);
    EXPECT_GE(r1[i].dominance_fraction, 0.0);
    EXPECT_LE(r1[i].dominance_fraction, 1.0);
  }
  std::ostringstream out;
  vickrey::write_deviation_csv(r1, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "agent_id,mechanism,trials,deviations,dominance_fraction");
}

TEST(Deviation, EmptyGridRejected) {
  vickrey::DeviationConfig cfg;
  EXPECT_THROW(vickrey::deviation_test({"a", 1.0}, cfg), vickrey::Error);
}
