#include "vickrey/auction.hpp"

#include <cmath>
#include <ostream>
#include <unordered_map>

#include "json.hpp"
#include "vickrey/error.hpp"
#include "vickrey/rng.hpp"
#include "vickrey/suppliers.hpp"
#include "vickrey/util.hpp"

namespace vickrey {

namespace {

void check_qualities(std::span<const double> q) {
  if (q.size() < 2) {
    throw Error(ErrorKind::argument,
                "auction needs at least 2 bids, got " + std::to_string(q.size()));
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] >= 0.0)) {
      throw Error(ErrorKind::argument,
                  "bid " + std::to_string(i) + " has a negative or NaN declared quality");
    }
  }
}

std::vector<double> declared_of(std::span<const SupplierBid> bids) {
  std::vector<double> q;
  q.reserve(bids.size());
  for (const SupplierBid& b : bids) q.push_back(b.declared_quality);
  return q;
}

}  // namespace

AuctionOutcome run_vickrey_feedback(std::span<const double> declared_qualities) {
  check_qualities(declared_qualities);
  const TopTwo top = top_two_indices(declared_qualities);
  AuctionOutcome out;
  out.winner_index = top.first;
  out.runner_up_index = top.second;
  out.unit_price = declared_qualities[top.second];
  out.total_payment = out.unit_price + out.unit_price;
  return out;
}

AuctionOutcome run_vickrey_feedback(std::span<const SupplierBid> bids) {
  const auto q = declared_of(bids);
  return run_vickrey_feedback(std::span<const double>(q));
}

std::pair<const CandidateResponse&, const CandidateResponse&> selected_pair(
    std::span<const SupplierBid> bids, const AuctionOutcome& outcome) {
  return {bids[outcome.winner_index].response, bids[outcome.runner_up_index].response};
}

ProcurementRun run_budgeted_procurement(std::vector<AuctionRound> rounds, double budget) {
  if (!(budget >= 0.0)) throw Error(ErrorKind::argument, "budget must be non-negative");
  ProcurementRun run;
  run.budget = budget;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const AuctionOutcome outcome = run_vickrey_feedback(rounds[i].bids);
    const double next = run.spent + outcome.total_payment;
    if (next > budget) {
      run.stopped_at = i;
      break;
    }
    run.spent = next;
    run.outcomes.push_back(
        AuctionRecord{std::move(rounds[i].instruction_id), std::move(rounds[i].bids), outcome});
  }
  return run;
}

std::vector<AuctionRound> rounds_from_pool(const ResponsePool& pool,
                                           const std::vector<AgentConfig>& agents,
                                           const ProcurementOptions& options) {
  std::unordered_map<std::string_view, const AgentConfig*> by_id;
  for (const AgentConfig& a : agents) by_id.emplace(a.agent_id, &a);

  std::vector<AuctionRound> rounds;
  rounds.reserve(pool.entries.size());
  for (const PoolEntry& e : pool.entries) {
    AuctionRound round{e.instruction_id, {}};
    round.bids.reserve(e.responses.size());
    for (const CandidateResponse& r : e.responses) {
      const double truth =
          options.quality == QualitySource::token_length
              ? static_cast<double>(response_tokens(
                    r, options.tokenizer, "instruction '" + e.instruction_id + "'"))
              : overall_score(r.scores);
      double declared = truth;
      if (auto it = by_id.find(r.source_model); it != by_id.end()) {
        Rng stream(derive_seed(options.seed, {"declare", r.source_model, e.instruction_id}));
        declared = apply_strategy(it->second->strategy, truth, stream);
      }
      round.bids.push_back(SupplierBid{r.source_model, r, declared, declared});
    }
    rounds.push_back(std::move(round));
  }
  return rounds;
}

ProcurementRun run_budgeted_procurement(const ResponsePool& pool,
                                        const std::vector<AgentConfig>& agents,
                                        const ProcurementOptions& options) {
  return run_budgeted_procurement(rounds_from_pool(pool, agents, options), options.budget);
}

void write_auction_log(const ProcurementRun& run, std::ostream& out) {
  for (const AuctionRecord& rec : run.outcomes) {
    nlohmann::ordered_json bids = nlohmann::ordered_json::array();
    for (const SupplierBid& b : rec.bids) {
      nlohmann::ordered_json jb;
      jb["agent_id"] = b.agent_id;
      jb["declared_quality"] = b.declared_quality;
      bids.push_back(std::move(jb));
    }
    nlohmann::ordered_json j;
    j["instruction_id"] = rec.instruction_id;
    j["bids"] = std::move(bids);
    j["winner_index"] = rec.outcome.winner_index;
    j["runner_up_index"] = rec.outcome.runner_up_index;
    j["unit_price"] = rec.outcome.unit_price;
    j["total_payment"] = rec.outcome.total_payment;
    out << j.dump() << '\n';
  }
}

SecondPriceResult second_price_auction(std::span<const double> bids) {
  check_qualities(bids);
  const TopTwo top = top_two_indices(bids);
  return {top.first, bids[top.second]};
}

double spa_utility(double true_value, double bid, std::span<const double> rival_bids) {
  std::vector<double> all;
  all.reserve(rival_bids.size() + 1);
  all.push_back(bid);
  all.insert(all.end(), rival_bids.begin(), rival_bids.end());
  const SecondPriceResult r = second_price_auction(all);
  return r.winner_index == 0 ? true_value - r.price : 0.0;
}

double vickrey_feedback_utility(double true_quality, double declared_quality,
                                std::span<const double> rival_declared, double kappa) {
  std::vector<double> all;
  all.reserve(rival_declared.size() + 1);
  all.push_back(declared_quality);
  all.insert(all.end(), rival_declared.begin(), rival_declared.end());
  const AuctionOutcome o = run_vickrey_feedback(std::span<const double>(all));
  const bool selected = o.winner_index == 0 || o.runner_up_index == 0;
  return (selected ? o.unit_price : 0.0) - kappa * true_quality;
}

const char* to_string(Mechanism m) noexcept {
  return m == Mechanism::vickrey_feedback ? "vickrey_feedback" : "second_price";
}

std::optional<Mechanism> mechanism_from_string(std::string_view name) noexcept {
  if (name == "vickrey_feedback") return Mechanism::vickrey_feedback;
  if (name == "second_price") return Mechanism::second_price;
  return std::nullopt;
}

DominanceRow deviation_test(const DeviationAgent& agent, const DeviationConfig& config) {
  if (config.bid_grid.empty()) throw Error(ErrorKind::argument, "bid grid is empty");
  if (config.rivals == 0) throw Error(ErrorKind::argument, "need at least one rival");
  if (!config.exhaustive && config.trials == 0) {
    throw Error(ErrorKind::argument, "trials must be at least 1");
  }

  DominanceRow row;
  row.agent_id = agent.agent_id;
  row.mechanism = config.mechanism;

  auto utility = [&](double declared, std::span<const double> rivals) {
    return config.mechanism == Mechanism::second_price
               ? spa_utility(agent.true_value, declared, rivals)
               : vickrey_feedback_utility(agent.true_value, declared, rivals, config.kappa);
  };
  auto evaluate = [&](std::span<const double> rivals) {
    ++row.trials;
    const double truthful = utility(agent.true_value, rivals);
    for (double b : config.bid_grid) {
      if (b == agent.true_value) continue;
      ++row.deviations;
      if (truthful >= utility(b, rivals)) ++row.truthful_not_worse;
    }
  };

  std::vector<double> rivals(config.rivals);
  const std::size_t levels = config.bid_grid.size();
  if (config.exhaustive) {
    // Odometer over grid^rivals profiles.
    std::vector<std::size_t> digit(config.rivals, 0);
    while (true) {
      for (std::size_t r = 0; r < config.rivals; ++r) rivals[r] = config.bid_grid[digit[r]];
      evaluate(rivals);
      std::size_t pos = 0;
      while (pos < config.rivals && ++digit[pos] == levels) digit[pos++] = 0;
      if (pos == config.rivals) break;
    }
  } else {
    for (std::size_t t = 0; t < config.trials; ++t) {
      Rng stream(derive_seed(config.seed, {"deviation", agent.agent_id, std::to_string(t)}));
      for (double& r : rivals) r = config.bid_grid[stream.index(levels)];
      evaluate(rivals);
    }
  }
  if (row.deviations > 0) {
    row.dominance_fraction =
        static_cast<double>(row.truthful_not_worse) / static_cast<double>(row.deviations);
  }
  return row;
}

std::vector<DominanceRow> deviation_test(std::span<const DeviationAgent> agents,
                                         const DeviationConfig& config) {
  std::vector<DominanceRow> rows;
  rows.reserve(agents.size());
  for (const DeviationAgent& a : agents) rows.push_back(deviation_test(a, config));
  return rows;
}

void write_deviation_csv(std::span<const DominanceRow> rows, std::ostream& out) {
  out << "agent_id,mechanism,trials,deviations,dominance_fraction\n";
  for (const DominanceRow& r : rows) {
    out << r.agent_id << ',' << to_string(r.mechanism) << ',' << r.trials << ','
        << r.deviations << ',' << format_double(r.dominance_fraction) << '\n';
  }
}

}  // namespace vickrey
