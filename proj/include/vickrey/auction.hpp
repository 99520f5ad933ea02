#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vickrey/core.hpp"
#include "vickrey/cost.hpp"

namespace vickrey {

struct AgentConfig;

/// One supplier's sealed submission: the response, its declared quality and
/// the agreed valuation (equal to the declared quality outside deviation
/// tests).
struct SupplierBid {
  std::string agent_id;
  CandidateResponse response;
  double declared_quality = 0.0;
  double valuation = 0.0;

  bool operator==(const SupplierBid&) const = default;
};

/// Result of one VickreyFeedback round. Both selected suppliers are paid
/// unit_price, the runner-up's declared quality.
struct AuctionOutcome {
  std::size_t winner_index = 0;
  std::size_t runner_up_index = 1;
  double unit_price = 0.0;
  double total_payment = 0.0;  // == 2 * unit_price

  bool operator==(const AuctionOutcome&) const = default;
};

/// Selects the two highest declared qualities (lowest index wins ties) and
/// prices both at the second. Throws Error(argument) for fewer than two bids
/// or a negative / NaN quality.
AuctionOutcome run_vickrey_feedback(std::span<const double> declared_qualities);
AuctionOutcome run_vickrey_feedback(std::span<const SupplierBid> bids);

/// The response pair (winner, runner-up) returned to the dataset owner.
std::pair<const CandidateResponse&, const CandidateResponse&> selected_pair(
    std::span<const SupplierBid> bids, const AuctionOutcome& outcome);

// --- budgeted procurement ---------------------------------------------------

struct AuctionRound {
  std::string instruction_id;
  std::vector<SupplierBid> bids;
};

struct AuctionRecord {
  std::string instruction_id;
  std::vector<SupplierBid> bids;
  AuctionOutcome outcome;
};

struct ProcurementRun {
  std::vector<AuctionRecord> outcomes;
  double budget = 0.0;
  double spent = 0.0;
  // Index of the first round that would have overshot the budget.
  std::optional<std::size_t> stopped_at;
};

/// Runs the rounds in order and halts before the first auction whose payment
/// would push spending past the budget. Throws Error(argument) for a negative
/// or NaN budget.
ProcurementRun run_budgeted_procurement(std::vector<AuctionRound> rounds, double budget);

/// What suppliers declare as quality when bidding on a pool.
enum class QualitySource {
  token_length,   // q = tokens(response), the live-procurement regime
  overall_score,  // q = overall score, the simulation regime
};

struct ProcurementOptions {
  double budget = 0.0;
  std::uint64_t seed = 0;
  QualitySource quality = QualitySource::token_length;
  TokenizerMode tokenizer = TokenizerMode::default_rules;
};

/// Turns every pool entry into an auction round. Each response is bid by the
/// agent whose agent_id equals its source_model, applying that agent's
/// strategy to the true quality; responses without a matching agent bid
/// truthfully.
std::vector<AuctionRound> rounds_from_pool(const ResponsePool& pool,
                                           const std::vector<AgentConfig>& agents,
                                           const ProcurementOptions& options);

ProcurementRun run_budgeted_procurement(const ResponsePool& pool,
                                        const std::vector<AgentConfig>& agents,
                                        const ProcurementOptions& options);

/// One JSON record per executed auction.
void write_auction_log(const ProcurementRun& run, std::ostream& out);

// --- reference single-item auction -------------------------------------------

struct SecondPriceResult {
  std::size_t winner_index = 0;
  double price = 0.0;

  bool operator==(const SecondPriceResult&) const = default;
};

/// Highest bid wins (lowest index on ties) and pays the highest remaining bid.
SecondPriceResult second_price_auction(std::span<const double> bids);

/// Surplus of a bidder placed at index 0 in front of `rival_bids`.
double spa_utility(double true_value, double bid, std::span<const double> rival_bids);

/// Utility of a supplier at index 0 under VickreyFeedback: the unit price if
/// selected, minus the effort cost kappa * true_quality (paid win or lose).
double vickrey_feedback_utility(double true_quality, double declared_quality,
                                std::span<const double> rival_declared, double kappa);

// --- empirical truthfulness ---------------------------------------------------

enum class Mechanism { vickrey_feedback, second_price };

const char* to_string(Mechanism m) noexcept;
std::optional<Mechanism> mechanism_from_string(std::string_view name) noexcept;

struct DeviationAgent {
  std::string agent_id;
  double true_value = 0.0;
};

struct DeviationConfig {
  Mechanism mechanism = Mechanism::second_price;
  std::size_t trials = 1;         // sampled rival profiles per agent
  std::vector<double> bid_grid;   // candidate declarations and rival bids
  std::uint64_t seed = 0;
  std::size_t rivals = 3;
  double kappa = 0.0;             // effort cost per unit of delivered quality
  bool exhaustive = false;        // enumerate all grid^rivals profiles instead of sampling
};

struct DominanceRow {
  std::string agent_id;
  Mechanism mechanism = Mechanism::second_price;
  std::size_t trials = 0;      // rival profiles evaluated
  std::size_t deviations = 0;  // (profile, deviating bid) comparisons
  std::size_t truthful_not_worse = 0;
  double dominance_fraction = 1.0;  // 1.0 when deviations == 0
};

/// For every agent, compares truthful declaration with each grid bid that
/// differs from its true value, over sampled (or enumerated) rival profiles.
DominanceRow deviation_test(const DeviationAgent& agent, const DeviationConfig& config);
std::vector<DominanceRow> deviation_test(std::span<const DeviationAgent> agents,
                                         const DeviationConfig& config);

/// Columns: agent_id, mechanism, trials, deviations, dominance_fraction.
void write_deviation_csv(std::span<const DominanceRow> rows, std::ostream& out);

}  // namespace vickrey
