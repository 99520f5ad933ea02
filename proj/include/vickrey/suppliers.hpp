#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vickrey/auction.hpp"
#include "vickrey/core.hpp"
#include "vickrey/rng.hpp"

namespace vickrey {

/// How a supplier turns its true quality into a declaration.
struct Strategy {
  enum class Kind { truthful, underbid, overbid_capped, random_in };

  Kind kind = Kind::truthful;
  double fraction = 1.0;  // underbid: q = f * true; overbid_capped: q = true / f
  double lo = 0.0;        // random_in: q ~ U[lo, hi)
  double hi = 0.0;

  static Strategy truthful() { return {}; }
  static Strategy underbid(double f) { return {Kind::underbid, f, 0.0, 0.0}; }
  static Strategy overbid_capped(double f) { return {Kind::overbid_capped, f, 0.0, 0.0}; }
  static Strategy random_in(double lo, double hi) { return {Kind::random_in, 1.0, lo, hi}; }

  bool operator==(const Strategy&) const = default;
};

/// Parses "truthful", "underbid:F", "overbid_capped:F" or "random_in:LO:HI".
Strategy parse_strategy(std::string_view text);
std::string to_string(const Strategy& s);

/// Throws Error(config) if the fraction is outside (0, 1] or bounds are unordered.
void validate(const Strategy& s);

/// Only random_in consumes from `stream`.
double apply_strategy(const Strategy& s, double true_quality, Rng& stream);

struct AgentConfig {
  std::string agent_id;
  double length_mean = 100.0;      // tokens
  double length_dispersion = 0.3;  // sigma of the log-normal length
  double quality_noise = 0.0;      // extra per-agent noise on the score latent
  Strategy strategy;
  std::vector<double> vocab_profile;  // categorical over the vocabulary, sums to 1
};

void validate(const AgentConfig& agent);

/// Categorical profile with weight_k proportional to exp(tilt * (k/(V-1) - 1/2)).
/// Positive tilt favours high-index (higher quality) tokens.
std::vector<double> tilted_vocab_profile(std::size_t vocab_size, double tilt);

/// Surface form of vocabulary token k ("t<k>"); one default-tokenizer token.
std::string vocab_token(std::size_t k);

/// Ground-truth quality of vocabulary token k in the synthetic world, in [1, 5].
double synthetic_token_quality(std::size_t k, std::size_t vocab_size);

/// Mean token quality of a sequence; 1.0 for the empty sequence.
double synthetic_sequence_quality(std::span<const std::uint32_t> tokens,
                                  std::size_t vocab_size);

/// Maps an affine function of log-length onto aspect scores in [1, 5].
struct ScoreModel {
  double intercept = -3.0;
  double slope = 1.25;
  double latent_noise = 0.35;
  double aspect_noise = 0.25;
};

struct SyntheticPoolConfig {
  std::size_t n_instructions = 0;
  std::vector<AgentConfig> agents;
  ScoreModel score_model;
  std::uint64_t seed = 0;
};

void validate(const SyntheticPoolConfig& cfg);

/// The default desk-scale world: four agents whose length distributions are
/// ordered and whose vocabularies tilt towards better tokens with length.
SyntheticPoolConfig default_synthetic_config(std::size_t n_instructions, std::uint64_t seed,
                                             std::size_t vocab_size = 32);

/// Reads an INI-style config: [pool], [score_model] and one [agent.NAME]
/// section per supplier. Throws Error(config) on unknown keys or bad values.
SyntheticPoolConfig load_synthetic_config(const std::filesystem::path& path);

std::string instruction_id_for(std::size_t index);

/// Seed of the response stream of `agent_id` for `instruction_id`.
std::uint64_t respond_stream_seed(std::uint64_t master, std::string_view agent_id,
                                  std::string_view instruction_id);

/// Draws a response whose length is log-normal around length_mean and whose
/// tokens follow vocab_profile, then declares quality per the strategy.
/// Aspect scores are left at their defaults; annotation happens downstream.
/// `stream` is the (agent, instruction) sub-stream from respond_stream_seed.
SupplierBid agent_respond(const AgentConfig& agent, Rng& stream);

/// Scores a response of the given true length (score stream for one pair).
AspectScores score_response(const ScoreModel& model, const AgentConfig& agent,
                            std::uint64_t length, Rng& stream);

ResponsePool generate_synthetic_pool(const SyntheticPoolConfig& cfg);

}  // namespace vickrey
