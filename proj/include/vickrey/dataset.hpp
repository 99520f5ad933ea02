#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vickrey/core.hpp"

namespace vickrey {

struct Provenance {
  std::string pool_id;
  std::optional<std::uint64_t> seed;  // absent for RNG-free builds
  double ratio = 1.0;                 // fraction of the full dataset retained
};

struct PreferenceDataset {
  std::vector<PreferenceSample> samples;
  PolicyTag policy_tag = PolicyTag::vanilla;
  Provenance provenance;
};

/// Accepted = highest overall score; rejected = uniform draw among the other
/// responses from a per-instruction sub-stream of `seed`. Throws
/// Error(validation) naming the instruction for entries with < 2 responses.
PreferenceDataset build_vanilla(const ResponsePool& pool, std::uint64_t seed,
                                std::string pool_id = {});

/// Accepted = highest, rejected = second-highest overall score.
PreferenceDataset build_vickrey(const ResponsePool& pool, std::string pool_id = {});

/// Keeps floor(ratio * N) samples chosen by one seeded permutation; a smaller
/// ratio under the same seed yields a subset of a larger one. Kept samples stay
/// in dataset order. Throws Error(argument) unless 0 < ratio <= 1.
PreferenceDataset subsample(const PreferenceDataset& dataset, double ratio, std::uint64_t seed);

std::size_t subsample_size(std::size_t n, double ratio);

struct SourceBucket {
  std::string model;
  std::size_t count = 0;
  double fraction = 0.0;
};

/// Counts the source model of both responses of every sample, sorted by model.
std::vector<SourceBucket> source_distribution(std::span<const PreferenceSample> samples);

struct ScoreBin {
  double lo = 0.0;
  double hi = 0.0;
  bool closed_right = false;  // only the last bin includes its upper edge
  std::size_t count = 0;
  double fraction = 0.0;      // count / number of responses (2 per sample)
};

/// Bins the overall scores of accepted and rejected responses into
/// [e0,e1), [e1,e2), ..., [e_{n-2}, e_{n-1}]. Scores outside the edges fall in
/// no bin. Throws Error(argument) unless the edges are strictly increasing and
/// at least two.
std::vector<ScoreBin> score_distribution(std::span<const PreferenceSample> samples,
                                         std::span<const double> edges);

/// Fraction of included responses (both sides) with score > threshold.
double fraction_above(std::span<const PreferenceSample> samples, double threshold);

double mean_rejected_score(std::span<const PreferenceSample> samples);

/// Columns: bucket, count, fraction.
void write_source_csv(std::span<const SourceBucket> buckets, std::ostream& out);
void write_score_csv(std::span<const ScoreBin> bins, std::ostream& out);

void write_dataset(const PreferenceDataset& dataset, std::ostream& out);

/// Reads a dataset file; checks that tags agree, ids are unique and Vickrey
/// samples satisfy b_a >= b_r.
PreferenceDataset read_dataset(std::istream& in);

}  // namespace vickrey
