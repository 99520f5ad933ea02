#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vickrey {

/// The four rated aspects of a response, each in [1, 5].
struct AspectScores {
  double instruction_following = 1.0;
  double truthfulness = 1.0;
  double honesty = 1.0;
  double helpfulness = 1.0;

  bool operator==(const AspectScores&) const = default;
};

/// Arithmetic mean of the four aspect scores.
double overall_score(const AspectScores& s) noexcept;

/// Index of the largest value and of the largest among the rest. Equal values
/// resolve to the lowest index at both steps. Requires values.size() >= 2.
struct TopTwo {
  std::size_t first = 0;
  std::size_t second = 1;
};
TopTwo top_two_indices(std::span<const double> values) noexcept;

struct CandidateResponse {
  std::string source_model;
  std::string text;
  AspectScores scores;
  // Produced by an external tokenizer and replayed verbatim; never recomputed.
  std::optional<std::uint64_t> token_count;

  bool operator==(const CandidateResponse&) const = default;
};

struct PoolEntry {
  std::string instruction_id;
  std::string instruction;
  std::vector<CandidateResponse> responses;  // order is significant

  bool operator==(const PoolEntry&) const = default;
};

struct ResponsePool {
  std::vector<PoolEntry> entries;

  bool operator==(const ResponsePool&) const = default;
};

enum class PolicyTag { vanilla, vickrey };

const char* to_string(PolicyTag tag) noexcept;
std::optional<PolicyTag> policy_tag_from_string(std::string_view name) noexcept;

/// One side of a preference pair as stored in a dataset: the response plus
/// its overall score.
struct SampleResponse {
  std::string source_model;
  std::string text;
  double score = 0.0;
  std::optional<std::uint64_t> token_count;

  bool operator==(const SampleResponse&) const = default;
};

SampleResponse to_sample_response(const CandidateResponse& r);

/// Preference triplet (x, accepted, rejected) with the declared qualities of
/// both responses.
struct PreferenceSample {
  std::string instruction_id;
  std::string instruction;
  SampleResponse accepted;
  SampleResponse rejected;
  double b_accepted = 0.0;
  double b_rejected = 0.0;
  PolicyTag policy_tag = PolicyTag::vanilla;

  bool operator==(const PreferenceSample&) const = default;
};

// --- pool file -------------------------------------------------------------

struct ParseOptions {
  bool strict = false;  // reject unknown fields instead of warning
  std::vector<std::string>* warnings = nullptr;
};

/// One problem found by validate_pool.
struct Finding {
  std::size_t entry_index = 0;
  std::string instruction_id;
  std::string field;  // e.g. "responses[2].scores.honesty"
  std::string message;
};

/// Checks every type invariant; an empty result means the pool is valid.
std::vector<Finding> validate_pool(const ResponsePool& pool);

/// Reads line-delimited pool records without validating invariants. Throws
/// Error(parse) naming the line and field on schema violations.
ResponsePool read_pool_records(std::istream& in, const ParseOptions& options = {});

/// read_pool_records followed by validate_pool; throws Error(validation) when
/// any finding is reported.
ResponsePool parse_pool(std::istream& in, const ParseOptions& options = {});

void serialize_pool(const ResponsePool& pool, std::ostream& out);

std::string format_finding(const Finding& f);

}  // namespace vickrey
