#include "vickrey/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "vickrey/error.hpp"
#include "vickrey/rng.hpp"
#include "vickrey/util.hpp"

namespace vickrey {

using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<double> overall_scores(const PoolEntry& e) {
  if (e.responses.size() < 2) {
    throw Error(ErrorKind::validation, "instruction '" + e.instruction_id +
                                           "' has fewer than 2 responses");
  }
  std::vector<double> s;
  s.reserve(e.responses.size());
  for (const CandidateResponse& r : e.responses) s.push_back(overall_score(r.scores));
  return s;
}

PreferenceSample make_sample(const PoolEntry& e, std::size_t accepted, std::size_t rejected,
                             PolicyTag tag) {
  PreferenceSample s;
  s.instruction_id = e.instruction_id;
  s.instruction = e.instruction;
  s.accepted = to_sample_response(e.responses[accepted]);
  s.rejected = to_sample_response(e.responses[rejected]);
  s.b_accepted = s.accepted.score;
  s.b_rejected = s.rejected.score;
  s.policy_tag = tag;
  return s;
}

}  // namespace

PreferenceDataset build_vanilla(const ResponsePool& pool, std::uint64_t seed,
                                std::string pool_id) {
  PreferenceDataset ds;
  ds.policy_tag = PolicyTag::vanilla;
  ds.provenance = {std::move(pool_id), seed, 1.0};
  ds.samples.reserve(pool.entries.size());
  for (const PoolEntry& e : pool.entries) {
    const auto scores = overall_scores(e);
    const std::size_t accepted = top_two_indices(scores).first;
    Rng stream(derive_seed(seed, {"vanilla", e.instruction_id}));
    std::size_t rejected = stream.index(scores.size() - 1);
    if (rejected >= accepted) ++rejected;
    ds.samples.push_back(make_sample(e, accepted, rejected, PolicyTag::vanilla));
  }
  return ds;
}

PreferenceDataset build_vickrey(const ResponsePool& pool, std::string pool_id) {
  PreferenceDataset ds;
  ds.policy_tag = PolicyTag::vickrey;
  ds.provenance = {std::move(pool_id), std::nullopt, 1.0};
  ds.samples.reserve(pool.entries.size());
  for (const PoolEntry& e : pool.entries) {
    const TopTwo top = top_two_indices(overall_scores(e));
    ds.samples.push_back(make_sample(e, top.first, top.second, PolicyTag::vickrey));
  }
  return ds;
}

std::size_t subsample_size(std::size_t n, double ratio) {
  // The slack absorbs representation error such as 0.29 * 100 = 28.999...
  const double exact = ratio * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::floor(exact + 1e-9)));
}

PreferenceDataset subsample(const PreferenceDataset& dataset, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw Error(ErrorKind::argument, "subsample ratio must lie in (0, 1], got " +
                                         format_double(ratio));
  }
  if (ratio == 1.0) return dataset;

  const std::size_t n = dataset.samples.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng stream(derive_seed(seed, {"subsample"}));
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[stream.index(i)]);

  std::vector<std::size_t> keep(perm.begin(), perm.begin() + subsample_size(n, ratio));
  std::sort(keep.begin(), keep.end());

  PreferenceDataset out;
  out.policy_tag = dataset.policy_tag;
  out.provenance = dataset.provenance;
  out.provenance.ratio = dataset.provenance.ratio * ratio;
  out.provenance.seed = dataset.provenance.seed.value_or(seed);
  out.samples.reserve(keep.size());
  for (std::size_t i : keep) out.samples.push_back(dataset.samples[i]);
  return out;
}

std::vector<SourceBucket> source_distribution(std::span<const PreferenceSample> samples) {
  std::map<std::string, std::size_t> counts;
  for (const PreferenceSample& s : samples) {
    ++counts[s.accepted.source_model];
    ++counts[s.rejected.source_model];
  }
  const double total = 2.0 * static_cast<double>(samples.size());
  std::vector<SourceBucket> out;
  out.reserve(counts.size());
  for (const auto& [model, count] : counts) {
    out.push_back(SourceBucket{model, count, static_cast<double>(count) / total});
  }
  return out;
}

std::vector<ScoreBin> score_distribution(std::span<const PreferenceSample> samples,
                                         std::span<const double> edges) {
  if (edges.size() < 2) throw Error(ErrorKind::argument, "need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw Error(ErrorKind::argument, "bin edges must be strictly increasing");
    }
  }
  std::vector<ScoreBin> bins(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    bins[i].lo = edges[i];
    bins[i].hi = edges[i + 1];
  }
  bins.back().closed_right = true;

  auto place = [&](double score) {
    if (score == edges.back()) {
      ++bins.back().count;
      return;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), score);
    if (it == edges.begin() || it == edges.end()) return;
    ++bins[static_cast<std::size_t>(it - edges.begin()) - 1].count;
  };
  for (const PreferenceSample& s : samples) {
    place(s.accepted.score);
    place(s.rejected.score);
  }
  if (!samples.empty()) {
    const double total = 2.0 * static_cast<double>(samples.size());
    for (ScoreBin& b : bins) b.fraction = static_cast<double>(b.count) / total;
  }
  return bins;
}

double fraction_above(std::span<const PreferenceSample> samples, double threshold) {
  if (samples.empty()) return 0.0;
  std::size_t above = 0;
  for (const PreferenceSample& s : samples) {
    above += (s.accepted.score > threshold) + (s.rejected.score > threshold);
  }
  return static_cast<double>(above) / (2.0 * static_cast<double>(samples.size()));
}

double mean_rejected_score(std::span<const PreferenceSample> samples) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const PreferenceSample& s : samples) total += s.rejected.score;
  return total / static_cast<double>(samples.size());
}

void write_source_csv(std::span<const SourceBucket> buckets, std::ostream& out) {
  out << "bucket,count,fraction\n";
  for (const SourceBucket& b : buckets) {
    out << b.model << ',' << b.count << ',' << format_double(b.fraction) << '\n';
  }
}

void write_score_csv(std::span<const ScoreBin> bins, std::ostream& out) {
  out << "bucket,count,fraction\n";
  for (const ScoreBin& b : bins) {
    out << "\"[" << format_double(b.lo) << ',' << format_double(b.hi)
        << (b.closed_right ? "]\"," : ")\",") << b.count << ',' << format_double(b.fraction)
        << '\n';
  }
}

namespace {

ordered_json response_json(const SampleResponse& r) {
  ordered_json j;
  j["model"] = r.source_model;
  j["text"] = r.text;
  j["score"] = r.score;
  if (r.token_count) j["token_count"] = *r.token_count;
  return j;
}

SampleResponse response_from_json(const ordered_json& j, const std::string& where) {
  auto fail = [&](const char* field, const char* what) -> void {
    throw Error(ErrorKind::parse, where + "." + field + ": " + what);
  };
  if (!j.is_object()) fail("", "expected an object");
  SampleResponse r;
  auto model = j.find("model");
  auto text = j.find("text");
  auto score = j.find("score");
  if (model == j.end() || !model->is_string()) fail("model", "expected a string");
  if (text == j.end() || !text->is_string()) fail("text", "expected a string");
  if (score == j.end() || !score->is_number()) fail("score", "expected a number");
  r.source_model = model->get<std::string>();
  r.text = text->get<std::string>();
  r.score = score->get<double>();
  if (auto tc = j.find("token_count"); tc != j.end()) {
    if (!tc->is_number_unsigned()) fail("token_count", "expected a non-negative integer");
    r.token_count = tc->get<std::uint64_t>();
  }
  return r;
}

}  // namespace

void write_dataset(const PreferenceDataset& dataset, std::ostream& out) {
  for (const PreferenceSample& s : dataset.samples) {
    ordered_json j;
    j["instruction_id"] = s.instruction_id;
    j["instruction"] = s.instruction;
    j["accepted"] = response_json(s.accepted);
    j["rejected"] = response_json(s.rejected);
    j["b_a"] = s.b_accepted;
    j["b_r"] = s.b_rejected;
    j["policy_tag"] = to_string(s.policy_tag);
    out << j.dump() << '\n';
  }
}

PreferenceDataset read_dataset(std::istream& in) {
  PreferenceDataset ds;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::parse, where + ": " + e.what());
    }
    auto get = [&](const char* key) -> const ordered_json& {
      auto it = j.find(key);
      if (it == j.end()) throw Error(ErrorKind::parse, where + ": field '" + key + "' missing");
      return *it;
    };
    PreferenceSample s;
    const auto& id = get("instruction_id");
    const auto& x = get("instruction");
    const auto& ba = get("b_a");
    const auto& br = get("b_r");
    const auto& tag = get("policy_tag");
    if (!id.is_string() || !x.is_string() || !ba.is_number() || !br.is_number() ||
        !tag.is_string()) {
      throw Error(ErrorKind::parse, where + ": field has the wrong type");
    }
    s.instruction_id = id.get<std::string>();
    s.instruction = x.get<std::string>();
    s.accepted = response_from_json(get("accepted"), where + ": accepted");
    s.rejected = response_from_json(get("rejected"), where + ": rejected");
    s.b_accepted = ba.get<double>();
    s.b_rejected = br.get<double>();
    const auto parsed_tag = policy_tag_from_string(tag.get<std::string>());
    if (!parsed_tag) throw Error(ErrorKind::parse, where + ": unknown policy_tag");
    s.policy_tag = *parsed_tag;

    if (ds.samples.empty()) {
      ds.policy_tag = s.policy_tag;
    } else if (s.policy_tag != ds.policy_tag) {
      throw Error(ErrorKind::validation, where + ": mixed policy tags in one dataset");
    }
    if (!ids.insert(s.instruction_id).second) {
      throw Error(ErrorKind::validation,
                  where + ": duplicate instruction_id '" + s.instruction_id + "'");
    }
    if (s.policy_tag == PolicyTag::vickrey && !(s.b_accepted >= s.b_rejected)) {
      throw Error(ErrorKind::validation, where + ": vickrey sample with b_a < b_r");
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace vickrey
