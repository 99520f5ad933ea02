#include "vickrey/core.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "vickrey/error.hpp"
#include "vickrey/util.hpp"

namespace vickrey {

using ordered_json = nlohmann::ordered_json;

double overall_score(const AspectScores& s) noexcept {
  return (s.instruction_following + s.truthfulness + s.honesty + s.helpfulness) / 4.0;
}

TopTwo top_two_indices(std::span<const double> values) noexcept {
  TopTwo t{0, 1};
  if (values[1] > values[0]) t = {1, 0};
  for (std::size_t i = 2; i < values.size(); ++i) {
    if (values[i] > values[t.first]) {
      t.second = t.first;
      t.first = i;
    } else if (values[i] > values[t.second]) {
      t.second = i;
    }
  }
  return t;
}

const char* to_string(PolicyTag tag) noexcept {
  return tag == PolicyTag::vickrey ? "vickrey" : "vanilla";
}

std::optional<PolicyTag> policy_tag_from_string(std::string_view name) noexcept {
  if (name == "vanilla") return PolicyTag::vanilla;
  if (name == "vickrey") return PolicyTag::vickrey;
  return std::nullopt;
}

SampleResponse to_sample_response(const CandidateResponse& r) {
  return SampleResponse{r.source_model, r.text, overall_score(r.scores), r.token_count};
}

namespace {

constexpr const char* kAspectNames[] = {"instruction_following", "truthfulness", "honesty",
                                        "helpfulness"};

double* aspect_slot(AspectScores& s, int i) {
  switch (i) {
    case 0: return &s.instruction_following;
    case 1: return &s.truthfulness;
    case 2: return &s.honesty;
    default: return &s.helpfulness;
  }
}

double aspect_value(const AspectScores& s, int i) {
  switch (i) {
    case 0: return s.instruction_following;
    case 1: return s.truthfulness;
    case 2: return s.honesty;
    default: return s.helpfulness;
  }
}

class RecordReader {
 public:
  RecordReader(std::size_t line, const ParseOptions& options) : line_(line), options_(options) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw Error(ErrorKind::parse,
                "line " + std::to_string(line_) + ": field '" + field + "': " + what);
  }

  void check_fields(const ordered_json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) const {
    for (const auto& [key, value] : obj.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (known) continue;
      const std::string path = where.empty() ? key : where + "." + key;
      if (options_.strict) fail(path, "unknown field");
      const std::string msg =
          "line " + std::to_string(line_) + ": ignoring unknown field '" + path + "'";
      if (options_.warnings != nullptr) options_.warnings->push_back(msg);
      log(LogLevel::warn, msg);
    }
  }

  const ordered_json& member(const ordered_json& obj, const char* key,
                             const std::string& path) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, "missing");
    return *it;
  }

  std::string string_field(const ordered_json& obj, const char* key,
                           const std::string& path) const {
    const auto& v = member(obj, key, path);
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  double number_field(const ordered_json& obj, const char* key, const std::string& path) const {
    const auto& v = member(obj, key, path);
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  CandidateResponse response(const ordered_json& obj, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    check_fields(obj, path, {"model", "text", "scores", "token_count"});
    CandidateResponse r;
    r.source_model = string_field(obj, "model", path + ".model");
    r.text = string_field(obj, "text", path + ".text");
    const auto& scores = member(obj, "scores", path + ".scores");
    if (!scores.is_object()) fail(path + ".scores", "expected an object");
    check_fields(scores, path + ".scores",
                 {kAspectNames[0], kAspectNames[1], kAspectNames[2], kAspectNames[3]});
    for (int i = 0; i < 4; ++i) {
      *aspect_slot(r.scores, i) =
          number_field(scores, kAspectNames[i], path + ".scores." + kAspectNames[i]);
    }
    if (auto it = obj.find("token_count"); it != obj.end()) {
      if (!it->is_number_unsigned()) {
        fail(path + ".token_count", "expected a non-negative integer");
      }
      r.token_count = it->get<std::uint64_t>();
    }
    return r;
  }

  PoolEntry entry(const ordered_json& obj) const {
    if (!obj.is_object()) fail("<record>", "expected a JSON object");
    check_fields(obj, "", {"instruction_id", "instruction", "responses"});
    PoolEntry e;
    e.instruction_id = string_field(obj, "instruction_id", "instruction_id");
    e.instruction = string_field(obj, "instruction", "instruction");
    const auto& responses = member(obj, "responses", "responses");
    if (!responses.is_array()) fail("responses", "expected an array");
    e.responses.reserve(responses.size());
    for (std::size_t k = 0; k < responses.size(); ++k) {
      e.responses.push_back(response(responses[k], "responses[" + std::to_string(k) + "]"));
    }
    return e;
  }

 private:
  std::size_t line_;
  const ParseOptions& options_;
};

}  // namespace

std::vector<Finding> validate_pool(const ResponsePool& pool) {
  std::vector<Finding> findings;
  std::unordered_map<std::string, std::size_t> first_seen;
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    const PoolEntry& e = pool.entries[i];
    auto add = [&](std::string field, std::string message) {
      findings.push_back(Finding{i, e.instruction_id, std::move(field), std::move(message)});
    };
    if (auto [it, inserted] = first_seen.emplace(e.instruction_id, i); !inserted) {
      add("instruction_id", "duplicate of entry " + std::to_string(it->second));
    }
    if (e.responses.size() < 2) {
      add("responses", "needs at least 2 responses, has " + std::to_string(e.responses.size()));
    }
    for (std::size_t k = 0; k < e.responses.size(); ++k) {
      const CandidateResponse& r = e.responses[k];
      const std::string prefix = "responses[" + std::to_string(k) + "]";
      if (r.text.empty()) add(prefix + ".text", "text is empty");
      for (int a = 0; a < 4; ++a) {
        const double v = aspect_value(r.scores, a);
        if (!(v >= 1.0 && v <= 5.0)) {
          add(prefix + ".scores." + kAspectNames[a],
              "score " + ordered_json(v).dump() + " outside [1, 5]");
        }
      }
    }
  }
  return findings;
}

std::string format_finding(const Finding& f) {
  return "entry " + std::to_string(f.entry_index) + " ('" + f.instruction_id + "') " + f.field +
         ": " + f.message;
}

ResponsePool read_pool_records(std::istream& in, const ParseOptions& options) {
  ResponsePool pool;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    pool.entries.push_back(RecordReader(line_no, options).entry(obj));
  }
  return pool;
}

ResponsePool parse_pool(std::istream& in, const ParseOptions& options) {
  ResponsePool pool = read_pool_records(in, options);
  const auto findings = validate_pool(pool);
  if (!findings.empty()) {
    std::string msg = format_finding(findings.front());
    if (findings.size() > 1) msg += " (and " + std::to_string(findings.size() - 1) + " more)";
    throw Error(ErrorKind::validation, msg);
  }
  return pool;
}

void serialize_pool(const ResponsePool& pool, std::ostream& out) {
  for (const PoolEntry& e : pool.entries) {
    ordered_json responses = ordered_json::array();
    for (const CandidateResponse& r : e.responses) {
      ordered_json scores;
      for (int a = 0; a < 4; ++a) scores[kAspectNames[a]] = aspect_value(r.scores, a);
      ordered_json obj;
      obj["model"] = r.source_model;
      obj["text"] = r.text;
      obj["scores"] = std::move(scores);
      if (r.token_count) obj["token_count"] = *r.token_count;
      responses.push_back(std::move(obj));
    }
    ordered_json rec;
    rec["instruction_id"] = e.instruction_id;
    rec["instruction"] = e.instruction;
    rec["responses"] = std::move(responses);
    out << rec.dump() << '\n';
  }
}

}  // namespace vickrey
