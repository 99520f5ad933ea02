#include "vickrey/suppliers.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "vickrey/error.hpp"
#include "vickrey/util.hpp"

namespace vickrey {

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::config, msg); }

double parse_number(std::string_view text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    config_error(what + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

Strategy parse_strategy(std::string_view text) {
  const auto parts = split(text, ':');
  Strategy s;
  if (parts[0] == "truthful" && parts.size() == 1) {
    s = Strategy::truthful();
  } else if (parts[0] == "underbid" && parts.size() == 2) {
    s = Strategy::underbid(parse_number(parts[1], "underbid fraction"));
  } else if (parts[0] == "overbid_capped" && parts.size() == 2) {
    s = Strategy::overbid_capped(parse_number(parts[1], "overbid_capped fraction"));
  } else if (parts[0] == "random_in" && parts.size() == 3) {
    s = Strategy::random_in(parse_number(parts[1], "random_in lower bound"),
                            parse_number(parts[2], "random_in upper bound"));
  } else {
    config_error("unknown strategy '" + std::string(text) + "'");
  }
  validate(s);
  return s;
}

std::string to_string(const Strategy& s) {
  switch (s.kind) {
    case Strategy::Kind::truthful: return "truthful";
    case Strategy::Kind::underbid: return "underbid:" + format_double(s.fraction);
    case Strategy::Kind::overbid_capped: return "overbid_capped:" + format_double(s.fraction);
    case Strategy::Kind::random_in:
      return "random_in:" + format_double(s.lo) + ":" + format_double(s.hi);
  }
  return "truthful";
}

void validate(const Strategy& s) {
  switch (s.kind) {
    case Strategy::Kind::truthful: return;
    case Strategy::Kind::underbid:
    case Strategy::Kind::overbid_capped:
      if (!(s.fraction > 0.0 && s.fraction <= 1.0)) {
        config_error("strategy fraction must lie in (0, 1], got " + format_double(s.fraction));
      }
      return;
    case Strategy::Kind::random_in:
      if (!(s.lo >= 0.0 && s.lo <= s.hi) || !std::isfinite(s.hi)) {
        config_error("random_in bounds must satisfy 0 <= lo <= hi");
      }
      return;
  }
}

double apply_strategy(const Strategy& s, double true_quality, Rng& stream) {
  switch (s.kind) {
    case Strategy::Kind::truthful: return true_quality;
    case Strategy::Kind::underbid: return s.fraction * true_quality;
    case Strategy::Kind::overbid_capped: return true_quality / s.fraction;
    case Strategy::Kind::random_in: return stream.uniform(s.lo, s.hi);
  }
  return true_quality;
}

void validate(const AgentConfig& a) {
  const std::string who = "agent '" + a.agent_id + "'";
  if (a.agent_id.empty()) config_error("agent id is empty");
  if (!(a.length_mean > 0.0) || !std::isfinite(a.length_mean)) {
    config_error(who + ": length_mean must be positive");
  }
  if (!(a.length_dispersion >= 0.0)) config_error(who + ": length_dispersion must be >= 0");
  if (!(a.quality_noise >= 0.0)) config_error(who + ": quality_noise must be >= 0");
  validate(a.strategy);
  if (a.vocab_profile.empty()) config_error(who + ": vocab_profile is empty");
  double total = 0.0;
  for (double w : a.vocab_profile) {
    if (!(w >= 0.0)) config_error(who + ": vocab_profile weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) config_error(who + ": vocab_profile must sum to 1");
}

std::vector<double> tilted_vocab_profile(std::size_t vocab_size, double tilt) {
  std::vector<double> w(vocab_size, 1.0);
  if (vocab_size > 1) {
    for (std::size_t k = 0; k < vocab_size; ++k) {
      const double pos = static_cast<double>(k) / static_cast<double>(vocab_size - 1) - 0.5;
      w[k] = std::exp(tilt * pos);
    }
  }
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return w;
}

std::string vocab_token(std::size_t k) { return "t" + std::to_string(k); }

double synthetic_token_quality(std::size_t k, std::size_t vocab_size) {
  if (vocab_size <= 1) return 3.0;
  return 1.0 + 4.0 * static_cast<double>(k) / static_cast<double>(vocab_size - 1);
}

double synthetic_sequence_quality(std::span<const std::uint32_t> tokens,
                                  std::size_t vocab_size) {
  if (tokens.empty()) return 1.0;
  double total = 0.0;
  for (std::uint32_t t : tokens) total += synthetic_token_quality(t, vocab_size);
  return total / static_cast<double>(tokens.size());
}

void validate(const SyntheticPoolConfig& cfg) {
  if (cfg.agents.size() < 2) config_error("a synthetic pool needs at least 2 agents");
  std::set<std::string_view> ids;
  for (const AgentConfig& a : cfg.agents) {
    validate(a);
    if (!ids.insert(a.agent_id).second) config_error("duplicate agent '" + a.agent_id + "'");
  }
  const ScoreModel& m = cfg.score_model;
  if (!std::isfinite(m.intercept) || !std::isfinite(m.slope) || !(m.latent_noise >= 0.0) ||
      !(m.aspect_noise >= 0.0)) {
    config_error("score_model parameters must be finite with non-negative noise");
  }
}

SyntheticPoolConfig default_synthetic_config(std::size_t n_instructions, std::uint64_t seed,
                                             std::size_t vocab_size) {
  struct Row {
    const char* id;
    double mean;
    double tilt;
  };
  static constexpr Row kRows[] = {
      {"alpha", 320.0, 1.5}, {"beta", 200.0, 0.75}, {"gamma", 120.0, 0.0}, {"delta", 60.0, -0.75}};
  SyntheticPoolConfig cfg;
  cfg.n_instructions = n_instructions;
  cfg.seed = seed;
  for (const Row& r : kRows) {
    AgentConfig a;
    a.agent_id = r.id;
    a.length_mean = r.mean;
    a.length_dispersion = 0.35;
    a.vocab_profile = tilted_vocab_profile(vocab_size, r.tilt);
    cfg.agents.push_back(std::move(a));
  }
  return cfg;
}

SyntheticPoolConfig load_synthetic_config(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(e.what());
  }

  SyntheticPoolConfig cfg;
  std::size_t vocab_size = 32;
  struct PendingAgent {
    AgentConfig agent;
    std::optional<double> tilt;
  };
  std::vector<PendingAgent> pending;

  auto number = [](const pt::ptree& section, const std::string& where) {
    return [&section, where](const std::string& key) {
      return parse_number(section.get<std::string>(key), where + "." + key);
    };
  };

  for (const auto& [name, section] : tree) {
    const std::string where = "[" + name + "]";
    if (name == "pool") {
      auto num = number(section, where);
      for (const auto& [key, value] : section) {
        if (key == "n_instructions") {
          const double n = num(key);
          if (!(n >= 0.0) || n != std::floor(n)) config_error(where + " n_instructions must be a count");
          cfg.n_instructions = static_cast<std::size_t>(n);
        } else if (key == "seed") {
          const std::string text = value.get_value<std::string>();
          std::uint64_t seed = 0;
          auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
          if (ec != std::errc() || ptr != text.data() + text.size()) {
            config_error(where + " seed must be an unsigned integer");
          }
          cfg.seed = seed;
        } else if (key == "vocab_size") {
          const double v = num(key);
          if (!(v >= 2.0 && v <= 64.0) || v != std::floor(v)) {
            config_error(where + " vocab_size must be an integer in [2, 64]");
          }
          vocab_size = static_cast<std::size_t>(v);
        } else {
          config_error(where + " unknown key '" + key + "'");
        }
      }
    } else if (name == "score_model") {
      auto num = number(section, where);
      for (const auto& [key, value] : section) {
        if (key == "intercept") cfg.score_model.intercept = num(key);
        else if (key == "slope") cfg.score_model.slope = num(key);
        else if (key == "latent_noise") cfg.score_model.latent_noise = num(key);
        else if (key == "aspect_noise") cfg.score_model.aspect_noise = num(key);
        else config_error(where + " unknown key '" + key + "'");
      }
    } else if (name.rfind("agent.", 0) == 0) {
      PendingAgent p;
      p.agent.agent_id = name.substr(6);
      auto num = number(section, where);
      for (const auto& [key, value] : section) {
        if (key == "length_mean") p.agent.length_mean = num(key);
        else if (key == "length_dispersion") p.agent.length_dispersion = num(key);
        else if (key == "quality_noise") p.agent.quality_noise = num(key);
        else if (key == "strategy") p.agent.strategy = parse_strategy(value.get_value<std::string>());
        else if (key == "vocab_tilt") p.tilt = num(key);
        else if (key == "vocab_profile") {
          const std::string list = value.get_value<std::string>();
          for (std::string_view w : split(list, ',')) {
            while (!w.empty() && w.front() == ' ') w.remove_prefix(1);
            while (!w.empty() && w.back() == ' ') w.remove_suffix(1);
            p.agent.vocab_profile.push_back(parse_number(w, where + ".vocab_profile"));
          }
        } else {
          config_error(where + " unknown key '" + key + "'");
        }
      }
      if (p.tilt && !p.agent.vocab_profile.empty()) {
        config_error(where + " give either vocab_tilt or vocab_profile, not both");
      }
      pending.push_back(std::move(p));
    } else {
      config_error("unknown section " + where);
    }
  }

  for (PendingAgent& p : pending) {
    if (p.agent.vocab_profile.empty()) {
      p.agent.vocab_profile = tilted_vocab_profile(vocab_size, p.tilt.value_or(0.0));
    } else {
      double total = 0.0;
      for (double w : p.agent.vocab_profile) total += w;
      if (total > 0.0) {
        for (double& w : p.agent.vocab_profile) w /= total;
      }
    }
    cfg.agents.push_back(std::move(p.agent));
  }
  validate(cfg);
  return cfg;
}

std::string instruction_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "inst-%06zu", index);
  return buf;
}

std::uint64_t respond_stream_seed(std::uint64_t master, std::string_view agent_id,
                                  std::string_view instruction_id) {
  return derive_seed(master, {"respond", agent_id, instruction_id});
}

SupplierBid agent_respond(const AgentConfig& agent, Rng& stream) {
  const double sigma = agent.length_dispersion;
  const double mu = std::log(agent.length_mean) - 0.5 * sigma * sigma;
  const double raw = std::exp(mu + sigma * stream.normal());
  const auto length = static_cast<std::uint64_t>(std::max(1.0, std::round(raw)));

  // Inverse-CDF draws over the cumulative vocabulary profile.
  std::vector<double> cdf(agent.vocab_profile.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) cdf[k] = (acc += agent.vocab_profile[k]);

  std::string text;
  text.reserve(length * 4);
  for (std::uint64_t i = 0; i < length; ++i) {
    const double u = stream.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    if (i > 0) text.push_back(' ');
    text += vocab_token(static_cast<std::size_t>(it - cdf.begin()));
  }

  SupplierBid bid;
  bid.agent_id = agent.agent_id;
  bid.response.source_model = agent.agent_id;
  bid.response.text = std::move(text);
  bid.response.token_count = length;
  bid.declared_quality = apply_strategy(agent.strategy, static_cast<double>(length), stream);
  bid.valuation = bid.declared_quality;
  return bid;
}

AspectScores score_response(const ScoreModel& model, const AgentConfig& agent,
                            std::uint64_t length, Rng& stream) {
  double latent = model.intercept + model.slope * std::log(static_cast<double>(length)) +
                  model.latent_noise * stream.normal();
  if (agent.quality_noise > 0.0) latent += agent.quality_noise * stream.normal();
  auto aspect = [&] { return std::clamp(latent + model.aspect_noise * stream.normal(), 1.0, 5.0); };
  AspectScores s;
  s.instruction_following = aspect();
  s.truthfulness = aspect();
  s.honesty = aspect();
  s.helpfulness = aspect();
  return s;
}

ResponsePool generate_synthetic_pool(const SyntheticPoolConfig& cfg) {
  validate(cfg);
  ResponsePool pool;
  pool.entries.reserve(cfg.n_instructions);
  for (std::size_t i = 0; i < cfg.n_instructions; ++i) {
    PoolEntry e;
    e.instruction_id = instruction_id_for(i);
    e.instruction = "synthetic instruction " + std::to_string(i);
    e.responses.reserve(cfg.agents.size());
    for (const AgentConfig& agent : cfg.agents) {
      Rng respond(respond_stream_seed(cfg.seed, agent.agent_id, e.instruction_id));
      SupplierBid bid = agent_respond(agent, respond);
      Rng score(derive_seed(cfg.seed, {"score", agent.agent_id, e.instruction_id}));
      bid.response.scores = score_response(cfg.score_model, agent, *bid.response.token_count, score);
      e.responses.push_back(std::move(bid.response));
    }
    pool.entries.push_back(std::move(e));
  }
  return pool;
}

}  // namespace vickrey
