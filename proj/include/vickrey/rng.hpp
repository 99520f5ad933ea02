#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <string_view>

namespace vickrey {

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives the seed of a named sub-stream, e.g.
/// derive_seed(master, {"respond", agent_id, instruction_id}).
/// The result depends on the master seed and on every key in order, so streams
/// for different (agent, instruction) pairs are independent of visit order.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::string_view> keys) noexcept;

/// Seeded random stream with platform-independent transforms.
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the
/// standard). Distribution code in <random> is implementation-defined, so the
/// uniform, index and normal draws are implemented here to keep generated
/// files byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  /// Standard normal via the Box-Muller transform.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

}  // namespace vickrey
