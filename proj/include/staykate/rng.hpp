#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace staykate {

// Named random streams derived from one pool seed. Each stream gets an
// independent sub-seed so adding a consumer never perturbs another one.
enum class Stream : std::uint64_t {
  kSplit = 1,
  kRandomSelect = 2,
  kRandomStatic = 3,
  kTestSubsample = 4,
};

/// splitmix64 finalizer over (seed, counter).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter);

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

// mt19937_64 with bounded draws and shuffles written out explicitly:
// std::uniform_int_distribution and std::shuffle are implementation-defined,
// and pool splits must be identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// First `k` positions of a Fisher-Yates shuffle of [0, n).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace staykate
