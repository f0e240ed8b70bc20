#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace msda {

/// Derive an independent stream seed from a parent seed and a role label:
/// splitmix64(seed ^ fnv1a64(role)). Every stochastic component of the
/// toolkit obtains its seed this way from the single user-facing seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view role);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view role, std::uint64_t index);

/// Seeded generator with library-independent transforms. The mt19937_64
/// output sequence is fixed by the standard; the uniform and normal maps are
/// implemented here so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Box-Muller; one draw per call.
  double normal(double mean = 0.0, double sd = 1.0);
  /// Uniform on {0, ..., n-1}.
  std::uint64_t below(std::uint64_t n);
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace msda
