#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace disnn {

// Deterministic ChaCha20 keystream generator. A (seed, stream) pair selects an
// independent stream; the type satisfies UniformRandomBitGenerator.
class Prng {
 public:
  using result_type = std::uint64_t;

  explicit Prng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  // Uniform in [0, bound). bound must be positive.
  std::uint64_t uniform(std::uint64_t bound);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  // Rounded continuous Gaussian with standard deviation sigma.
  std::int64_t gaussian(double sigma);
  bool bit();

 private:
  void refill();

  static constexpr std::size_t kWords = 128;
  std::array<std::uint8_t, 32> key_{};
  std::uint32_t counter_ = 0;
  std::array<std::uint64_t, kWords> buf_{};
  std::size_t pos_ = kWords;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mix a seed with an index into a new 64-bit seed (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace disnn
