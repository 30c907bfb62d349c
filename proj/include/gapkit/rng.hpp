#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gapkit {

// 64-bit FNV-1a over the bytes of `label`.
std::uint64_t Fnv1a64(std::string_view label) noexcept;

// One SplitMix64 step: add the golden gamma, then mix. A bijection.
std::uint64_t SplitMix64(std::uint64_t x) noexcept;

// Seed split used everywhere a sub-stream is needed:
//   DeriveSeed(seed, label) = SplitMix64(seed ^ Fnv1a64(label))
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view label) noexcept;
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view label,
                         std::uint64_t index) noexcept;

// Seeded random stream over mt19937_64 with hand-written distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() {
    ++draws_;
    return engine_();
  }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform();

  // Uniform integer in [0, n); n must be > 0. Rejection sampling, no modulo bias.
  std::uint64_t UniformInt(std::uint64_t n);

  // Standard normal via the Marsaglia polar method.
  double Normal();

  // Number of raw 64-bit words consumed so far.
  std::uint64_t draws() const noexcept { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gapkit
