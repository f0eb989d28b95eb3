#pragma once

#include <cstdint>
#include <random>

namespace swapfleet {

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t z);

/// Seed for stream `index` of a family rooted at `seed`. Output does not
/// depend on the order in which streams are created.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index);

/// Random stream with platform-independent output. std::mt19937_64 is fully
/// specified by the standard; the conversions below avoid the
/// implementation-defined std:: distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)), seed_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Exponential with the given rate (> 0).
  double exponential(double rate);

  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace swapfleet
