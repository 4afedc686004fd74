#pragma once

#include <cstdint>
#include <random>

namespace sbt {

/// SplitMix64 finalizer, used to turn (master seed, stream index) pairs into
/// well-separated engine seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derive an independent stream seed for a unit of work (trace index,
/// repetition index, bootstrap resample index, ...).
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x6A09E667F3BCC909ULL));
}

/// Standard-normal generator backed by mt19937_64. One instance per unit of
/// work; never shared across threads.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : gen_(seed) {}

  double gauss() { return dist_(gen_); }

  /// Uniform index in [0, n). Used for bootstrap resampling.
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace sbt
