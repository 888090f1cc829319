#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace dlab {

// Counter-based generator: output i of a stream is a pure function of
// (seed, purpose, i), so parallel jobs never share state and any draw can be
// reproduced without replaying the stream.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view purpose)
      : key_(derive_key(seed, purpose)), counter_(0) {}

  std::uint64_t next_u64() { return mix(key_, counter_++); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). n must be > 0.
  std::uint32_t uniform_index(std::uint32_t n) {
    // 64-bit multiply-shift; bias is < 2^-32 which is irrelevant here.
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller. Consumes two uniforms per draw.
  double normal() {
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::string_view purpose) {
    // FNV-1a over the purpose tag, folded into the seed.
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : purpose) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ull;
    }
    return splitmix64(splitmix64(seed) ^ h);
  }

  static std::uint64_t mix(std::uint64_t key, std::uint64_t ctr) {
    return splitmix64(key ^ splitmix64(ctr + 0x632BE59BD9B4E019ull));
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace dlab
