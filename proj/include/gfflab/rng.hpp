#pragma once

#include <cstdint>
#include <initializer_list>

namespace gfflab::rng {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: the value at (key, counter) is a pure function of
/// both, so any substream can be regenerated out of order.
constexpr std::uint64_t bits(std::uint64_t key, std::uint64_t counter) noexcept {
  return mix64(mix64(key ^ 0x6A09E667F3BCC909ULL) + counter * 0xD1B54A32D192ED03ULL);
}

/// Uniform on [0, 1) with 53 random bits.
constexpr double uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  return static_cast<double>(bits(key, counter) >> 11) * 0x1.0p-53;
}

/// Standard normal at (key, counter), Box-Muller on two counter slots.
double normal(std::uint64_t key, std::uint64_t counter) noexcept;

/// Child seed keyed by a path of integers, e.g. derive(master, replicate, 3).
constexpr std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(seed);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x243F6A8885A308D3ULL));
  return s;
}

template <typename... Ts>
constexpr std::uint64_t derive(std::uint64_t seed, Ts... path) noexcept {
  return derive(seed, {static_cast<std::uint64_t>(path)...});
}

/// Sequential view of one counter stream.
class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) noexcept : key_(key) {}
  double normal() noexcept { return rng::normal(key_, next_++); }
  double uniform() noexcept { return rng::uniform(key_, next_++); }
  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t next_ = 0;
};

}  // namespace gfflab::rng
