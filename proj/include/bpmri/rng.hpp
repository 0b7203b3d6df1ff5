#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace bpmri {

/*
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11). A generator is
 * fully described by (key, counter), so every patch of every sweep can draw
 * from its own stream without any shared state, and results do not depend on
 * how work is split across threads.
 *
 * Satisfies UniformRandomBitGenerator with 64-bit output.
 */
class Philox
{
public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    , counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)}
  {
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()()
  {
    if (used_ == 2) {
      output_ = Rounds(counter_, key_);
      Increment();
      used_ = 0;
    }
    auto const i = 2 * used_++;
    return static_cast<result_type>(output_[i]) | (static_cast<result_type>(output_[i + 1]) << 32);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  static Block Rounds(Block ctr, Key key)
  {
    for (int round = 0; round < 10; round++) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      std::uint64_t const p0 = static_cast<std::uint64_t>(0xD2511F53u) * ctr[0];
      std::uint64_t const p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * ctr[2];
      auto const hi0 = static_cast<std::uint32_t>(p0 >> 32);
      auto const lo0 = static_cast<std::uint32_t>(p0);
      auto const hi1 = static_cast<std::uint32_t>(p1 >> 32);
      auto const lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

private:
  void Increment()
  {
    if (++counter_[0] == 0) { ++counter_[1]; }
  }

  Key key_;
  Block counter_;
  Block output_{};
  int used_ = 2;
};

// Purposes get disjoint stream ranges so no two consumers ever share a counter.
enum class StreamTag : std::uint8_t
{
  Init = 1,
  Dictionary,
  Codes,
  NoisePrecision,
  WeightPrecision,
  Probabilities,
  Mask,
  ImageNoise,
  Test = 0xFF,
};

// 8 bits purpose | 24 bits sweep | 32 bits index.
constexpr std::uint64_t StreamId(StreamTag tag, std::uint64_t sweep, std::uint64_t index = 0)
{
  return (static_cast<std::uint64_t>(tag) << 56) | ((sweep & 0xFFFFFFull) << 32) | (index & 0xFFFFFFFFull);
}

inline Philox MakeRng(std::uint64_t seed, StreamTag tag, std::uint64_t sweep = 0, std::uint64_t index = 0)
{
  return Philox(seed, StreamId(tag, sweep, index));
}

template <typename Rng>
double SampleGamma(Rng &rng, double shape, double rate)
{
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(rng);
}

template <typename Rng>
double SampleBeta(Rng &rng, double a, double b)
{
  double const x = SampleGamma(rng, a, 1.0);
  double const y = SampleGamma(rng, b, 1.0);
  double const total = x + y;
  if (total <= 0.0) { return a >= b ? 1.0 : 0.0; }
  return x / total;
}

} // namespace bpmri
