#ifndef LQG_RNG_HPP
#define LQG_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based RNG (Philox4x32-10). Every draw is a pure function of
// (seed, tag, replicate, index), so parallel loops produce identical
// output for any scheduling and any worker count.

namespace lqg::rng {

struct Block {
  std::array<std::uint32_t, 4> w;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Block philox4x32(std::uint32_t k0, std::uint32_t k1,
                        std::array<std::uint32_t, 4> ctr) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
    const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
    k0 += W0;
    k1 += W1;
  }
  return Block{ctr};
}

// One independent stream per unit of work, keyed by (seed, tag, replicate).
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint32_t tag, std::uint64_t replicate)
      : replicate_(replicate) {
    const std::uint64_t mixed = splitmix64(seed ^ splitmix64(tag));
    k0_ = std::uint32_t(mixed);
    k1_ = std::uint32_t(mixed >> 32);
  }

  Block block(std::uint64_t index) const {
    return philox4x32(k0_, k1_,
                      {std::uint32_t(replicate_), std::uint32_t(replicate_ >> 32),
                       std::uint32_t(index), std::uint32_t(index >> 32)});
  }

  // Uniform in (0,1), 53-bit resolution.
  double uniform(std::uint64_t index) const {
    const Block b = block(index);
    const std::uint64_t u = (std::uint64_t(b.w[0]) << 32) | b.w[1];
    return double((u >> 11) + 0.5) * 0x1p-53;
  }

  // Two independent standard normals per counter (Box-Muller).
  std::array<double, 2> normal2(std::uint64_t index) const {
    const Block b = block(index);
    const std::uint64_t ua = (std::uint64_t(b.w[0]) << 32) | b.w[1];
    const std::uint64_t ub = (std::uint64_t(b.w[2]) << 32) | b.w[3];
    const double u1 = double((ua >> 11) + 0.5) * 0x1p-53;
    const double u2 = double((ub >> 11) + 0.5) * 0x1p-53;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
  }

  double normal(std::uint64_t index) const { return normal2(index)[0]; }

 private:
  std::uint32_t k0_, k1_;
  std::uint64_t replicate_;
};

// Stream tags, one per module consumer.
enum Tag : std::uint32_t {
  kBandNoise = 1,
  kWalkerStep = 2,
  kWalkerBridge = 3,
  kMeasureDraw = 4,
  kJitter = 5,
  kShuffle = 6,
};

}  // namespace lqg::rng

#endif
