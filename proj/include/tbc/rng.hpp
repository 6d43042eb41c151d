#ifndef TBC_RNG_HPP
#define TBC_RNG_HPP

#include <cstdint>
#include <random>

namespace tbc {

using Engine = std::mt19937_64;

/// Purpose tags that keep streams of one replication apart.
enum class Stream : std::uint64_t {
  Sample = 0x53414d50,
  Integration = 0x494e5447,
  Constants = 0x434f4e53,
  Synthetic = 0x53594e54,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Engine for (seed, replication, purpose). The triple is hashed into a seed
/// sequence, so replications can run in any order or in parallel and still
/// reproduce bit for bit.
inline Engine make_stream(std::uint64_t seed, std::uint64_t replication, Stream purpose) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(replication + 0x632be59bd9b4e019ULL));
  const std::uint64_t c = splitmix64(b ^ static_cast<std::uint64_t>(purpose));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return Engine(seq);
}

/// Derives a child seed, e.g. one per window size of a campaign.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(splitmix64(seed) ^ splitmix64(salt ^ 0xd1b54a32d192ed03ULL));
}

inline double uniform01(Engine& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace tbc

#endif  // TBC_RNG_HPP
