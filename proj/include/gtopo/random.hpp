#ifndef GTOPO_RANDOM_HPP
#define GTOPO_RANDOM_HPP

#include <cstdint>
#include <random>

namespace gtopo {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Child seeds are derived from (master, stream index)
// by hashing the pair, so run r of an ensemble always sees the same stream no
// matter how runs are scheduled across threads.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ (stream * 0xd1b54a32d192ed03ULL + 1));
}

// Named sub-streams used by the harness.
enum class Stream : std::uint64_t {
  kDictionary = 1ULL << 40,
  kCovariance = 2ULL << 40,
  kRuns = 3ULL << 40,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream s,
                                 std::uint64_t index = 0) {
  return derive_seed(master, static_cast<std::uint64_t>(s) + index);
}

}  // namespace gtopo

#endif  // GTOPO_RANDOM_HPP
