#ifndef LQLAB_RANDOM_HPP
#define LQLAB_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lqlab {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream splitting: the seed of a child stream is a hash of the parent seed
// and a path of integer tags, so a child's draws never depend on how many
// values its siblings consumed or on the order they were generated in.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (auto tag : path) s = mix64(s ^ mix64(tag + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng make_stream(std::uint64_t master,
                       std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

// Top-level stream tags used by the experiment runner.
namespace stream {
inline constexpr std::uint64_t kDataset = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kModel = 3;
inline constexpr std::uint64_t kGate = 4;
inline constexpr std::uint64_t kChannel = 5;
inline constexpr std::uint64_t kRandomness = 6;
}  // namespace stream

}  // namespace lqlab

#endif  // LQLAB_RANDOM_HPP
