#include "urns/rng.hpp"

#include <array>

namespace urns {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Seed derive_seed(Seed master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

Seed derive_seed(Seed master, std::uint64_t stream, std::uint64_t index) noexcept {
  return derive_seed(derive_seed(master, stream), index);
}

Engine make_engine(Seed seed) {
  // Seed the full Mersenne state from a SplitMix64 sequence; a single 64-bit
  // word would leave most of the state correlated across nearby seeds.
  std::array<std::uint32_t, 8> words{};
  std::uint64_t x = seed;
  for (std::size_t i = 0; i < words.size(); i += 2) {
    x = splitmix64(x);
    words[i] = static_cast<std::uint32_t>(x);
    words[i + 1] = static_cast<std::uint32_t>(x >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

}  // namespace urns
