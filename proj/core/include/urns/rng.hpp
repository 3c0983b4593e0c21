#pragma once

#include <cstdint>
#include <random>

namespace urns {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

// SplitMix64 finalizer. Used as the seed-derivation hash so that every
// replication of every experiment owns an independent engine.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for replication `index` of the experiment rooted at `master`.
Seed derive_seed(Seed master, std::uint64_t index) noexcept;

/// Two-level derivation: experiment `stream` under `master`, then replication `index`.
Seed derive_seed(Seed master, std::uint64_t stream, std::uint64_t index) noexcept;

Engine make_engine(Seed seed);

/// Uniform draw on the open interval (0, 1) built from the top 53 bits.
inline double uniform01(Engine& engine) noexcept {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace urns
