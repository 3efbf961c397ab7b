#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace acam {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Sub-seed for (seed, i0, i1, ...). Order-independent across workers: the
/// value depends only on the path, never on evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

/// Standard normal draw. Scaling a shared draw keeps realizations aligned
/// across noise levels (common random numbers).
double standard_normal(Rng& rng);

}  // namespace acam
