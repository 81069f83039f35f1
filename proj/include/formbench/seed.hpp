#pragma once

#include <cstdint>
#include <string_view>

namespace formbench {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Derives an independent stage seed from the run's master seed.
///
///   s = mix64(master ^ fnv1a64(stage))
///   s = mix64(s + 0x9E3779B97F4A7C15 * (index + 1))
///
/// The derivation is part of the results contract and must not change.
std::uint64_t seed_derive(std::uint64_t master, std::string_view stage,
                          std::uint64_t index) noexcept;

}  // namespace formbench
