#include "formbench/seed.hpp"

namespace formbench {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t seed_derive(std::uint64_t master, std::string_view stage,
                          std::uint64_t index) noexcept {
  std::uint64_t s = mix64(master ^ fnv1a64(stage));
  return mix64(s + 0x9E3779B97F4A7C15ULL * (index + 1));
}

}  // namespace formbench
