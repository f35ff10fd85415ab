#pragma once

#include <cstdint>

namespace kinuq {

// Counter-based generator: every value is addressed by (seed, stream, index,
// component) with no sequential state, so parallel sweeps draw identical
// samples regardless of evaluation order.
enum class SampleStream : std::uint64_t { train = 1, test = 2 };

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

}  // namespace detail

// Uniform draw on [-1, 1].
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t index, std::uint64_t component) {
  std::uint64_t x = detail::mix64(seed + 0x9e3779b97f4a7c15ull * (stream + 1));
  x = detail::mix64(x ^ detail::mix64(index + 0xd1b54a32d192ed03ull));
  x = detail::mix64(x + component * 0x2545f4914f6cdd1dull);
  const double u = static_cast<double>(x >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

inline double counter_uniform(std::uint64_t seed, SampleStream stream,
                              std::uint64_t index, std::uint64_t component) {
  return counter_uniform(seed, static_cast<std::uint64_t>(stream), index,
                         component);
}

}  // namespace kinuq
