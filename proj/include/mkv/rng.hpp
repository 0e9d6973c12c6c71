#pragma once

#include <array>
#include <cstdint>

#include "mkv/common.hpp"

namespace mkv {

/// Identifies one scalar draw. The tuple maps injectively into a Philox
/// counter, so any draw can be regenerated in isolation: evaluation order
/// and thread count never matter.
struct Lane {
  std::uint32_t replica = 0;
  std::uint32_t particle = 0;
  std::uint64_t step = 0;
  std::uint32_t draw = 0;
};

/// Counter-based random stream (Philox 4x32-10). Stateless per draw: the
/// same (master_seed, lane) always yields the same value.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed) : seed_(master_seed) {}

  std::uint64_t master_seed() const { return seed_; }

  /// Uniform draw in the open interval (0,1).
  double uniform(const Lane& lane) const;

  /// Standard normal draw via the inverse CDF of uniform(lane), so normal
  /// draws inherit the counter-based reproducibility.
  double normal(const Lane& lane) const;

  /// Raw 4x32 Philox output for the lane's counter.
  std::array<std::uint32_t, 4> words(const Lane& lane) const;

 private:
  std::uint64_t seed_;
};

/// Inverse standard normal CDF (Wichura's AS 241 / PPND16), accurate to
/// full double precision on (0,1).
double inverse_normal_cdf(double p);

}  // namespace mkv
