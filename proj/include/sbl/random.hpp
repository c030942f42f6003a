#pragma once

#include <array>
#include <cstdint>

namespace sbl {

/// xoshiro256** seeded through splitmix64.
///
/// Every variate is produced by code in this file (no std:: distributions,
/// whose algorithms are implementation-defined), so a seed reproduces the
/// same stream on any platform with an IEEE-754 libm:
///   uniform  -- top 53 bits of the next word, mapped into (0, 1)
///   normal   -- Marsaglia polar method, spare value cached
///   gamma    -- Marsaglia-Tsang squeeze; shape < 1 boosted by U^(1/shape)
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double normal() noexcept;
  /// Gamma with the given shape and rate (mean shape / rate). Both must be
  /// positive and finite; the caller checks.
  double gamma(double shape, double rate) noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sbl
