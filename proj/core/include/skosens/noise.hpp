#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace skosens {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3").
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Counter-based noise keyed by (seed, path id, step). Any draw can be
/// regenerated independently of all others, so coupled runs share increments
/// and replications never overlap.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint32_t path_id) : seed_(seed), path_id_(path_id) {}

  /// Standard normals for grid step `step` (Box-Muller on Philox output).
  void normals(std::uint64_t step, std::span<double> out) const;
  /// Uniforms in the open interval (0, 1) for grid step `step`.
  void uniforms(std::uint64_t step, std::span<double> out) const;

  std::uint64_t seed() const { return seed_; }
  std::uint32_t path_id() const { return path_id_; }

 private:
  PhiloxCounter block(std::uint64_t step, std::uint32_t lane, std::uint32_t index) const;

  std::uint64_t seed_;
  std::uint32_t path_id_;
};

}  // namespace skosens
