#include "skosens/noise.hpp"

#include <cmath>
#include <numbers>

namespace skosens {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

constexpr std::uint32_t kNormalLane = 0;
constexpr std::uint32_t kUniformLane = 1;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in (0, 1) from two 32-bit words.
inline double open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

PhiloxCounter NoiseStream::block(std::uint64_t step, std::uint32_t lane,
                                 std::uint32_t index) const {
  const PhiloxCounter counter{static_cast<std::uint32_t>(step),
                              static_cast<std::uint32_t>(step >> 32), path_id_,
                              (lane << 24) | (index & 0x00FFFFFFU)};
  const PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  return philox4x32_10(counter, key);
}

void NoiseStream::normals(std::uint64_t step, std::span<double> out) const {
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const auto r = block(step, kNormalLane, static_cast<std::uint32_t>(i / 2));
    const double u1 = open_unit(r[0], r[1]);
    const double u2 = open_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i] = radius * std::cos(angle);
    if (i + 1 < out.size()) out[i + 1] = radius * std::sin(angle);
  }
}

void NoiseStream::uniforms(std::uint64_t step, std::span<double> out) const {
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const auto r = block(step, kUniformLane, static_cast<std::uint32_t>(i / 2));
    out[i] = open_unit(r[0], r[1]);
    if (i + 1 < out.size()) out[i + 1] = open_unit(r[2], r[3]);
  }
}

}  // namespace skosens
