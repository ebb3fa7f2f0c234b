#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace skosens {

/// Subset of {0, ..., J-1} stored as a bitmask (J <= 64).
class IndexSet {
 public:
  constexpr IndexSet() = default;
  constexpr explicit IndexSet(std::uint64_t bits) : bits_(bits) {}

  static constexpr IndexSet full(int dim) {
    return IndexSet(dim >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << dim) - 1);
  }
  static IndexSet of(std::initializer_list<int> indices) {
    IndexSet s;
    for (int i : indices) s.insert(i);
    return s;
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool contains(int i) const { return (bits_ >> i) & 1U; }
  constexpr void insert(int i) { bits_ |= std::uint64_t{1} << i; }
  constexpr void erase(int i) { bits_ &= ~(std::uint64_t{1} << i); }

  constexpr IndexSet complement(int dim) const { return IndexSet(full(dim).bits_ & ~bits_); }
  constexpr bool subset_of(IndexSet other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr IndexSet operator|(IndexSet o) const { return IndexSet(bits_ | o.bits_); }
  constexpr IndexSet operator&(IndexSet o) const { return IndexSet(bits_ & o.bits_); }
  constexpr bool operator==(const IndexSet&) const = default;

  std::vector<int> indices() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
    return out;
  }

 private:
  std::uint64_t bits_ = 0;
};

}  // namespace skosens
