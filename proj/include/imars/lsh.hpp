#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imars/bitvec.hpp"

namespace imars {

// Random-hyperplane LSH: bit i of a signature is 1 iff h_i . v >= 0.
// Hamming distance between signatures approximates angular distance.
class LshModel {
 public:
  LshModel(std::size_t bits, std::size_t dim, std::uint64_t seed);

  std::size_t bits() const { return bits_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  BitVec signature(std::span<const double> v) const;

 private:
  std::size_t bits_;
  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<double> hyperplanes_;  // bits x dim, row-major
};

}  // namespace imars
