#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "imars/bitvec.hpp"
#include "imars/ledger.hpp"

namespace imars {

enum class CmaMode : std::uint8_t { Ram, Cam, Gpcim };

std::string to_string(CmaMode mode);

struct SearchResult {
  std::vector<std::size_t> matched_rows;  // ascending (priority-encoder order)
  std::optional<std::size_t> first_match;
};

using LaneVec = std::vector<std::int64_t>;

// One configurable memory array: R x cols ternary cells with RAM / CAM /
// GPCiM operation modes. Mode switches preserve contents. Every costed
// operation emits its figure-of-merit through the given CostScope.
class CmaState {
 public:
  CmaState() = default;
  CmaState(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  CmaMode mode() const { return mode_; }
  void set_mode(CmaMode mode) { mode_ = mode; }

  // RAM write. Data shorter than the row width is right-padded with X.
  void write_row(std::size_t row, const BitVec& data, const CostScope& scope);

  // RAM read; X cells read as 0.
  BitVec read_row(std::size_t row, const CostScope& scope) const;

  // GPCiM lane-wise addition over the given rows; wide accumulator, no
  // wraparound. Emits one add event per accumulated row beyond the first.
  LaneVec in_array_add(std::span<const std::size_t> rows, const CostScope& scope,
                       std::size_t lanes = 32, std::size_t lane_bits = 8) const;

  // CAM threshold search over occupied rows; stored X never mismatches.
  // One search event per call regardless of array size or match count.
  SearchResult threshold_search(const BitVec& query, std::size_t theta,
                                const CostScope& scope) const;

  bool row_valid(std::size_t row) const;
  void set_row_valid(std::size_t row, bool valid);

  // Functional-only accessors (no mode check, no cost); used by the
  // fabric-level pipeline which accounts for cost at a coarser grain.
  const BitVec& row_value(std::size_t row) const;
  const BitVec& row_wildcard(std::size_t row) const;
  LaneVec row_lanes(std::size_t row, std::size_t lanes = 32, std::size_t lane_bits = 8) const;

 private:
  void check_row(std::size_t row) const;
  void check_mode(CmaMode expected, const char* op) const;

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  CmaMode mode_ = CmaMode::Ram;
  std::vector<BitVec> value_;
  std::vector<BitVec> wildcard_;  // set bit = X (don't-care)
  std::vector<bool> valid_;
};

}  // namespace imars
