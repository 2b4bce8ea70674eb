#include "imars/cma.hpp"

#include "imars/errors.hpp"

namespace imars {

std::string to_string(CmaMode mode) {
  switch (mode) {
    case CmaMode::Ram: return "RAM";
    case CmaMode::Cam: return "CAM";
    case CmaMode::Gpcim: return "GPCiM";
  }
  return "?";
}

CmaState::CmaState(std::size_t rows, std::size_t cols)
    : rows_(rows),
      cols_(cols),
      value_(rows, BitVec(cols)),
      wildcard_(rows, BitVec(cols)),
      valid_(rows, false) {}

void CmaState::check_row(std::size_t row) const {
  if (row >= rows_) {
    throw ValidationError("CMA row " + std::to_string(row) + " out of range (R=" +
                          std::to_string(rows_) + ")");
  }
}

void CmaState::check_mode(CmaMode expected, const char* op) const {
  if (mode_ != expected) {
    throw ValidationError(std::string(op) + " requires " + to_string(expected) + " mode, array is in " +
                          to_string(mode_));
  }
}

void CmaState::write_row(std::size_t row, const BitVec& data, const CostScope& scope) {
  check_row(row);
  check_mode(CmaMode::Ram, "write_row");
  if (data.width() > cols_) throw ValidationError("write_row: data wider than the array");
  BitVec value(cols_);
  BitVec wildcard(cols_);
  for (std::size_t i = 0; i < data.width(); ++i) value.set(i, data.get(i));
  for (std::size_t i = data.width(); i < cols_; ++i) wildcard.set(i, true);  // pad with X
  value_[row] = std::move(value);
  wildcard_[row] = std::move(wildcard);
  valid_[row] = true;
  if (scope.fom != nullptr) scope.emit(Op::CmaWrite, scope.fom->cma_write);
}

BitVec CmaState::read_row(std::size_t row, const CostScope& scope) const {
  check_row(row);
  check_mode(CmaMode::Ram, "read_row");
  if (scope.fom != nullptr) scope.emit(Op::CmaRead, scope.fom->cma_read);
  return value_[row];  // X cells hold 0 in the value plane
}

LaneVec CmaState::row_lanes(std::size_t row, std::size_t lanes, std::size_t lane_bits) const {
  check_row(row);
  LaneVec out(lanes, 0);
  const BitVec& v = value_[row];
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    std::uint64_t raw = 0;
    for (std::size_t b = 0; b < lane_bits; ++b) {
      if (v.get(lane * lane_bits + b)) raw |= std::uint64_t{1} << b;
    }
    // sign-extend
    const std::uint64_t sign = std::uint64_t{1} << (lane_bits - 1);
    std::int64_t val = static_cast<std::int64_t>(raw);
    if (raw & sign) val -= static_cast<std::int64_t>(sign << 1);
    out[lane] = val;
  }
  return out;
}

LaneVec CmaState::in_array_add(std::span<const std::size_t> rows, const CostScope& scope,
                               std::size_t lanes, std::size_t lane_bits) const {
  check_mode(CmaMode::Gpcim, "in_array_add");
  if (rows.empty()) throw ValidationError("in_array_add: empty row list");
  for (auto r : rows) check_row(r);
  LaneVec acc = row_lanes(rows[0], lanes, lane_bits);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    LaneVec next = row_lanes(rows[i], lanes, lane_bits);
    for (std::size_t lane = 0; lane < lanes; ++lane) acc[lane] += next[lane];
    if (scope.fom != nullptr) scope.emit(Op::CmaAdd, scope.fom->cma_add);
  }
  return acc;
}

SearchResult CmaState::threshold_search(const BitVec& query, std::size_t theta,
                                        const CostScope& scope) const {
  check_mode(CmaMode::Cam, "threshold_search");
  if (query.width() != cols_) {
    throw ValidationError("threshold_search: query width " + std::to_string(query.width()) +
                          " != " + std::to_string(cols_));
  }
  SearchResult result;
  for (std::size_t row = 0; row < rows_; ++row) {
    if (!valid_[row]) continue;
    if (BitVec::hamming_masked(value_[row], query, wildcard_[row]) <= theta) {
      result.matched_rows.push_back(row);
    }
  }
  if (!result.matched_rows.empty()) result.first_match = result.matched_rows.front();
  // O(1) array semantics: one event regardless of R or match count.
  if (scope.fom != nullptr) scope.emit(Op::CmaSearch, scope.fom->cma_search);
  return result;
}

bool CmaState::row_valid(std::size_t row) const {
  check_row(row);
  return valid_[row];
}

void CmaState::set_row_valid(std::size_t row, bool valid) {
  check_row(row);
  valid_[row] = valid;
}

const BitVec& CmaState::row_value(std::size_t row) const {
  check_row(row);
  return value_[row];
}

const BitVec& CmaState::row_wildcard(std::size_t row) const {
  check_row(row);
  return wildcard_[row];
}

}  // namespace imars
