#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imars/bitvec.hpp"
#include "imars/lsh.hpp"

namespace imars {

// Symmetrically quantized embedding table: n rows of `dim` int8 lanes
// plus the per-table dequantization scale. ItET tables additionally
// carry one LSH signature per row.
struct EmbeddingTableData {
  std::size_t entries = 0;
  std::size_t dim = 32;
  double scale = 1.0;
  std::vector<std::int8_t> rows;      // entries x dim
  std::vector<BitVec> signatures;     // empty unless ItET

  std::span<const std::int8_t> row(std::size_t i) const {
    return {rows.data() + i * dim, dim};
  }
  double dequant(std::int8_t q) const { return scale * static_cast<double>(q); }
  std::vector<double> dequant_row(std::size_t i) const;

  // Row bits as stored in a CMA: dim int8 lanes, little-endian bytes.
  BitVec row_bits(std::size_t i) const;
};

// scale = max|x| / 127 (1.0 for an all-zero table); values round to the
// nearest level, so per-element dequantization error <= scale/2.
EmbeddingTableData quantize_table(std::span<const double> rows, std::size_t entries,
                                  std::size_t dim);

// Computes per-row signatures from the dequantized rows.
void attach_signatures(EmbeddingTableData& table, const LshModel& lsh);

}  // namespace imars
