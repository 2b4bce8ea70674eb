#include "imars/embedding.hpp"

#include <cmath>

#include "imars/errors.hpp"

namespace imars {

std::vector<double> EmbeddingTableData::dequant_row(std::size_t i) const {
  std::vector<double> out(dim);
  auto r = row(i);
  for (std::size_t d = 0; d < dim; ++d) out[d] = dequant(r[d]);
  return out;
}

BitVec EmbeddingTableData::row_bits(std::size_t i) const {
  auto r = row(i);
  std::vector<std::uint8_t> bytes(dim);
  for (std::size_t d = 0; d < dim; ++d) bytes[d] = static_cast<std::uint8_t>(r[d]);
  return BitVec::from_bytes(bytes);
}

EmbeddingTableData quantize_table(std::span<const double> rows, std::size_t entries,
                                  std::size_t dim) {
  if (entries < 1) throw ValidationError("quantize_table: n must be >= 1");
  if (rows.size() != entries * dim) throw ValidationError("quantize_table: shape mismatch");

  double max_abs = 0.0;
  for (double x : rows) {
    if (!std::isfinite(x)) throw ValidationError("quantize_table: non-finite input value");
    max_abs = std::max(max_abs, std::fabs(x));
  }

  EmbeddingTableData table;
  table.entries = entries;
  table.dim = dim;
  table.scale = max_abs > 0.0 ? max_abs / 127.0 : 1.0;
  table.rows.resize(entries * dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const long q = std::lround(rows[i] / table.scale);
    table.rows[i] = static_cast<std::int8_t>(std::clamp(q, -127L, 127L));
  }
  return table;
}

void attach_signatures(EmbeddingTableData& table, const LshModel& lsh) {
  table.signatures.clear();
  table.signatures.reserve(table.entries);
  for (std::size_t i = 0; i < table.entries; ++i) {
    table.signatures.push_back(lsh.signature(table.dequant_row(i)));
  }
}

}  // namespace imars
