#include "imars/fabric.hpp"

#include "imars/errors.hpp"

namespace imars {

Fabric::Fabric(ArchConfig arch, CostTable fom) : arch_(arch), fom_(std::move(fom)) {
  validate_arch(arch_);
  validate_cost_table(fom_);
  cmas_.assign(arch_.banks * arch_.mats_per_bank * arch_.cmas_per_mat,
               CmaState(arch_.cma_rows, arch_.cma_cols));
}

CmaState& Fabric::cma(std::size_t bank, std::size_t mat, std::size_t cma) {
  if (bank >= arch_.banks || mat >= arch_.mats_per_bank || cma >= arch_.cmas_per_mat) {
    throw ValidationError("fabric coordinates out of range");
  }
  return cmas_[(bank * arch_.mats_per_bank + mat) * arch_.cmas_per_mat + cma];
}

const CmaState& Fabric::cma(std::size_t bank, std::size_t mat, std::size_t cma) const {
  return const_cast<Fabric*>(this)->cma(bank, mat, cma);
}

std::string Fabric::bank_id(std::size_t bank) { return "b" + std::to_string(bank); }

std::string Fabric::mat_id(std::size_t bank, std::size_t mat) {
  return bank_id(bank) + ".m" + std::to_string(mat);
}

std::string Fabric::component_id(std::size_t bank, std::size_t mat, std::size_t cma) {
  return mat_id(bank, mat) + ".c" + std::to_string(cma);
}

LaneVec Fabric::intra_mat_reduce(Stage stage, Category category, std::size_t bank, std::size_t mat,
                                 std::span<const LaneVec> inputs, std::uint64_t group) {
  if (inputs.empty()) throw ValidationError("intra_mat_reduce: empty input list");
  if (inputs.size() > arch_.cmas_per_mat) {
    throw ValidationError("intra_mat_reduce: more inputs than CMAs per mat");
  }
  const std::size_t lanes = inputs[0].size();
  LaneVec sum(lanes, 0);
  for (const auto& in : inputs) {
    if (in.size() != lanes) throw ValidationError("intra_mat_reduce: lane-width mismatch");
    for (std::size_t i = 0; i < lanes; ++i) sum[i] += in[i];
  }
  scope(stage, category, mat_id(bank, mat) + ".tree", group).emit(Op::IntraMatAdd, fom_.intra_mat_add);
  return sum;
}

std::size_t Fabric::reduction_rounds(std::size_t n, std::size_t fanin) {
  if (n <= 1) return 0;
  if (fanin < 2) throw ValidationError("reduction fan-in must be >= 2");
  // Each pass folds `fanin` values into one on the single shared tree.
  return (n - 2) / (fanin - 1) + 1;  // == ceil((n-1)/(fanin-1))
}

LaneVec Fabric::intra_bank_reduce(Stage stage, Category category, std::size_t bank,
                                  std::span<const LaneVec> inputs) {
  if (inputs.empty()) throw ValidationError("intra_bank_reduce: empty input list");
  if (inputs.size() > arch_.mats_per_bank) {
    throw ValidationError("intra_bank_reduce: more inputs than mats per bank");
  }
  const std::size_t lanes = inputs[0].size();
  LaneVec sum(lanes, 0);
  for (const auto& in : inputs) {
    if (in.size() != lanes) throw ValidationError("intra_bank_reduce: lane-width mismatch");
    for (std::size_t i = 0; i < lanes; ++i) sum[i] += in[i];
  }
  const std::size_t rounds = reduction_rounds(inputs.size(), arch_.intra_bank_fanin);
  auto s = scope(stage, category, bank_id(bank) + ".tree");
  for (std::size_t r = 0; r < rounds; ++r) s.emit(Op::IntraBankAdd, fom_.intra_bank_add);
  return sum;
}

std::size_t Fabric::ibc_transfer(Stage stage, Category category, std::size_t bank,
                                 std::size_t payload_bytes) {
  const std::size_t shots = (payload_bytes + arch_.ibc_shot_bytes - 1) / arch_.ibc_shot_bytes;
  auto s = scope(stage, category, bank_id(bank) + ".ibc");
  for (std::size_t i = 0; i < shots; ++i) s.emit(Op::IbcShot, arch_.bus_cost);
  return shots;
}

std::size_t Fabric::rsc_transfer(Stage stage, Category category, const std::string& src,
                                 const std::string& dst, std::size_t payload_bits) {
  const std::size_t words = (payload_bits + arch_.rsc_bus_width - 1) / arch_.rsc_bus_width;
  auto s = scope(stage, category, "rsc:" + src + ">" + dst);
  for (std::size_t i = 0; i < words; ++i) s.emit(Op::RscWord, arch_.bus_cost);
  return words;
}

}  // namespace imars
