#pragma once

#include <span>
#include <string>
#include <vector>

#include "imars/cma.hpp"
#include "imars/config.hpp"
#include "imars/ledger.hpp"

namespace imars {

// Bank -> mat -> CMA hierarchy with the intra-mat / intra-bank adder
// trees and the RSC / IBC communication channels. Owns the cost ledger.
class Fabric {
 public:
  Fabric(ArchConfig arch, CostTable fom);

  const ArchConfig& arch() const { return arch_; }
  const CostTable& fom() const { return fom_; }
  void set_fom(CostTable fom) { fom_ = std::move(fom); }

  CmaState& cma(std::size_t bank, std::size_t mat, std::size_t cma);
  const CmaState& cma(std::size_t bank, std::size_t mat, std::size_t cma) const;

  CostLedger& ledger() { return ledger_; }
  const CostLedger& ledger() const { return ledger_; }

  // Element-wise sum of up to C lane vectors; one intra-mat event.
  LaneVec intra_mat_reduce(Stage stage, Category category, std::size_t bank, std::size_t mat,
                           std::span<const LaneVec> inputs, std::uint64_t group = 0);

  // 4-ary multi-round reduction on the single per-bank tree; rounds are
  // serialized, one intra-bank event each. A single input passes through
  // with zero rounds.
  LaneVec intra_bank_reduce(Stage stage, Category category, std::size_t bank,
                            std::span<const LaneVec> inputs);

  // ceil(bytes / shot) serialized IBC shots at the configured bus cost.
  std::size_t ibc_transfer(Stage stage, Category category, std::size_t bank,
                           std::size_t payload_bytes);

  // ceil(bits / word) serialized RSC word transfers.
  std::size_t rsc_transfer(Stage stage, Category category, const std::string& src,
                           const std::string& dst, std::size_t payload_bits);

  // Passes of a fan-in-ary reduction of n values on one shared tree.
  static std::size_t reduction_rounds(std::size_t n, std::size_t fanin);

  static std::string component_id(std::size_t bank, std::size_t mat, std::size_t cma);
  static std::string mat_id(std::size_t bank, std::size_t mat);
  static std::string bank_id(std::size_t bank);

  CostScope scope(Stage stage, Category category, std::string component,
                  std::uint64_t group = 0) {
    return CostScope{&ledger_, &fom_, stage, category, std::move(component), group};
  }

 private:
  ArchConfig arch_;
  CostTable fom_;
  std::vector<CmaState> cmas_;  // [bank][mat][cma] flattened
  CostLedger ledger_;
};

}  // namespace imars
