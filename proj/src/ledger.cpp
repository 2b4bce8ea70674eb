#include "imars/ledger.hpp"

#include <ostream>
#include <unordered_map>

namespace imars {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Load: return "load";
    case Stage::Filtering: return "filtering";
    case Stage::Ranking: return "ranking";
  }
  return "?";
}

std::string to_string(Category c) {
  switch (c) {
    case Category::EtLookup: return "et_lookup";
    case Category::Dnn: return "dnn";
    case Category::Nns: return "nns";
    case Category::TopK: return "topk";
    case Category::Other: return "other";
  }
  return "?";
}

std::string to_string(Op op) {
  switch (op) {
    case Op::CmaWrite: return "cma_write";
    case Op::CmaRead: return "cma_read";
    case Op::CmaAdd: return "cma_add";
    case Op::CmaSearch: return "cma_search";
    case Op::IntraMatAdd: return "intra_mat_add";
    case Op::IntraBankAdd: return "intra_bank_add";
    case Op::CrossbarMatMul: return "crossbar_matmul";
    case Op::RscWord: return "rsc_word";
    case Op::IbcShot: return "ibc_shot";
  }
  return "?";
}

LedgerTotals CostLedger::totals_range(std::size_t begin, std::size_t end,
                                      std::optional<Stage> stage,
                                      std::optional<Category> category) const {
  LedgerTotals totals;
  struct GroupMax {
    double latency = 0.0;
    const std::string* component = nullptr;
  };
  std::unordered_map<std::uint64_t, GroupMax> groups;
  for (std::size_t i = begin; i < end && i < events_.size(); ++i) {
    const CostEvent& e = events_[i];
    if (stage && e.stage != *stage) continue;
    if (category && e.category != *category) continue;
    totals.energy_pj += e.energy_pj;
    totals.by_component[e.component].energy_pj += e.energy_pj;
    auto& g = groups[e.group];
    if (g.component == nullptr || e.latency_ns > g.latency) {
      g.latency = e.latency_ns;
      g.component = &e.component;
    }
  }
  for (const auto& [id, g] : groups) {
    totals.latency_ns += g.latency;
    totals.by_component[*g.component].latency_ns += g.latency;
  }
  return totals;
}

void CostLedger::write_trace(std::ostream& os) const {
  os << "stage\tcategory\tcomponent\top\tlatency_ns\tenergy_pj\tgroup\n";
  for (const auto& e : events_) {
    os << to_string(e.stage) << '\t' << to_string(e.category) << '\t' << e.component << '\t'
       << to_string(e.op) << '\t' << e.latency_ns << '\t' << e.energy_pj << '\t' << e.group
       << '\n';
  }
}

void CostLedger::merge(const CostLedger& other) {
  // Remap group ids so parallel structure is preserved without collisions.
  const std::uint64_t offset = next_group_;
  for (CostEvent e : other.events_) {
    e.group += offset;
    events_.push_back(std::move(e));
  }
  next_group_ = offset + other.next_group_;
}

}  // namespace imars
