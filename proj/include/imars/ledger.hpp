#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imars/config.hpp"

namespace imars {

enum class Stage : std::uint8_t { Load, Filtering, Ranking };
enum class Category : std::uint8_t { EtLookup, Dnn, Nns, TopK, Other };
enum class Op : std::uint8_t {
  CmaWrite,
  CmaRead,
  CmaAdd,
  CmaSearch,
  IntraMatAdd,
  IntraBankAdd,
  CrossbarMatMul,
  RscWord,
  IbcShot,
};

std::string to_string(Stage s);
std::string to_string(Category c);
std::string to_string(Op op);

struct CostEvent {
  Stage stage = Stage::Load;
  Category category = Category::Other;
  std::string component;
  Op op = Op::CmaRead;
  double latency_ns = 0.0;
  double energy_pj = 0.0;
  std::uint64_t group = 0;  // events sharing a group run in parallel
};

struct LedgerTotals {
  double latency_ns = 0.0;
  double energy_pj = 0.0;
  // Per-component share; energy is the plain sum, latency attributes each
  // group's critical path to the component holding the longest event.
  std::map<std::string, OpCost> by_component;
};

// Append-only event log. Latency composes as the sum over groups of the
// maximum latency within each group; energy is always the plain sum.
class CostLedger {
 public:
  std::uint64_t new_group() { return next_group_++; }

  void append(CostEvent event) { events_.push_back(std::move(event)); }

  void append(Stage stage, Category category, std::string component, Op op, OpCost cost,
              std::uint64_t group) {
    events_.push_back({stage, category, std::move(component), op, cost.latency_ns, cost.energy_pj, group});
  }

  const std::vector<CostEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  LedgerTotals totals(std::optional<Stage> stage = std::nullopt,
                      std::optional<Category> category = std::nullopt) const {
    return totals_range(0, events_.size(), stage, category);
  }

  // Totals over events [begin, end), for measuring a ledger section.
  LedgerTotals totals_range(std::size_t begin, std::size_t end,
                            std::optional<Stage> stage = std::nullopt,
                            std::optional<Category> category = std::nullopt) const;

  // Delimited-text trace: one record per event.
  void write_trace(std::ostream& os) const;

  void merge(const CostLedger& other);

 private:
  std::vector<CostEvent> events_;
  std::uint64_t next_group_ = 1;
};

// Context handed to CMA operations so each one lands in the ledger with
// the right tags. A null ledger suppresses cost emission (functional-only
// probes in tests).
struct CostScope {
  CostLedger* ledger = nullptr;
  const CostTable* fom = nullptr;
  Stage stage = Stage::Load;
  Category category = Category::Other;
  std::string component;
  std::uint64_t group = 0;

  // group == 0 means "serialize": each emitted event gets a fresh group.
  void emit(Op op, OpCost cost) const {
    if (ledger != nullptr) {
      const std::uint64_t g = group != 0 ? group : ledger->new_group();
      ledger->append(stage, category, component, op, cost, g);
    }
  }
};

}  // namespace imars
