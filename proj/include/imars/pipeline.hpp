#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "imars/cma.hpp"
#include "imars/config.hpp"
#include "imars/dnn.hpp"
#include "imars/embedding.hpp"
#include "imars/fabric.hpp"
#include "imars/lsh.hpp"
#include "imars/mapper.hpp"

namespace imars {

struct Query {
  std::vector<double> dense;
  std::map<std::string, std::vector<std::size_t>> sparse;  // table id -> indices
  std::optional<std::size_t> radius;
  std::optional<std::size_t> top_k;
};

struct ScoredItem {
  std::size_t item = 0;
  double ctr = 0.0;
};

struct FilteringOutput {
  std::vector<double> user_embedding;
  std::vector<std::size_t> item_buffer;  // ascending candidate item indices
};

struct QueryResult {
  std::vector<ScoredItem> top_items;
  std::size_t candidate_count = 0;
};

enum class PoolMode : std::uint8_t { Sum, Concat };

// Lazily allocated parallel groups keyed by time slot, so lockstep
// activity across banks lands in shared groups.
class SlotGroups {
 public:
  explicit SlotGroups(CostLedger& ledger) : ledger_(&ledger) {}
  std::uint64_t get(std::size_t slot);

 private:
  CostLedger* ledger_;
  std::vector<std::uint64_t> groups_;
};

// CMA-backed score buffer: one thermometer-coded CTR per row, top-k via
// repeated all-ones threshold searches with increasing radius.
class CtrBuffer {
 public:
  CtrBuffer(std::size_t cma_rows, std::size_t cma_cols, CostLedger* ledger, const CostTable* fom,
            Stage stage = Stage::Ranking);

  static BitVec thermometer(double ctr, std::size_t bits);
  static std::size_t thermometer_level(double ctr, std::size_t bits);

  void push(std::size_t item, double ctr);
  std::size_t size() const { return items_.size(); }

  // k item indices ordered by descending CTR level; ties within the
  // final radius resolve in priority-encoder order (lowest row first).
  std::vector<std::size_t> select_topk(std::size_t k);

  double ctr_of(std::size_t position) const { return ctrs_.at(position); }

 private:
  std::size_t cma_rows_;
  std::size_t cma_cols_;
  CostLedger* ledger_;
  const CostTable* fom_;
  Stage stage_;
  std::vector<CmaState> pages_;
  std::vector<std::size_t> items_;
  std::vector<double> ctrs_;
};

// Functional-plus-cost execution of the two-stage inference on a
// populated fabric.
class Engine {
 public:
  // Table data defaults to seeded synthetic embeddings when absent from
  // `table_data` (keyed by table id; row-major entries x dim reals).
  Engine(ArchConfig arch, CostTable fom, WorkloadConfig work,
         std::map<std::string, std::vector<double>> table_data = {});

  const WorkloadConfig& workload() const { return work_; }
  Fabric& fabric() { return *fabric_; }
  const Fabric& fabric() const { return *fabric_; }
  const Placement& placement() const { return placement_; }
  const LshModel& lsh() const { return lsh_; }
  const EmbeddingTableData& table_data(const std::string& id) const;
  CostLedger& ledger() { return fabric_->ledger(); }

  // Swaps the figure-of-merit table; functional outputs are unaffected.
  void set_fom(const CostTable& fom) { fabric_->set_fom(fom); }

  LaneVec lookup_and_pool(Stage stage, const std::string& table_id,
                          std::span<const std::size_t> indices, PoolMode mode,
                          SlotGroups* schedule = nullptr);

  std::vector<double> dnn_forward(Stage stage, Category category, const DnnModel& model,
                                  std::span<const double> input);

  // sig(u) searched in every activated signature CMA in parallel.
  std::vector<std::size_t> nns_candidates(std::span<const double> user_embedding,
                                          std::size_t theta, Stage stage = Stage::Filtering);

  FilteringOutput filtering_stage(const Query& q);
  QueryResult ranking_stage(std::span<const std::size_t> items, const Query& q);
  QueryResult run_query(const Query& q);

  // One per-input ET-lookup pass over the stage's tables (worst case:
  // all lookups land in each table's first CMA); banks run in parallel.
  // Returns totals of just this pass.
  LedgerTotals et_lookup_pass(Stage stage, std::size_t lookups_per_table);

  Query random_query(std::mt19937_64& rng) const;

  const DnnModel& filtering_dense_dnn() const { return filtering_dense_; }
  const DnnModel& filtering_dnn() const { return filtering_dnn_; }
  const DnnModel& ranking_dense_dnn() const { return ranking_dense_; }
  const DnnModel& ranking_dnn() const { return ranking_dnn_; }

  std::vector<const EtSpec*> stage_tables(Stage stage) const;

 private:
  void populate();
  void populate_table(const EtSpec& spec, const EmbeddingTableData& data);
  std::vector<double> assemble_dnn_input(std::size_t width,
                                         std::span<const std::vector<double>> parts) const;

  ArchConfig arch_;
  WorkloadConfig work_;
  std::unique_ptr<Fabric> fabric_;
  Placement placement_;
  LshModel lsh_;
  std::vector<EmbeddingTableData> tables_;       // parallel to work_.tables
  std::map<std::string, std::size_t> table_idx_;
  DnnModel filtering_dense_;
  DnnModel filtering_dnn_;
  DnnModel ranking_dense_;
  DnnModel ranking_dnn_;
};

}  // namespace imars
