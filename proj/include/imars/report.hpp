#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imars/ledger.hpp"
#include "imars/mapper.hpp"
#include "imars/pipeline.hpp"

namespace imars {

struct CategoryCost {
  double latency_ns = 0.0;
  double energy_pj = 0.0;
};

struct StageReport {
  CategoryCost total;
  std::map<std::string, CategoryCost> by_category;  // ET lookup / DNN / NNS / top-k
};

struct Report {
  std::string workload;
  std::size_t queries = 0;
  ActivationSummary activation;
  std::map<std::string, StageReport> stages;  // "filtering", "ranking" ("load" kept separate)
  StageReport load;
  CategoryCost end_to_end;                    // filtering + ranking over the whole batch
  std::vector<QueryResult> results;
};

Report build_report(const std::string& workload_name, const CostLedger& ledger,
                    const ActivationSummary& activation, std::vector<QueryResult> results,
                    std::size_t ledger_begin = 0);

std::string report_to_text(const Report& report);
std::string report_to_json(const Report& report);

// ---- Calibration against reference ET-lookup figures -------------------

struct EtLookupTarget {
  double latency_us = 0.0;
  double energy_uj = 0.0;
};

struct CalibrationTargets {
  EtLookupTarget target;                       // iMARS reference (fit target)
  std::optional<EtLookupTarget> reference_gpu; // inert, for speedup reporting
  double latency_band = 0.25;                  // relative tolerance
  double energy_band = 0.50;
};

CalibrationTargets load_targets(const std::string& path);

struct CalibrationPoint {
  std::size_t lookups_per_table = 0;  // P
  OpCost bus_cost;
  double latency_us = 0.0;
  double energy_uj = 0.0;
  double latency_rel_err = 0.0;
  double energy_rel_err = 0.0;
  bool within_band = false;
};

struct CalibrationGrid {
  std::vector<std::size_t> lookups;           // P grid
  std::vector<OpCost> bus_costs;
};

CalibrationGrid default_calibration_grid();

struct CalibrationResult {
  CalibrationPoint best;                      // minimal summed relative error
  std::vector<CalibrationPoint> sweep;
  bool calibrated = false;                    // best point within both bands
  // Cross-check workload evaluated at the best setting, when provided.
  std::optional<CategoryCost> cross_filtering;
  std::optional<CategoryCost> cross_ranking;
};

// Sweeps (P, bus-cost) on the given workload's ranking-stage tables and
// reports the best fit; never alters functional behavior.
CalibrationResult calibrate(const ArchConfig& arch, const CostTable& fom,
                            const WorkloadConfig& work, const CalibrationTargets& targets,
                            const CalibrationGrid& grid,
                            const std::optional<WorkloadConfig>& cross_check = std::nullopt);

std::string calibration_to_text(const CalibrationResult& result, const CalibrationTargets& targets);

// ---- Recall evaluation -------------------------------------------------

struct RecallPoint {
  std::size_t theta = 0;
  double mean_candidates = 0.0;
  double mean_recall = 0.0;
};

std::vector<RecallPoint> evaluate_recall(const WorkloadConfig& work, const ArchConfig& arch,
                                         const CostTable& fom, std::span<const std::size_t> thetas,
                                         std::size_t num_queries, std::size_t topn);

}  // namespace imars
