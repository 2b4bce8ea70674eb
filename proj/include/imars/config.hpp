#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace imars {

inline constexpr int kSchemaVersion = 1;

// One figure-of-merit entry: per-operation energy and latency.
struct OpCost {
  double energy_pj = 0.0;
  double latency_ns = 0.0;
  bool operator==(const OpCost&) const = default;
};

// Fabric dimensions and bus parameters.
struct ArchConfig {
  std::size_t banks = 32;             // B
  std::size_t mats_per_bank = 4;      // M
  std::size_t cmas_per_mat = 32;      // C
  std::size_t cma_rows = 256;         // R
  std::size_t cma_cols = 256;         // bits per row
  std::size_t intra_bank_fanin = 4;
  std::size_t rsc_bus_width = 256;    // bits per word
  std::size_t ibc_shot_bytes = 128;
  OpCost bus_cost{10.0, 1.0};         // per RSC word / IBC shot

  std::size_t capacity_rows() const {
    return banks * mats_per_bank * cmas_per_mat * cma_rows;
  }
  bool operator==(const ArchConfig&) const = default;
};

// Array-level figures of merit driving the cost model.
struct CostTable {
  OpCost cma_write{49.1, 10.0};
  OpCost cma_read{3.2, 0.3};
  OpCost cma_add{108.0, 8.1};
  OpCost cma_search{13.8, 0.2};
  OpCost intra_mat_add{137.0, 14.7};
  OpCost intra_bank_add{956.0, 44.2};
  OpCost crossbar_matmul{13.8, 225.0};
  std::size_t crossbar_rows = 256;
  std::size_t crossbar_cols = 128;
  bool operator==(const CostTable&) const = default;
};

enum class EtRole { UietFilter, UietRank, UietShared, Itet };

std::string to_string(EtRole role);
EtRole et_role_from_string(const std::string& s);

struct EtSpec {
  std::string id;
  EtRole role = EtRole::UietShared;
  std::size_t entries = 0;  // n
  std::size_t dim = 32;
  std::string precision = "int8";
  bool operator==(const EtSpec&) const = default;
};

// Per-stage DNN description: dense-feature stack plus the stage DNN,
// each given as layer widths (first entry = input width).
struct StageDnn {
  std::vector<std::size_t> dense_layers;
  std::vector<std::size_t> dnn_layers;
  bool operator==(const StageDnn&) const = default;
};

struct WorkloadConfig {
  std::string name = "workload";
  std::vector<EtSpec> tables;
  StageDnn filtering;
  StageDnn ranking;
  std::size_t lookups_per_table = 10;  // P
  std::size_t radius = 60;             // theta, Hamming bits
  std::size_t top_k = 10;
  std::size_t lsh_bits = 256;          // L
  std::uint64_t seed = 1;

  std::optional<EtSpec> itet() const;
  std::size_t required_rows() const;  // embedding + signature rows
  bool operator==(const WorkloadConfig&) const = default;
};

struct ConfigBundle {
  ArchConfig arch;
  CostTable fom;
  WorkloadConfig workload;
};

struct CapacityReport {
  std::size_t capacity_rows = 0;
  std::size_t required_rows = 0;
  bool fits = false;
  std::vector<std::string> offending_tables;  // tables exceeding one bank
};

// Loads a config file (JSON, schema_version mandatory). Sections
// "arch", "cost_table" and "workload" are each optional; missing
// sections take the built-in defaults above.
ConfigBundle load_config(const std::string& path);
ConfigBundle parse_config(const std::string& json_text, const std::string& origin);

std::string serialize_config(const ConfigBundle& bundle);
void save_config(const ConfigBundle& bundle, const std::string& path);

void validate_arch(const ArchConfig& arch);
void validate_cost_table(const CostTable& fom);
void validate_workload(const WorkloadConfig& work, const ArchConfig& arch);

// Capacity check: total required rows vs B*M*C*R, plus per-table
// single-bank fit. Throws ValidationError when capacity is exceeded.
CapacityReport validate(const ArchConfig& arch, const WorkloadConfig& work);

}  // namespace imars
