#include "imars/config.hpp"

#include <fstream>
#include <sstream>

#include "imars/errors.hpp"
#include "json.hpp"

namespace imars {

using nlohmann::json;

std::string to_string(EtRole role) {
  switch (role) {
    case EtRole::UietFilter: return "uiet-filter";
    case EtRole::UietRank: return "uiet-rank";
    case EtRole::UietShared: return "uiet-shared";
    case EtRole::Itet: return "itet";
  }
  return "?";
}

EtRole et_role_from_string(const std::string& s) {
  if (s == "uiet-filter") return EtRole::UietFilter;
  if (s == "uiet-rank") return EtRole::UietRank;
  if (s == "uiet-shared") return EtRole::UietShared;
  if (s == "itet") return EtRole::Itet;
  throw ParseError("unknown embedding-table role: " + s);
}

std::optional<EtSpec> WorkloadConfig::itet() const {
  for (const auto& t : tables) {
    if (t.role == EtRole::Itet) return t;
  }
  return std::nullopt;
}

std::size_t WorkloadConfig::required_rows() const {
  std::size_t rows = 0;
  for (const auto& t : tables) {
    rows += t.entries;
    if (t.role == EtRole::Itet) rows += t.entries;  // signature rows
  }
  return rows;
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad value for field '") + key + "': " + e.what());
    }
  }
}

OpCost read_op_cost(const json& j, const char* key, OpCost fallback) {
  OpCost cost = fallback;
  if (auto it = j.find(key); it != j.end()) {
    read_field(*it, "energy_pj", cost.energy_pj);
    read_field(*it, "latency_ns", cost.latency_ns);
  }
  return cost;
}

json op_cost_json(const OpCost& cost) {
  return json{{"energy_pj", cost.energy_pj}, {"latency_ns", cost.latency_ns}};
}

ArchConfig parse_arch(const json& j) {
  ArchConfig arch;
  read_field(j, "banks", arch.banks);
  read_field(j, "mats_per_bank", arch.mats_per_bank);
  read_field(j, "cmas_per_mat", arch.cmas_per_mat);
  read_field(j, "cma_rows", arch.cma_rows);
  read_field(j, "cma_cols", arch.cma_cols);
  read_field(j, "intra_bank_fanin", arch.intra_bank_fanin);
  read_field(j, "rsc_bus_width", arch.rsc_bus_width);
  read_field(j, "ibc_shot_bytes", arch.ibc_shot_bytes);
  arch.bus_cost = read_op_cost(j, "bus_cost", arch.bus_cost);
  return arch;
}

CostTable parse_cost_table(const json& j) {
  CostTable fom;
  fom.cma_write = read_op_cost(j, "cma_write", fom.cma_write);
  fom.cma_read = read_op_cost(j, "cma_read", fom.cma_read);
  fom.cma_add = read_op_cost(j, "cma_add", fom.cma_add);
  fom.cma_search = read_op_cost(j, "cma_search", fom.cma_search);
  fom.intra_mat_add = read_op_cost(j, "intra_mat_add", fom.intra_mat_add);
  fom.intra_bank_add = read_op_cost(j, "intra_bank_add", fom.intra_bank_add);
  fom.crossbar_matmul = read_op_cost(j, "crossbar_matmul", fom.crossbar_matmul);
  read_field(j, "crossbar_rows", fom.crossbar_rows);
  read_field(j, "crossbar_cols", fom.crossbar_cols);
  return fom;
}

StageDnn parse_stage_dnn(const json& j) {
  StageDnn dnn;
  read_field(j, "dense_layers", dnn.dense_layers);
  read_field(j, "dnn_layers", dnn.dnn_layers);
  return dnn;
}

WorkloadConfig parse_workload(const json& j) {
  WorkloadConfig work;
  read_field(j, "name", work.name);
  if (auto it = j.find("tables"); it != j.end()) {
    for (const auto& t : *it) {
      EtSpec spec;
      read_field(t, "id", spec.id);
      std::string role = "uiet-shared";
      read_field(t, "role", role);
      spec.role = et_role_from_string(role);
      read_field(t, "entries", spec.entries);
      read_field(t, "dim", spec.dim);
      read_field(t, "precision", spec.precision);
      work.tables.push_back(std::move(spec));
    }
  }
  if (auto it = j.find("filtering"); it != j.end()) work.filtering = parse_stage_dnn(*it);
  if (auto it = j.find("ranking"); it != j.end()) work.ranking = parse_stage_dnn(*it);
  read_field(j, "lookups_per_table", work.lookups_per_table);
  read_field(j, "radius", work.radius);
  read_field(j, "top_k", work.top_k);
  read_field(j, "lsh_bits", work.lsh_bits);
  read_field(j, "seed", work.seed);
  return work;
}

}  // namespace

ConfigBundle parse_config(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  if (!j.contains("schema_version")) {
    throw ParseError(origin + ": missing mandatory schema_version");
  }
  if (j["schema_version"].get<int>() != kSchemaVersion) {
    throw ParseError(origin + ": unsupported schema_version");
  }

  ConfigBundle bundle;
  if (j.contains("arch")) bundle.arch = parse_arch(j["arch"]);
  if (j.contains("cost_table")) bundle.fom = parse_cost_table(j["cost_table"]);
  if (j.contains("workload")) bundle.workload = parse_workload(j["workload"]);

  validate_arch(bundle.arch);
  validate_cost_table(bundle.fom);
  validate_workload(bundle.workload, bundle.arch);
  return bundle;
}

ConfigBundle load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const ConfigBundle& bundle) {
  const auto& arch = bundle.arch;
  const auto& fom = bundle.fom;
  const auto& work = bundle.workload;

  json tables = json::array();
  for (const auto& t : work.tables) {
    tables.push_back({{"id", t.id},
                      {"role", to_string(t.role)},
                      {"entries", t.entries},
                      {"dim", t.dim},
                      {"precision", t.precision}});
  }

  json j{
      {"schema_version", kSchemaVersion},
      {"arch",
       {{"banks", arch.banks},
        {"mats_per_bank", arch.mats_per_bank},
        {"cmas_per_mat", arch.cmas_per_mat},
        {"cma_rows", arch.cma_rows},
        {"cma_cols", arch.cma_cols},
        {"intra_bank_fanin", arch.intra_bank_fanin},
        {"rsc_bus_width", arch.rsc_bus_width},
        {"ibc_shot_bytes", arch.ibc_shot_bytes},
        {"bus_cost", op_cost_json(arch.bus_cost)}}},
      {"cost_table",
       {{"cma_write", op_cost_json(fom.cma_write)},
        {"cma_read", op_cost_json(fom.cma_read)},
        {"cma_add", op_cost_json(fom.cma_add)},
        {"cma_search", op_cost_json(fom.cma_search)},
        {"intra_mat_add", op_cost_json(fom.intra_mat_add)},
        {"intra_bank_add", op_cost_json(fom.intra_bank_add)},
        {"crossbar_matmul", op_cost_json(fom.crossbar_matmul)},
        {"crossbar_rows", fom.crossbar_rows},
        {"crossbar_cols", fom.crossbar_cols}}},
      {"workload",
       {{"name", work.name},
        {"tables", tables},
        {"filtering", {{"dense_layers", work.filtering.dense_layers}, {"dnn_layers", work.filtering.dnn_layers}}},
        {"ranking", {{"dense_layers", work.ranking.dense_layers}, {"dnn_layers", work.ranking.dnn_layers}}},
        {"lookups_per_table", work.lookups_per_table},
        {"radius", work.radius},
        {"top_k", work.top_k},
        {"lsh_bits", work.lsh_bits},
        {"seed", work.seed}}},
  };
  return j.dump(2) + "\n";
}

void save_config(const ConfigBundle& bundle, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SimError("cannot write config file: " + path);
  out << serialize_config(bundle);
}

void validate_arch(const ArchConfig& arch) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("arch config: ") + what);
  };
  require(arch.banks >= 1, "banks must be >= 1");
  require(arch.mats_per_bank >= 1, "mats_per_bank must be >= 1");
  require(arch.cmas_per_mat >= 1, "cmas_per_mat must be >= 1");
  require(arch.cma_rows >= 1, "cma_rows must be >= 1");
  require(arch.cma_cols >= 1, "cma_cols must be >= 1");
  require(arch.intra_bank_fanin >= 1, "intra_bank_fanin must be >= 1");
  require(arch.rsc_bus_width >= 1, "rsc_bus_width must be >= 1");
  require(arch.ibc_shot_bytes >= 1, "ibc_shot_bytes must be >= 1");
  require(arch.bus_cost.energy_pj >= 0 && arch.bus_cost.latency_ns >= 0,
          "bus_cost must be non-negative");
}

void validate_cost_table(const CostTable& fom) {
  auto require = [](const OpCost& c, const char* what) {
    if (c.energy_pj <= 0 || c.latency_ns <= 0) {
      throw ValidationError(std::string("cost table: ") + what + " must be strictly positive");
    }
  };
  require(fom.cma_write, "cma_write");
  require(fom.cma_read, "cma_read");
  require(fom.cma_add, "cma_add");
  require(fom.cma_search, "cma_search");
  require(fom.intra_mat_add, "intra_mat_add");
  require(fom.intra_bank_add, "intra_bank_add");
  require(fom.crossbar_matmul, "crossbar_matmul");
  if (fom.crossbar_rows < 1 || fom.crossbar_cols < 1) {
    throw ValidationError("cost table: crossbar tile shape must be >= 1x1");
  }
}

void validate_workload(const WorkloadConfig& work, const ArchConfig& arch) {
  std::size_t itets = 0;
  for (const auto& t : work.tables) {
    if (t.id.empty()) throw ValidationError("workload: table with empty id");
    if (t.entries < 1) throw ValidationError("workload: table " + t.id + " has n < 1");
    if (t.dim < 1 || t.dim * 8 > arch.cma_cols) {
      throw ValidationError("workload: table " + t.id + " dim does not fit a CMA row");
    }
    if (t.role == EtRole::Itet) ++itets;
  }
  if (itets > 1) throw ValidationError("workload: more than one ItET");
  for (std::size_t i = 0; i < work.tables.size(); ++i) {
    for (std::size_t k = i + 1; k < work.tables.size(); ++k) {
      if (work.tables[i].id == work.tables[k].id) {
        throw ValidationError("workload: duplicate table id " + work.tables[i].id);
      }
    }
  }
  if (work.lsh_bits < 1 ||
      (work.lsh_bits > arch.cma_cols && work.lsh_bits % arch.cma_cols != 0)) {
    throw ValidationError("workload: lsh_bits must fit within or tile cma_cols");
  }
  if (!work.filtering.dense_layers.empty() && !work.ranking.dense_layers.empty() &&
      work.filtering.dense_layers.front() != work.ranking.dense_layers.front()) {
    throw ValidationError("workload: filtering and ranking dense input widths differ");
  }
}

CapacityReport validate(const ArchConfig& arch, const WorkloadConfig& work) {
  CapacityReport report;
  report.capacity_rows = arch.capacity_rows();
  report.required_rows = work.required_rows();
  const std::size_t bank_rows = arch.mats_per_bank * arch.cmas_per_mat * arch.cma_rows;
  for (const auto& t : work.tables) {
    std::size_t rows = t.entries;
    if (t.role == EtRole::Itet) rows *= 2;
    if (rows > bank_rows) report.offending_tables.push_back(t.id);
  }
  report.fits = report.required_rows <= report.capacity_rows && report.offending_tables.empty();
  if (!report.fits) {
    std::string msg = "capacity exceeded: required " + std::to_string(report.required_rows) +
                      " rows vs " + std::to_string(report.capacity_rows);
    for (const auto& id : report.offending_tables) msg += "; table " + id + " exceeds one bank";
    throw ValidationError(msg);
  }
  return report;
}

}  // namespace imars
