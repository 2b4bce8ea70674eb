#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "imars/config.hpp"

namespace imars {

// One contiguous chunk of table entries stored in a single CMA.
struct Segment {
  std::size_t mat = 0;
  std::size_t cma = 0;
  std::size_t row_count = 0;                 // rows 0..row_count-1 occupied
  std::optional<std::size_t> sig_cma;        // paired signature CMA (ItET)
};

struct TablePlacement {
  std::string id;
  EtRole role = EtRole::UietShared;
  std::size_t bank = 0;
  std::size_t entries = 0;
  std::vector<Segment> segments;             // segment i holds entries [i*R, ...)
  std::size_t cmas_needed = 0;               // ceil(n/R), doubled for ItET
  std::size_t provisioned_cmas = 0;          // next power of two
  std::vector<std::size_t> mats;             // distinct mats, ascending
};

struct Location {
  std::size_t bank = 0;
  std::size_t mat = 0;
  std::size_t cma = 0;
  std::size_t row = 0;
  std::optional<std::size_t> sig_cma;
};

struct ActivationSummary {
  std::size_t active_banks = 0;
  std::size_t active_mats = 0;
  std::size_t active_cmas = 0;
};

std::size_t cmas_for_entries(std::size_t entries, std::size_t cma_rows);
std::size_t provisioned_pow2(std::size_t cmas);

// Assignment of embedding tables onto the fabric. Tables take banks in
// declaration order, one bank each; CMAs of a mat fill before spilling
// to the next mat; ItET entries occupy an embedding/signature CMA pair.
class Placement {
 public:
  static Placement place_tables(const ArchConfig& arch, const WorkloadConfig& work);

  const std::vector<TablePlacement>& tables() const { return tables_; }
  const TablePlacement& table(const std::string& id) const;
  bool has_table(const std::string& id) const;

  Location locate(const std::string& id, std::size_t entry) const;

  ActivationSummary activation_report() const;

  // Delimited text: table id, bank, mat, cma, row-start, row-end, role.
  void dump(std::ostream& os) const;

  const ArchConfig& arch() const { return arch_; }

 private:
  ArchConfig arch_;
  std::vector<TablePlacement> tables_;
};

}  // namespace imars
