#include "imars/mapper.hpp"

#include <bit>
#include <ostream>
#include <set>
#include <tuple>
#include <utility>

#include "imars/errors.hpp"

namespace imars {

std::size_t cmas_for_entries(std::size_t entries, std::size_t cma_rows) {
  return (entries + cma_rows - 1) / cma_rows;
}

std::size_t provisioned_pow2(std::size_t cmas) {
  return cmas == 0 ? 0 : std::bit_ceil(cmas);
}

Placement Placement::place_tables(const ArchConfig& arch, const WorkloadConfig& work) {
  validate(arch, work);
  if (work.tables.size() > arch.banks) {
    throw ValidationError("more tables (" + std::to_string(work.tables.size()) + ") than banks (" +
                          std::to_string(arch.banks) + ")");
  }

  Placement placement;
  placement.arch_ = arch;

  const std::size_t R = arch.cma_rows;
  const std::size_t C = arch.cmas_per_mat;
  const std::size_t M = arch.mats_per_bank;

  for (std::size_t i = 0; i < work.tables.size(); ++i) {
    const EtSpec& spec = work.tables[i];
    const bool itet = spec.role == EtRole::Itet;

    TablePlacement tp;
    tp.id = spec.id;
    tp.role = spec.role;
    tp.bank = i;  // declaration order, one bank each
    tp.entries = spec.entries;

    const std::size_t chunks = cmas_for_entries(spec.entries, R);
    const std::size_t slots_per_chunk = itet ? 2 : 1;  // embedding (+ paired signature)
    tp.cmas_needed = chunks * slots_per_chunk;
    tp.provisioned_cmas = provisioned_pow2(tp.cmas_needed);
    if (tp.cmas_needed > M * C) {
      throw ValidationError("table " + spec.id + " needs " + std::to_string(tp.cmas_needed) +
                            " CMAs, exceeding one bank (" + std::to_string(M * C) + ")");
    }

    if (itet && C < 2) {
      throw ValidationError("table " + spec.id + ": ItET needs >= 2 CMAs per mat for the signature pair");
    }

    std::set<std::size_t> mats;
    std::size_t remaining = spec.entries;
    std::size_t slot = 0;  // CMA slots fill a mat before spilling to the next
    for (std::size_t chunk = 0; chunk < chunks; ++chunk) {
      if (itet && slot % C == C - 1) ++slot;  // keep the pair inside one mat
      Segment seg;
      seg.mat = slot / C;
      seg.cma = slot % C;
      seg.row_count = std::min(remaining, R);
      if (itet) {
        seg.sig_cma = seg.cma + 1;  // signature CMA adjacent to its embedding CMA
        slot += 2;
      } else {
        ++slot;
      }
      remaining -= seg.row_count;
      if (seg.mat >= M) {
        throw ValidationError("table " + spec.id + " spills past the last mat of its bank");
      }
      mats.insert(seg.mat);
      tp.segments.push_back(seg);
    }
    tp.mats.assign(mats.begin(), mats.end());
    placement.tables_.push_back(std::move(tp));
  }
  return placement;
}

const TablePlacement& Placement::table(const std::string& id) const {
  for (const auto& t : tables_) {
    if (t.id == id) return t;
  }
  throw ValidationError("unknown table: " + id);
}

bool Placement::has_table(const std::string& id) const {
  for (const auto& t : tables_) {
    if (t.id == id) return true;
  }
  return false;
}

Location Placement::locate(const std::string& id, std::size_t entry) const {
  const TablePlacement& tp = table(id);
  if (entry >= tp.entries) {
    throw ValidationError("entry " + std::to_string(entry) + " out of range for table " + id +
                          " (n=" + std::to_string(tp.entries) + ")");
  }
  const std::size_t R = arch_.cma_rows;
  const Segment& seg = tp.segments[entry / R];
  return Location{tp.bank, seg.mat, seg.cma, entry % R, seg.sig_cma};
}

ActivationSummary Placement::activation_report() const {
  std::set<std::size_t> banks;
  std::set<std::pair<std::size_t, std::size_t>> mats;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> cmas;
  for (const auto& t : tables_) {
    banks.insert(t.bank);
    for (const auto& seg : t.segments) {
      mats.insert({t.bank, seg.mat});
      cmas.insert({t.bank, seg.mat, seg.cma});
      if (seg.sig_cma) cmas.insert({t.bank, seg.mat, *seg.sig_cma});
    }
  }
  return ActivationSummary{banks.size(), mats.size(), cmas.size()};
}

void Placement::dump(std::ostream& os) const {
  os << "table\tbank\tmat\tcma\trow_start\trow_end\trole\n";
  for (const auto& t : tables_) {
    for (const auto& seg : t.segments) {
      os << t.id << '\t' << t.bank << '\t' << seg.mat << '\t' << seg.cma << '\t' << 0 << '\t'
         << seg.row_count - 1 << '\t' << to_string(t.role) << '\n';
      if (seg.sig_cma) {
        os << t.id << '\t' << t.bank << '\t' << seg.mat << '\t' << *seg.sig_cma << '\t' << 0
           << '\t' << seg.row_count - 1 << "\tsignature\n";
      }
    }
  }
}

}  // namespace imars
