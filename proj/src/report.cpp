#include "imars/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "imars/errors.hpp"
#include "imars/oracle.hpp"
#include "json.hpp"

namespace imars {

using nlohmann::json;

namespace {

constexpr Category kCategories[] = {Category::EtLookup, Category::Dnn, Category::Nns,
                                    Category::TopK, Category::Other};

StageReport stage_report(const CostLedger& ledger, std::size_t begin, Stage stage) {
  StageReport report;
  LedgerTotals totals = ledger.totals_range(begin, ledger.size(), stage);
  report.total = {totals.latency_ns, totals.energy_pj};
  for (Category c : kCategories) {
    LedgerTotals ct = ledger.totals_range(begin, ledger.size(), stage, c);
    if (ct.energy_pj > 0.0 || ct.latency_ns > 0.0) {
      report.by_category[to_string(c)] = {ct.latency_ns, ct.energy_pj};
    }
  }
  return report;
}

std::string format_cost(const CategoryCost& c) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(1) << c.latency_ns << " ns / " << std::setprecision(1)
     << c.energy_pj << " pJ";
  return ss.str();
}

}  // namespace

Report build_report(const std::string& workload_name, const CostLedger& ledger,
                    const ActivationSummary& activation, std::vector<QueryResult> results,
                    std::size_t ledger_begin) {
  Report report;
  report.workload = workload_name;
  report.queries = results.size();
  report.activation = activation;
  report.load = stage_report(ledger, 0, Stage::Load);
  report.stages["filtering"] = stage_report(ledger, ledger_begin, Stage::Filtering);
  report.stages["ranking"] = stage_report(ledger, ledger_begin, Stage::Ranking);
  for (const auto& [name, sr] : report.stages) {
    report.end_to_end.latency_ns += sr.total.latency_ns;
    report.end_to_end.energy_pj += sr.total.energy_pj;
  }
  report.results = std::move(results);
  return report;
}

std::string report_to_text(const Report& report) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(1);
  ss << "workload: " << report.workload << "\n";
  ss << "queries: " << report.queries << "\n";
  ss << "activation: " << report.activation.active_banks << " banks, "
     << report.activation.active_mats << " mats, " << report.activation.active_cmas << " CMAs\n";
  ss << "table load: " << format_cost(report.load.total) << "\n";
  for (const auto& [name, sr] : report.stages) {
    ss << "stage " << name << ": " << format_cost(sr.total) << "\n";
    const double stage_lat = sr.total.latency_ns;
    const double stage_en = sr.total.energy_pj;
    for (const auto& [cat, cost] : sr.by_category) {
      ss << "  " << cat << ": " << format_cost(cost);
      if (stage_lat > 0.0 && stage_en > 0.0) {
        ss << "  (" << std::setprecision(1) << 100.0 * cost.latency_ns / stage_lat << "% lat, "
           << 100.0 * cost.energy_pj / stage_en << "% en)" << std::setprecision(1);
      }
      ss << "\n";
    }
  }
  ss << "end-to-end: " << format_cost(report.end_to_end) << "\n";
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    const auto& r = report.results[i];
    ss << "query " << i << ": " << r.candidate_count << " candidates, top-k:";
    for (const auto& item : r.top_items) {
      ss << " " << item.item << " (" << std::setprecision(4) << item.ctr << ")"
         << std::setprecision(1);
    }
    ss << "\n";
  }
  return ss.str();
}

namespace {

json cost_json(const CategoryCost& c) {
  return json{{"latency_ns", c.latency_ns}, {"energy_pj", c.energy_pj}};
}

json stage_json(const StageReport& sr) {
  json by_cat = json::object();
  for (const auto& [cat, cost] : sr.by_category) by_cat[cat] = cost_json(cost);
  return json{{"total", cost_json(sr.total)}, {"by_category", by_cat}};
}

}  // namespace

std::string report_to_json(const Report& report) {
  json stages = json::object();
  for (const auto& [name, sr] : report.stages) stages[name] = stage_json(sr);
  json results = json::array();
  for (const auto& r : report.results) {
    json items = json::array();
    for (const auto& item : r.top_items) items.push_back({{"item", item.item}, {"ctr", item.ctr}});
    results.push_back({{"candidates", r.candidate_count}, {"top_items", items}});
  }
  json j{{"schema_version", kSchemaVersion},
         {"workload", report.workload},
         {"queries", report.queries},
         {"activation",
          {{"active_banks", report.activation.active_banks},
           {"active_mats", report.activation.active_mats},
           {"active_cmas", report.activation.active_cmas}}},
         {"load", stage_json(report.load)},
         {"stages", stages},
         {"end_to_end", cost_json(report.end_to_end)},
         {"results", results}};
  return j.dump(2) + "\n";
}

// ---- Calibration -------------------------------------------------------

CalibrationTargets load_targets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open targets file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.contains("schema_version")) throw ParseError(path + ": missing schema_version");
  if (!j.contains("target")) throw ParseError(path + ": missing target section");

  CalibrationTargets t;
  t.target.latency_us = j["target"].value("latency_us", 0.0);
  t.target.energy_uj = j["target"].value("energy_uj", 0.0);
  if (t.target.latency_us <= 0.0 || t.target.energy_uj <= 0.0) {
    throw ValidationError(path + ": target latency/energy must be positive");
  }
  if (j.contains("reference_gpu")) {
    EtLookupTarget gpu;
    gpu.latency_us = j["reference_gpu"].value("latency_us", 0.0);
    gpu.energy_uj = j["reference_gpu"].value("energy_uj", 0.0);
    t.reference_gpu = gpu;
  }
  t.latency_band = j.value("latency_band", 0.25);
  t.energy_band = j.value("energy_band", 0.50);
  return t;
}

CalibrationGrid default_calibration_grid() {
  CalibrationGrid grid;
  grid.lookups.push_back(1);
  for (std::size_t p = 2; p <= 64; p += 2) grid.lookups.push_back(p);
  for (double lat : {0.5, 1.0, 2.0, 4.0}) {
    for (double en : {5.0, 10.0, 20.0, 50.0}) grid.bus_costs.push_back({en, lat});
  }
  return grid;
}

namespace {

struct PassMeasurement {
  double latency_ns = 0.0;
  double energy_pj = 0.0;
  std::size_t bus_events = 0;      // scale energy with the bus cost
  std::size_t bus_groups = 0;      // scale latency (serialized slots)
};

PassMeasurement measure_pass(Engine& engine, Stage stage, std::size_t p) {
  const std::size_t mark = engine.ledger().size();
  LedgerTotals totals = engine.et_lookup_pass(stage, p);
  PassMeasurement m;
  m.latency_ns = totals.latency_ns;
  m.energy_pj = totals.energy_pj;
  std::set<std::uint64_t> groups;
  const auto& events = engine.ledger().events();
  for (std::size_t i = mark; i < events.size(); ++i) {
    if (events[i].op == Op::RscWord || events[i].op == Op::IbcShot) {
      ++m.bus_events;
      groups.insert(events[i].group);
    }
  }
  m.bus_groups = groups.size();
  return m;
}

CategoryCost rebased(const PassMeasurement& m, const OpCost& base, const OpCost& bus) {
  CategoryCost c;
  c.latency_ns = m.latency_ns + static_cast<double>(m.bus_groups) * (bus.latency_ns - base.latency_ns);
  c.energy_pj = m.energy_pj + static_cast<double>(m.bus_events) * (bus.energy_pj - base.energy_pj);
  return c;
}

}  // namespace

CalibrationResult calibrate(const ArchConfig& arch, const CostTable& fom,
                            const WorkloadConfig& work, const CalibrationTargets& targets,
                            const CalibrationGrid& grid,
                            const std::optional<WorkloadConfig>& cross_check) {
  if (grid.lookups.empty() || grid.bus_costs.empty()) {
    throw ValidationError("calibration grid is empty");
  }

  Engine engine(arch, fom, work);
  const OpCost base_bus = arch.bus_cost;
  const double target_lat_ns = targets.target.latency_us * 1e3;
  const double target_en_pj = targets.target.energy_uj * 1e6;

  CalibrationResult result;
  double best_err = 0.0;
  for (std::size_t p : grid.lookups) {
    const PassMeasurement m = measure_pass(engine, Stage::Ranking, p);
    for (const OpCost& bus : grid.bus_costs) {
      const CategoryCost c = rebased(m, base_bus, bus);
      CalibrationPoint point;
      point.lookups_per_table = p;
      point.bus_cost = bus;
      point.latency_us = c.latency_ns * 1e-3;
      point.energy_uj = c.energy_pj * 1e-6;
      point.latency_rel_err = (c.latency_ns - target_lat_ns) / target_lat_ns;
      point.energy_rel_err = (c.energy_pj - target_en_pj) / target_en_pj;
      point.within_band = std::fabs(point.latency_rel_err) <= targets.latency_band &&
                          std::fabs(point.energy_rel_err) <= targets.energy_band;
      const double err = std::fabs(point.latency_rel_err) + std::fabs(point.energy_rel_err);
      if (result.sweep.empty() || err < best_err) {
        best_err = err;
        result.best = point;
      }
      result.sweep.push_back(point);
    }
  }
  result.calibrated = result.best.within_band;

  if (cross_check) {
    ArchConfig cross_arch = arch;
    cross_arch.bus_cost = result.best.bus_cost;
    Engine cross(cross_arch, fom, *cross_check);
    LedgerTotals f = cross.et_lookup_pass(Stage::Filtering, result.best.lookups_per_table);
    LedgerTotals r = cross.et_lookup_pass(Stage::Ranking, result.best.lookups_per_table);
    result.cross_filtering = CategoryCost{f.latency_ns, f.energy_pj};
    result.cross_ranking = CategoryCost{r.latency_ns, r.energy_pj};
  }
  return result;
}

std::string calibration_to_text(const CalibrationResult& result,
                                const CalibrationTargets& targets) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4);
  ss << "target: " << targets.target.latency_us << " us / " << targets.target.energy_uj << " uJ"
     << " (bands +-" << std::setprecision(0) << targets.latency_band * 100 << "% lat, +-"
     << targets.energy_band * 100 << "% en)\n"
     << std::setprecision(4);
  const auto& b = result.best;
  ss << "best fit: P=" << b.lookups_per_table << ", bus=(" << std::setprecision(1)
     << b.bus_cost.latency_ns << " ns, " << b.bus_cost.energy_pj << " pJ)/word\n"
     << std::setprecision(4);
  ss << "  model: " << b.latency_us << " us / " << b.energy_uj << " uJ\n";
  ss << "  residuals: " << std::setprecision(1) << b.latency_rel_err * 100 << "% lat, "
     << b.energy_rel_err * 100 << "% en\n"
     << std::setprecision(4);
  ss << (result.calibrated ? "calibration: within band\n"
                           : "calibration: NO grid point met the band; best residual reported\n");
  if (targets.reference_gpu) {
    ss << "reference GPU: " << targets.reference_gpu->latency_us << " us / "
       << targets.reference_gpu->energy_uj << " uJ -> model speedup " << std::setprecision(1)
       << targets.reference_gpu->latency_us / b.latency_us << "x latency, "
       << targets.reference_gpu->energy_uj / b.energy_uj << "x energy\n"
       << std::setprecision(4);
  }
  if (result.cross_filtering && result.cross_ranking) {
    ss << "cross-check filtering: " << result.cross_filtering->latency_ns * 1e-3 << " us / "
       << result.cross_filtering->energy_pj * 1e-6 << " uJ\n";
    ss << "cross-check ranking:   " << result.cross_ranking->latency_ns * 1e-3 << " us / "
       << result.cross_ranking->energy_pj * 1e-6 << " uJ\n";
  }
  return ss.str();
}

// ---- Recall evaluation -------------------------------------------------

std::vector<RecallPoint> evaluate_recall(const WorkloadConfig& work, const ArchConfig& arch,
                                         const CostTable& fom, std::span<const std::size_t> thetas,
                                         std::size_t num_queries, std::size_t topn) {
  if (!work.itet()) throw ValidationError("evaluate_recall: workload has no ItET");
  Engine engine(arch, fom, work);
  const EtSpec itet = *work.itet();
  const EmbeddingTableData& data = engine.table_data(itet.id);

  // Ground truth: cosine top-N over the dequantized item vectors.
  std::vector<double> items(itet.entries * itet.dim);
  for (std::size_t i = 0; i < itet.entries; ++i) {
    auto row = data.dequant_row(i);
    std::copy(row.begin(), row.end(), items.begin() + i * itet.dim);
  }

  std::mt19937_64 rng(work.seed ^ 0x5eedULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> queries(num_queries);
  for (auto& q : queries) {
    q.resize(itet.dim);
    double norm = 0.0;
    for (auto& x : q) {
      x = gauss(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : q) x /= norm;
  }

  std::vector<RecallPoint> points;
  for (std::size_t theta : thetas) {
    RecallPoint point;
    point.theta = theta;
    for (const auto& q : queries) {
      auto candidates = engine.nns_candidates(q, theta);
      auto exact = oracle::exact_cosine_topn(items, itet.entries, itet.dim, q, topn);
      point.mean_candidates += static_cast<double>(candidates.size());
      point.mean_recall += oracle::recall(candidates, exact, topn);
    }
    point.mean_candidates /= static_cast<double>(num_queries);
    point.mean_recall /= static_cast<double>(num_queries);
    points.push_back(point);
  }
  return points;
}

}  // namespace imars
