// Command-line front end: load configs, build and populate the fabric,
// run query batches, calibrate the cost model, and dump diagnostics.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "imars/config.hpp"
#include "imars/errors.hpp"
#include "imars/oracle.hpp"
#include "imars/pipeline.hpp"
#include "imars/report.hpp"
#include "json.hpp"

namespace {

using namespace imars;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

struct CommonOpts {
  std::string arch_path;
  std::string fom_path;
  std::string workload_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ConfigBundle resolve_configs(const CommonOpts& opts) {
  ConfigBundle bundle;
  if (!opts.arch_path.empty()) bundle.arch = load_config(opts.arch_path).arch;
  if (!opts.fom_path.empty()) bundle.fom = load_config(opts.fom_path).fom;
  if (!opts.workload_path.empty()) {
    ConfigBundle wl = load_config(opts.workload_path);
    bundle.workload = wl.workload;
    // A single all-in-one file may double as arch/fom source.
    if (opts.arch_path.empty()) bundle.arch = wl.arch;
    if (opts.fom_path.empty()) bundle.fom = wl.fom;
  }
  if (opts.seed_set) bundle.workload.seed = opts.seed;
  validate_workload(bundle.workload, bundle.arch);
  return bundle;
}

std::vector<Query> load_queries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open queries file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.contains("schema_version")) throw ParseError(path + ": missing schema_version");
  std::vector<Query> queries;
  for (const auto& jq : j.value("queries", json::array())) {
    Query q;
    q.dense = jq.value("dense", std::vector<double>{});
    if (jq.contains("sparse")) {
      for (const auto& [table, indices] : jq["sparse"].items()) {
        q.sparse[table] = indices.get<std::vector<std::size_t>>();
      }
    }
    if (jq.contains("radius")) q.radius = jq["radius"].get<std::size_t>();
    if (jq.contains("top_k")) q.top_k = jq["top_k"].get<std::size_t>();
    queries.push_back(std::move(q));
  }
  return queries;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("cannot write output file: " + path.string());
  out << content;
}

int cmd_run(const CommonOpts& opts, const std::string& queries_path, const std::string& out_dir,
            bool trace) {
  ConfigBundle bundle = resolve_configs(opts);
  std::vector<Query> queries;
  if (!queries_path.empty()) queries = load_queries(queries_path);

  Engine engine(bundle.arch, bundle.fom, bundle.workload);
  const std::size_t query_begin = engine.ledger().size();
  std::vector<QueryResult> results;
  for (const auto& q : queries) results.push_back(engine.run_query(q));

  Report report = build_report(bundle.workload.name, engine.ledger(),
                               engine.placement().activation_report(), std::move(results),
                               query_begin);
  const std::string text = report_to_text(report);
  std::cout << text;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_file(std::filesystem::path(out_dir) / "report.txt", text);
    write_file(std::filesystem::path(out_dir) / "report.json", report_to_json(report));
    if (trace) {
      std::ostringstream ss;
      engine.ledger().write_trace(ss);
      write_file(std::filesystem::path(out_dir) / "trace.tsv", ss.str());
    }
  }
  return kExitOk;
}

int cmd_calibrate(const CommonOpts& opts, const std::string& targets_path,
                  const std::string& cross_workload_path, const std::string& out_dir) {
  ConfigBundle bundle = resolve_configs(opts);
  CalibrationTargets targets = load_targets(targets_path);
  std::optional<WorkloadConfig> cross;
  if (!cross_workload_path.empty()) cross = load_config(cross_workload_path).workload;

  CalibrationResult result =
      calibrate(bundle.arch, bundle.fom, bundle.workload, targets, default_calibration_grid(), cross);
  const std::string text = calibration_to_text(result, targets);
  std::cout << text;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_file(std::filesystem::path(out_dir) / "calibration.txt", text);
  }
  return kExitOk;
}

int cmd_evaluate_recall(const CommonOpts& opts, std::vector<std::size_t> thetas,
                        std::size_t num_queries, std::size_t topn) {
  ConfigBundle bundle = resolve_configs(opts);
  if (thetas.empty()) {
    for (std::size_t t = 0; t <= bundle.workload.lsh_bits / 2; t += 16) thetas.push_back(t);
  }
  auto points = evaluate_recall(bundle.workload, bundle.arch, bundle.fom, thetas, num_queries, topn);
  std::cout << "theta\tmean_candidates\tmean_recall\n";
  for (const auto& p : points) {
    std::cout << p.theta << '\t' << p.mean_candidates << '\t' << p.mean_recall << '\n';
  }
  return kExitOk;
}

int cmd_dump_placement(const CommonOpts& opts, const std::string& out_path) {
  ConfigBundle bundle = resolve_configs(opts);
  Placement placement = Placement::place_tables(bundle.arch, bundle.workload);
  if (out_path.empty()) {
    placement.dump(std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw SimError("cannot write " + out_path);
    placement.dump(out);
  }
  auto summary = placement.activation_report();
  std::cerr << "activated: " << summary.active_banks << " banks, " << summary.active_mats
            << " mats, " << summary.active_cmas << " CMAs\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iMARS in-memory recommendation-system simulator"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* cmd, bool need_workload) {
    cmd->add_option("--arch", opts.arch_path, "Architecture config file");
    cmd->add_option("--fom", opts.fom_path, "Cost-table (figure-of-merit) config file");
    auto* wl = cmd->add_option("--workload", opts.workload_path, "Workload config file");
    if (need_workload) wl->required();
    cmd->add_option("--seed", opts.seed, "Override the workload RNG seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
  };

  auto* run = app.add_subcommand("run", "Run a query batch and emit reports");
  std::string queries_path, out_dir, targets_path, cross_path, out_path;
  bool trace = false;
  add_common(run, true);
  run->add_option("--queries", queries_path, "Query batch file (JSON)");
  run->add_option("--out", out_dir, "Output directory for report/trace files");
  run->add_flag("--trace", trace, "Also write the per-event trace");

  auto* cal = app.add_subcommand("calibrate", "Sweep P and bus cost against reference targets");
  add_common(cal, true);
  cal->add_option("--targets", targets_path, "Reference-constants file")->required();
  cal->add_option("--cross-workload", cross_path, "Workload evaluated at the fitted setting");
  cal->add_option("--out", out_dir, "Output directory");

  auto* rec = app.add_subcommand("evaluate-recall", "Recall vs exact cosine top-N over a theta sweep");
  std::vector<std::size_t> thetas;
  std::size_t num_queries = 20, topn = 10;
  add_common(rec, true);
  rec->add_option("--theta", thetas, "Radii to evaluate (default: sweep 0..L/2)");
  rec->add_option("--queries", num_queries, "Number of random queries");
  rec->add_option("--topn", topn, "Exact top-N used as ground truth");

  auto* dump = app.add_subcommand("dump-placement", "Dump the table placement as delimited text");
  add_common(dump, true);
  dump->add_option("--out", out_path, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(opts, queries_path, out_dir, trace);
    if (cal->parsed()) return cmd_calibrate(opts, targets_path, cross_path, out_dir);
    if (rec->parsed()) return cmd_evaluate_recall(opts, thetas, num_queries, topn);
    if (dump->parsed()) return cmd_dump_placement(opts, out_path);
    return kExitRuntime;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitParse;
  } catch (const imars::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const imars::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
