#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "imars/errors.hpp"
#include "imars/oracle.hpp"
#include "imars/pipeline.hpp"
#include "imars/report.hpp"

using namespace imars;

namespace {

ArchConfig small_arch() {
  ArchConfig arch;
  arch.banks = 4;
  arch.mats_per_bank = 2;
  arch.cmas_per_mat = 4;
  arch.cma_rows = 16;
  arch.cma_cols = 256;
  return arch;
}

WorkloadConfig small_workload() {
  WorkloadConfig work;
  work.name = "small";
  work.tables.push_back({"u0", EtRole::UietShared, 80, 32, "int8"});
  work.tables.push_back({"u1", EtRole::UietRank, 40, 32, "int8"});
  work.tables.push_back({"it", EtRole::Itet, 50, 32, "int8"});
  work.filtering = {{4, 8}, {72, 32}};
  work.ranking = {{4, 8}, {72, 1}};
  work.lookups_per_table = 4;
  work.radius = 20;
  work.top_k = 3;
  work.lsh_bits = 64;
  work.seed = 5;
  return work;
}

std::size_t count_op(const CostLedger& ledger, std::size_t begin, Op op) {
  std::size_t n = 0;
  for (std::size_t i = begin; i < ledger.size(); ++i) {
    if (ledger.events()[i].op == op) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("thermometer code is `level` leading ones") {
  CHECK(CtrBuffer::thermometer_level(0.0, 256) == 0);
  CHECK(CtrBuffer::thermometer_level(1.0, 256) == 255);  // clamped to the top level
  CHECK(CtrBuffer::thermometer_level(0.5, 256) == 128);
  CHECK(CtrBuffer::thermometer_level(-3.0, 256) == 0);
  CHECK(CtrBuffer::thermometer_level(0.999, 16) == 15);

  BitVec code = CtrBuffer::thermometer(0.5, 16);  // level 8
  CHECK(code.popcount() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(code.get(i));
  for (std::size_t i = 8; i < 16; ++i) CHECK_FALSE(code.get(i));
}

TEST_CASE("select_topk agrees with a sorting oracle on distinct levels") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    CtrBuffer buf(8, 64, nullptr, nullptr);  // multiple 8-row pages

    std::vector<std::size_t> levels(64);
    std::iota(levels.begin(), levels.end(), 0);
    std::shuffle(levels.begin(), levels.end(), rng);
    std::vector<double> ctrs;
    for (std::size_t i = 0; i < n; ++i) {
      // distinct thermometer levels -> strict ordering
      const double ctr = (static_cast<double>(levels[i]) + 0.5) / 64.0;
      ctrs.push_back(ctr);
      buf.push(1000 + i, ctr);
    }

    const std::size_t k = 1 + rng() % n;
    std::vector<std::size_t> got = buf.select_topk(k);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ctrs[a] > ctrs[b]; });
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < k; ++i) expected.push_back(1000 + order[i]);
    CHECK(got == expected);
  }
}

TEST_CASE("select_topk resolves level ties in priority-encoder order") {
  CtrBuffer buf(4, 16, nullptr, nullptr);
  buf.push(10, 0.5);
  buf.push(11, 0.9);
  buf.push(12, 0.5);  // same level as item 10, later row
  buf.push(13, 0.1);
  buf.push(14, 0.5);  // second page, same level again

  CHECK(buf.select_topk(1) == std::vector<std::size_t>{11});
  CHECK(buf.select_topk(3) == std::vector<std::size_t>{11, 10, 12});
  CHECK(buf.select_topk(5) == std::vector<std::size_t>{11, 10, 12, 14, 13});
  CHECK_THROWS_AS(buf.select_topk(6), ValidationError);
}

TEST_CASE("pooled lookup value equals the dequantization-aware oracle") {
  Engine engine(small_arch(), CostTable{}, small_workload());
  const EmbeddingTableData& data = engine.table_data("u0");

  std::vector<std::size_t> indices{0, 7, 39, 16, 7};
  LaneVec pooled = engine.lookup_and_pool(Stage::Filtering, "u0", indices, PoolMode::Sum);

  LaneVec expected(32, 0);
  for (std::size_t idx : indices) {
    auto row = data.row(idx);
    for (std::size_t d = 0; d < 32; ++d) expected[d] += row[d];
  }
  CHECK(pooled == expected);

  LaneVec concat = engine.lookup_and_pool(Stage::Filtering, "u0", indices, PoolMode::Concat);
  REQUIRE(concat.size() == 5 * 32);
  for (std::size_t j = 0; j < indices.size(); ++j) {
    auto row = data.row(indices[j]);
    for (std::size_t d = 0; d < 32; ++d) CHECK(concat[j * 32 + d] == row[d]);
  }
}

TEST_CASE("lookup cost mirrors P reads and P-1 accumulates in every table array") {
  Engine engine(small_arch(), CostTable{}, small_workload());
  CostLedger& ledger = engine.ledger();
  const std::size_t segments = engine.placement().table("u0").segments.size();
  REQUIRE(segments == 5);  // 80 entries in 16-row arrays, spilling into a second mat

  std::size_t mark = ledger.size();
  std::vector<std::size_t> one{5};
  engine.lookup_and_pool(Stage::Ranking, "u0", one, PoolMode::Sum);
  CHECK(count_op(ledger, mark, Op::CmaRead) == segments);
  CHECK(count_op(ledger, mark, Op::CmaAdd) == 0);
  CHECK(count_op(ledger, mark, Op::IntraMatAdd) == 2);  // 5 arrays span 2 mats
  CHECK(count_op(ledger, mark, Op::IntraBankAdd) == 1);  // 2 partials, one tree round
  CHECK(count_op(ledger, mark, Op::RscWord) == 1);

  mark = ledger.size();
  std::vector<std::size_t> ten(10);
  for (std::size_t j = 0; j < 10; ++j) ten[j] = j;
  engine.lookup_and_pool(Stage::Ranking, "u0", ten, PoolMode::Sum);
  CHECK(count_op(ledger, mark, Op::CmaRead) == 10 * segments);
  CHECK(count_op(ledger, mark, Op::CmaAdd) == 9 * segments);
}

TEST_CASE("lockstep banks share time slots through a common schedule") {
  Engine engine(small_arch(), CostTable{}, small_workload());
  CostLedger& ledger = engine.ledger();
  std::vector<std::size_t> indices{0, 1, 2, 3};

  // Serial: two tables, fresh schedule each.
  const std::size_t serial_mark = ledger.size();
  engine.lookup_and_pool(Stage::Ranking, "u0", indices, PoolMode::Sum);
  engine.lookup_and_pool(Stage::Ranking, "u1", indices, PoolMode::Sum);
  const double serial =
      ledger.totals_range(serial_mark, ledger.size()).latency_ns;

  // Parallel: same lookups sharing one schedule.
  const std::size_t par_mark = ledger.size();
  SlotGroups sched(ledger);
  engine.lookup_and_pool(Stage::Ranking, "u0", indices, PoolMode::Sum, &sched);
  engine.lookup_and_pool(Stage::Ranking, "u1", indices, PoolMode::Sum, &sched);
  const double parallel = ledger.totals_range(par_mark, ledger.size()).latency_ns;

  CHECK(parallel < serial);
  // The shared-schedule energy is unchanged; only latency overlaps.
  CHECK(ledger.totals_range(par_mark, ledger.size()).energy_pj ==
        doctest::Approx(ledger.totals_range(serial_mark, par_mark).energy_pj));
}

TEST_CASE("candidate search equals the exact fixed-radius oracle") {
  Engine engine(small_arch(), CostTable{}, small_workload());
  const EmbeddingTableData& items = engine.table_data("it");

  std::mt19937_64 rng(404);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> user(32);
    for (auto& x : user) x = gauss(rng);
    const std::size_t theta = rng() % 33;

    std::vector<std::size_t> got = engine.nns_candidates(user, theta);
    std::vector<std::size_t> expected =
        oracle::exact_hamming_radius(items.signatures, engine.lsh().signature(user), theta);
    CHECK(got == expected);
  }
}

TEST_CASE("radius extremes bracket the candidate count") {
  Engine engine(small_arch(), CostTable{}, small_workload());
  std::vector<double> user(32, 0.25);
  // theta = L returns every stored item.
  CHECK(engine.nns_candidates(user, 64).size() == 50);
  // theta = 0 returns at most the exact-signature matches.
  std::vector<std::size_t> exact = engine.nns_candidates(user, 0);
  const EmbeddingTableData& items = engine.table_data("it");
  BitVec sig = engine.lsh().signature(user);
  for (std::size_t item : exact) CHECK(BitVec::hamming(items.signatures[item], sig) == 0);
}

TEST_CASE("end-to-end query flows through both stages deterministically") {
  Engine a(small_arch(), CostTable{}, small_workload());
  Engine b(small_arch(), CostTable{}, small_workload());

  std::mt19937_64 rng(9);
  Query q = a.random_query(rng);
  q.radius = 64;  // keep every item so ranking always runs

  QueryResult ra = a.run_query(q);
  QueryResult rb = b.run_query(q);
  REQUIRE(ra.top_items.size() == 3);
  CHECK(ra.candidate_count == 50);
  REQUIRE(ra.top_items.size() == rb.top_items.size());
  for (std::size_t i = 0; i < ra.top_items.size(); ++i) {
    CHECK(ra.top_items[i].item == rb.top_items[i].item);
    CHECK(ra.top_items[i].ctr == rb.top_items[i].ctr);
  }
  // CTRs come out of the logistic head, ordered descending.
  for (std::size_t i = 0; i + 1 < ra.top_items.size(); ++i) {
    CHECK(ra.top_items[i].ctr >= ra.top_items[i + 1].ctr - 1.0 / 256.0);
  }

  std::ostringstream ta, tb;
  a.ledger().write_trace(ta);
  b.ledger().write_trace(tb);
  CHECK(ta.str() == tb.str());
}

TEST_CASE("missing sparse indices fail the query") {
  Engine engine(small_arch(), CostTable{}, small_workload());
  std::mt19937_64 rng(9);
  Query q = engine.random_query(rng);
  q.sparse.erase("u0");
  CHECK_THROWS_AS(engine.run_query(q), ValidationError);
}

TEST_CASE("report stage totals match the ledger and per-category parts add up") {
  Engine engine(small_arch(), CostTable{}, small_workload());
  std::mt19937_64 rng(12);
  const std::size_t begin = engine.ledger().size();
  std::vector<QueryResult> results;
  for (int i = 0; i < 3; ++i) {
    Query q = engine.random_query(rng);
    q.radius = 64;
    results.push_back(engine.run_query(q));
  }

  Report report = build_report("small", engine.ledger(),
                               engine.placement().activation_report(), results, begin);
  CHECK(report.queries == 3);
  CHECK(report.activation.active_banks == 3);

  for (const char* stage : {"filtering", "ranking"}) {
    const StageReport& sr = report.stages.at(stage);
    double cat_latency = 0.0, cat_energy = 0.0;
    for (const auto& [name, cost] : sr.by_category) {
      cat_latency += cost.latency_ns;
      cat_energy += cost.energy_pj;
    }
    CHECK(cat_latency == doctest::Approx(sr.total.latency_ns));
    CHECK(cat_energy == doctest::Approx(sr.total.energy_pj));
    CHECK(sr.total.latency_ns > 0.0);
  }
  CHECK(report.end_to_end.latency_ns ==
        doctest::Approx(report.stages.at("filtering").total.latency_ns +
                        report.stages.at("ranking").total.latency_ns));

  // Serialization is stable and carries the same figures.
  CHECK(report_to_json(report) == report_to_json(report));
  CHECK(report_to_text(report).find("ranking") != std::string::npos);
}

TEST_CASE("cost-model changes never alter functional results") {
  Engine base(small_arch(), CostTable{}, small_workload());
  CostTable scaled;
  auto x10 = [](OpCost c) { return OpCost{c.energy_pj * 10, c.latency_ns * 10}; };
  scaled.cma_write = x10(scaled.cma_write);
  scaled.cma_read = x10(scaled.cma_read);
  scaled.cma_add = x10(scaled.cma_add);
  scaled.cma_search = x10(scaled.cma_search);
  scaled.intra_mat_add = x10(scaled.intra_mat_add);
  scaled.intra_bank_add = x10(scaled.intra_bank_add);
  scaled.crossbar_matmul = x10(scaled.crossbar_matmul);
  Engine expensive(small_arch(), scaled, small_workload());

  std::mt19937_64 rng(33);
  for (int i = 0; i < 5; ++i) {
    Query q = base.random_query(rng);
    q.radius = 48;
    QueryResult ra = base.run_query(q);
    QueryResult rb = expensive.run_query(q);
    REQUIRE(ra.top_items.size() == rb.top_items.size());
    for (std::size_t j = 0; j < ra.top_items.size(); ++j) {
      CHECK(ra.top_items[j].item == rb.top_items[j].item);
      CHECK(ra.top_items[j].ctr == rb.top_items[j].ctr);
    }
  }
  CHECK(expensive.ledger().totals().energy_pj > base.ledger().totals().energy_pj);
}

TEST_CASE("lookup pass measures the worst-case per-input batch") {
  Engine engine(small_arch(), CostTable{}, small_workload());
  LedgerTotals p1 = engine.et_lookup_pass(Stage::Ranking, 1);
  LedgerTotals p8 = engine.et_lookup_pass(Stage::Ranking, 8);
  CHECK(p8.latency_ns > p1.latency_ns);
  CHECK(p8.energy_pj > p1.energy_pj);
  CHECK_THROWS_AS(engine.et_lookup_pass(Stage::Ranking, 0), ValidationError);
}
