#include "imars/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "imars/errors.hpp"
#include "imars/oracle.hpp"

namespace imars {

std::uint64_t SlotGroups::get(std::size_t slot) {
  if (slot >= groups_.size()) groups_.resize(slot + 1, 0);
  if (groups_[slot] == 0) groups_[slot] = ledger_->new_group();
  return groups_[slot];
}

// ---- CtrBuffer ---------------------------------------------------------

CtrBuffer::CtrBuffer(std::size_t cma_rows, std::size_t cma_cols, CostLedger* ledger,
                     const CostTable* fom, Stage stage)
    : cma_rows_(cma_rows), cma_cols_(cma_cols), ledger_(ledger), fom_(fom), stage_(stage) {}

std::size_t CtrBuffer::thermometer_level(double ctr, std::size_t bits) {
  const double clamped = std::clamp(ctr, 0.0, 1.0);
  const auto level = static_cast<long>(std::floor(clamped * static_cast<double>(bits)));
  return static_cast<std::size_t>(std::clamp(level, 0L, static_cast<long>(bits) - 1));
}

BitVec CtrBuffer::thermometer(double ctr, std::size_t bits) {
  const std::size_t level = thermometer_level(ctr, bits);
  BitVec code(bits);
  for (std::size_t i = 0; i < level; ++i) code.set(i, true);
  return code;
}

void CtrBuffer::push(std::size_t item, double ctr) {
  const std::size_t position = items_.size();
  const std::size_t page = position / cma_rows_;
  const std::size_t row = position % cma_rows_;
  if (page == pages_.size()) pages_.emplace_back(cma_rows_, cma_cols_);

  CmaState& cma = pages_[page];
  CostScope scope{ledger_, fom_, stage_, Category::TopK, "ctr_buf.p" + std::to_string(page), 0};
  cma.set_mode(CmaMode::Ram);
  cma.write_row(row, thermometer(ctr, cma_cols_), scope);
  cma.set_mode(CmaMode::Cam);
  items_.push_back(item);
  ctrs_.push_back(ctr);
}

std::vector<std::size_t> CtrBuffer::select_topk(std::size_t k) {
  if (k > items_.size()) {
    throw ValidationError("select_topk: k=" + std::to_string(k) + " > buffer size " +
                          std::to_string(items_.size()));
  }
  BitVec all_ones(cma_cols_);
  for (std::size_t i = 0; i < cma_cols_; ++i) all_ones.set(i, true);

  std::vector<bool> taken(items_.size(), false);
  std::vector<std::size_t> selected;
  for (std::size_t theta = 0; theta <= cma_cols_ && selected.size() < k; ++theta) {
    // One probe: all buffer pages searched in parallel.
    const std::uint64_t group = ledger_ != nullptr ? ledger_->new_group() : 0;
    for (std::size_t page = 0; page < pages_.size(); ++page) {
      CostScope scope{ledger_, fom_, stage_, Category::TopK,
                      "ctr_buf.p" + std::to_string(page), group};
      SearchResult res = pages_[page].threshold_search(all_ones, theta, scope);
      for (std::size_t row : res.matched_rows) {
        const std::size_t position = page * cma_rows_ + row;
        if (!taken[position] && selected.size() < k) {
          taken[position] = true;
          selected.push_back(items_[position]);
        } else if (!taken[position]) {
          break;  // k reached inside this probe; priority order already honored
        }
      }
      if (selected.size() >= k) break;
    }
  }
  return selected;
}

// ---- Engine ------------------------------------------------------------

namespace {

constexpr std::size_t kLaneBits = 8;

std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag) {
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
  for (unsigned char c : tag) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

}  // namespace

Engine::Engine(ArchConfig arch, CostTable fom, WorkloadConfig work,
               std::map<std::string, std::vector<double>> table_data)
    : arch_(arch),
      work_(std::move(work)),
      fabric_(std::make_unique<Fabric>(arch, std::move(fom))),
      placement_(Placement::place_tables(arch_, work_)),
      lsh_(work_.lsh_bits, work_.itet() ? work_.itet()->dim : 32, mix_seed(work_.seed, "lsh")) {
  validate_workload(work_, arch_);

  for (std::size_t i = 0; i < work_.tables.size(); ++i) {
    const EtSpec& spec = work_.tables[i];
    std::vector<double> rows;
    if (auto it = table_data.find(spec.id); it != table_data.end()) {
      rows = it->second;
      if (rows.size() != spec.entries * spec.dim) {
        throw ValidationError("table data for " + spec.id + " has wrong shape");
      }
    } else {
      rows = oracle::synthetic_embeddings(spec.entries, spec.dim, 8, mix_seed(work_.seed, spec.id));
    }
    EmbeddingTableData data = quantize_table(rows, spec.entries, spec.dim);
    if (spec.role == EtRole::Itet) attach_signatures(data, lsh_);
    table_idx_[spec.id] = i;
    tables_.push_back(std::move(data));
  }

  auto make_dnn = [&](const std::vector<std::size_t>& widths, const char* tag,
                      OutputActivation act) {
    return widths.size() >= 2 ? DnnModel::random(widths, mix_seed(work_.seed, tag), act)
                              : DnnModel();
  };
  filtering_dense_ = make_dnn(work_.filtering.dense_layers, "fd", OutputActivation::Relu);
  filtering_dnn_ = make_dnn(work_.filtering.dnn_layers, "ff", OutputActivation::None);
  ranking_dense_ = make_dnn(work_.ranking.dense_layers, "rd", OutputActivation::Relu);
  ranking_dnn_ = make_dnn(work_.ranking.dnn_layers, "rr", OutputActivation::Logistic);

  if (auto itet = work_.itet(); itet && !work_.filtering.dnn_layers.empty() &&
                                work_.filtering.dnn_layers.back() != itet->dim) {
    throw ValidationError("filtering DNN output width must equal the ItET dimension");
  }

  populate();
}

const EmbeddingTableData& Engine::table_data(const std::string& id) const {
  auto it = table_idx_.find(id);
  if (it == table_idx_.end()) throw ValidationError("unknown table: " + id);
  return tables_[it->second];
}

void Engine::populate() {
  for (std::size_t i = 0; i < work_.tables.size(); ++i) {
    populate_table(work_.tables[i], tables_[i]);
  }
}

void Engine::populate_table(const EtSpec& spec, const EmbeddingTableData& data) {
  const TablePlacement& tp = placement_.table(spec.id);
  for (std::size_t entry = 0; entry < spec.entries; ++entry) {
    const Location loc = placement_.locate(spec.id, entry);
    CmaState& cma = fabric_->cma(loc.bank, loc.mat, loc.cma);
    auto scope = fabric_->scope(Stage::Load, Category::Other,
                                Fabric::component_id(loc.bank, loc.mat, loc.cma));
    cma.write_row(loc.row, data.row_bits(entry), scope);
    if (loc.sig_cma) {
      CmaState& sig = fabric_->cma(loc.bank, loc.mat, *loc.sig_cma);
      auto sig_scope = fabric_->scope(Stage::Load, Category::Other,
                                      Fabric::component_id(loc.bank, loc.mat, *loc.sig_cma));
      sig.set_mode(CmaMode::Ram);
      sig.write_row(loc.row, data.signatures[entry], sig_scope);
    }
  }
  // Signature arrays serve searches from here on.
  for (const auto& seg : tp.segments) {
    if (seg.sig_cma) fabric_->cma(tp.bank, seg.mat, *seg.sig_cma).set_mode(CmaMode::Cam);
  }
}

std::vector<const EtSpec*> Engine::stage_tables(Stage stage) const {
  std::vector<const EtSpec*> out;
  for (const auto& t : work_.tables) {
    const bool in_stage =
        t.role == EtRole::UietShared || t.role == EtRole::Itet ||
        (stage == Stage::Filtering ? t.role == EtRole::UietFilter : t.role == EtRole::UietRank);
    if (in_stage) out.push_back(&t);
  }
  return out;
}

LaneVec Engine::lookup_and_pool(Stage stage, const std::string& table_id,
                                std::span<const std::size_t> indices, PoolMode mode,
                                SlotGroups* schedule) {
  if (indices.empty()) throw ValidationError("lookup_and_pool: empty index list");
  const TablePlacement& tp = placement_.table(table_id);
  const EtSpec& spec = work_.tables[table_idx_.at(table_id)];
  for (std::size_t idx : indices) {
    if (idx >= tp.entries) {
      throw ValidationError("lookup index " + std::to_string(idx) + " out of range for table " +
                            table_id);
    }
  }

  SlotGroups local(fabric_->ledger());
  SlotGroups& sched = schedule != nullptr ? *schedule : local;
  const std::size_t P = indices.size();
  const std::size_t R = arch_.cma_rows;
  const std::size_t word_bytes = arch_.cma_cols / 8;

  // Functional result: exact wide-lane sums of the stored rows,
  // accumulated per owning array.
  std::vector<LaneVec> mat_partials;
  LaneVec pooled(spec.dim, 0);
  LaneVec concat;
  std::vector<LaneVec> per_mat(arch_.mats_per_bank);
  for (std::size_t idx : indices) {
    const std::size_t chunk = idx / R;
    const Segment& seg = tp.segments[chunk];
    LaneVec lanes =
        fabric_->cma(tp.bank, seg.mat, seg.cma).row_lanes(idx % R, spec.dim, kLaneBits);
    if (mode == PoolMode::Concat) {
      concat.insert(concat.end(), lanes.begin(), lanes.end());
    } else {
      if (per_mat[seg.mat].empty()) per_mat[seg.mat].assign(spec.dim, 0);
      for (std::size_t d = 0; d < spec.dim; ++d) per_mat[seg.mat][d] += lanes[d];
    }
  }
  if (mode == PoolMode::Sum) {
    for (const auto& partial : per_mat) {
      if (partial.empty()) continue;
      for (std::size_t d = 0; d < spec.dim; ++d) pooled[d] += partial[d];
    }
  }

  // Cost: every array of the table mirrors the lookup/accumulate cycles
  // (broadcast activation); arrays run in lockstep, tables in other
  // banks share the same time slots.
  const CostTable& fom = fabric_->fom();
  CostLedger& ledger = fabric_->ledger();
  for (std::size_t r = 0; r < P; ++r) {
    const std::uint64_t group = sched.get(r);
    for (const auto& seg : tp.segments) {
      ledger.append(stage, Category::EtLookup, Fabric::component_id(tp.bank, seg.mat, seg.cma),
                    Op::CmaRead, fom.cma_read, group);
    }
  }
  if (mode == PoolMode::Sum) {
    for (std::size_t a = 0; a + 1 < P; ++a) {
      const std::uint64_t group = sched.get(P + a);
      for (const auto& seg : tp.segments) {
        ledger.append(stage, Category::EtLookup, Fabric::component_id(tp.bank, seg.mat, seg.cma),
                      Op::CmaAdd, fom.cma_add, group);
      }
    }
    const std::size_t base_mat = 2 * P - 1;
    const std::uint64_t mat_group = sched.get(base_mat);
    for (std::size_t mat : tp.mats) {
      ledger.append(stage, Category::EtLookup, Fabric::mat_id(tp.bank, mat) + ".tree",
                    Op::IntraMatAdd, fom.intra_mat_add, mat_group);
    }
    // Mat partials travel to the bank tree over the IBC network.
    const std::size_t shots =
        (tp.mats.size() * word_bytes + arch_.ibc_shot_bytes - 1) / arch_.ibc_shot_bytes;
    const std::size_t base_ibc = base_mat + 1;
    for (std::size_t s = 0; s < shots; ++s) {
      ledger.append(stage, Category::EtLookup, Fabric::bank_id(tp.bank) + ".ibc", Op::IbcShot,
                    arch_.bus_cost, sched.get(base_ibc + s));
    }
    const std::size_t max_shots =
        (arch_.mats_per_bank * word_bytes + arch_.ibc_shot_bytes - 1) / arch_.ibc_shot_bytes;
    const std::size_t rounds = Fabric::reduction_rounds(tp.mats.size(), arch_.intra_bank_fanin);
    const std::size_t base_bank = base_ibc + max_shots;
    for (std::size_t r = 0; r < rounds; ++r) {
      ledger.append(stage, Category::EtLookup, Fabric::bank_id(tp.bank) + ".tree",
                    Op::IntraBankAdd, fom.intra_bank_add, sched.get(base_bank + r));
    }
    // Pooled 256-bit result leaves on the RSC bus (globally serialized).
    fabric_->rsc_transfer(stage, Category::EtLookup, Fabric::bank_id(tp.bank), "pool",
                          arch_.cma_cols);
    return pooled;
  }

  fabric_->rsc_transfer(stage, Category::EtLookup, Fabric::bank_id(tp.bank), "pool",
                        P * arch_.cma_cols);
  return concat;
}

std::vector<double> Engine::dnn_forward(Stage stage, Category category, const DnnModel& model,
                                        std::span<const double> input) {
  if (model.layers().empty()) return {input.begin(), input.end()};

  std::vector<double> out = model.forward(input);

  const CostTable& fom = fabric_->fom();
  CostLedger& ledger = fabric_->ledger();
  const std::string xbar = "xbar." + to_string(stage);
  fabric_->rsc_transfer(stage, category, "pool", xbar, input.size() * 8);
  for (const auto& layer : model.layers()) {
    const std::size_t tiles = crossbar_tiles(layer.in, layer.out, fom);
    const std::uint64_t group = ledger.new_group();  // tiles within a layer in parallel
    for (std::size_t t = 0; t < tiles; ++t) {
      ledger.append(stage, category, xbar, Op::CrossbarMatMul, fom.crossbar_matmul, group);
    }
  }
  fabric_->rsc_transfer(stage, category, xbar, "out", out.size() * 8);
  return out;
}

std::vector<std::size_t> Engine::nns_candidates(std::span<const double> user_embedding,
                                                std::size_t theta, Stage stage) {
  auto itet = work_.itet();
  if (!itet) throw ValidationError("nns_candidates: workload has no ItET");
  const TablePlacement& tp = placement_.table(itet->id);

  BitVec sig = lsh_.signature(user_embedding);
  BitVec query(arch_.cma_cols);
  for (std::size_t i = 0; i < sig.width() && i < arch_.cma_cols; ++i) query.set(i, sig.get(i));

  fabric_->rsc_transfer(stage, Category::Nns, "filter_dnn", Fabric::bank_id(tp.bank),
                        work_.lsh_bits);

  // All activated signature arrays search in parallel.
  CostLedger& ledger = fabric_->ledger();
  const std::uint64_t group = ledger.new_group();
  std::vector<std::size_t> items;
  for (std::size_t chunk = 0; chunk < tp.segments.size(); ++chunk) {
    const Segment& seg = tp.segments[chunk];
    if (!seg.sig_cma) continue;
    CostScope scope{&ledger, &fabric_->fom(), stage, Category::Nns,
                    Fabric::component_id(tp.bank, seg.mat, *seg.sig_cma), group};
    SearchResult res =
        fabric_->cma(tp.bank, seg.mat, *seg.sig_cma).threshold_search(query, theta, scope);
    for (std::size_t row : res.matched_rows) items.push_back(chunk * arch_.cma_rows + row);
  }
  fabric_->rsc_transfer(stage, Category::Nns, Fabric::bank_id(tp.bank), "item_buffer",
                        items.size() * 32);
  return items;
}

std::vector<double> Engine::assemble_dnn_input(
    std::size_t width, std::span<const std::vector<double>> parts) const {
  std::vector<double> input;
  for (const auto& part : parts) input.insert(input.end(), part.begin(), part.end());
  if (input.size() > width) {
    throw ValidationError("assembled DNN input (" + std::to_string(input.size()) +
                          ") exceeds layer width (" + std::to_string(width) + ")");
  }
  input.resize(width, 0.0);  // unused crossbar inputs held at zero
  return input;
}

FilteringOutput Engine::filtering_stage(const Query& q) {
  if (work_.filtering.dnn_layers.size() < 2) {
    throw ValidationError("filtering_stage: workload has no filtering DNN");
  }
  const Stage stage = Stage::Filtering;

  // (1a) sparse lookups + pooling, banks in parallel.
  SlotGroups sched(fabric_->ledger());
  std::vector<double> combined;
  for (const EtSpec* spec : stage_tables(stage)) {
    auto it = q.sparse.find(spec->id);
    if (it == q.sparse.end() || it->second.empty()) {
      throw ValidationError("query has no sparse indices for table " + spec->id);
    }
    LaneVec pooled = lookup_and_pool(stage, spec->id, it->second, PoolMode::Sum, &sched);
    const double scale = tables_[table_idx_.at(spec->id)].scale;
    if (combined.empty()) combined.assign(pooled.size(), 0.0);
    for (std::size_t d = 0; d < pooled.size(); ++d) {
      combined[d] += scale * static_cast<double>(pooled[d]);
    }
  }

  // (1b) dense features through the dense DNN stack.
  std::vector<double> dense_out = dnn_forward(stage, Category::Dnn, filtering_dense_, q.dense);

  // (1c) filtering DNN -> user embedding.
  const std::vector<std::vector<double>> parts{dense_out, combined};
  std::vector<double> input = assemble_dnn_input(filtering_dnn_.input_width(), parts);
  std::vector<double> user = dnn_forward(stage, Category::Dnn, filtering_dnn_, input);

  // (1d) fixed-radius NNS on the ItET signatures.
  const std::size_t theta = q.radius.value_or(work_.radius);
  FilteringOutput out;
  out.user_embedding = std::move(user);
  out.item_buffer = nns_candidates(out.user_embedding, theta, stage);
  return out;
}

QueryResult Engine::ranking_stage(std::span<const std::size_t> items, const Query& q) {
  if (items.empty()) throw ValidationError("ranking_stage: empty item buffer");
  if (work_.ranking.dnn_layers.size() < 2) {
    throw ValidationError("ranking_stage: workload has no ranking DNN");
  }
  const Stage stage = Stage::Ranking;
  auto itet = work_.itet();

  // (2c) dense features through the ranking dense stack, shared by all
  // candidates.
  std::vector<double> dense_out = dnn_forward(stage, Category::Dnn, ranking_dense_, q.dense);

  CtrBuffer buf(arch_.cma_rows, arch_.cma_cols, &fabric_->ledger(), &fabric_->fom(), stage);
  for (std::size_t item : items) {
    // (2b) item embedding + ranking UIET lookups with pooling.
    SlotGroups sched(fabric_->ledger());
    std::vector<double> item_emb;
    if (itet) {
      const std::size_t one[] = {item};
      // Single-entry fetch: its phases do not line up with the P-deep
      // pooled lookups, so it keeps its own schedule.
      LaneVec lanes = lookup_and_pool(stage, itet->id, one, PoolMode::Sum, nullptr);
      const double scale = tables_[table_idx_.at(itet->id)].scale;
      item_emb.resize(lanes.size());
      for (std::size_t d = 0; d < lanes.size(); ++d) {
        item_emb[d] = scale * static_cast<double>(lanes[d]);
      }
    }
    std::vector<double> combined;
    for (const EtSpec* spec : stage_tables(stage)) {
      if (itet && spec->id == itet->id) continue;
      auto it = q.sparse.find(spec->id);
      if (it == q.sparse.end() || it->second.empty()) {
        throw ValidationError("query has no sparse indices for table " + spec->id);
      }
      LaneVec pooled = lookup_and_pool(stage, spec->id, it->second, PoolMode::Sum, &sched);
      const double scale = tables_[table_idx_.at(spec->id)].scale;
      if (combined.empty()) combined.assign(pooled.size(), 0.0);
      for (std::size_t d = 0; d < pooled.size(); ++d) {
        combined[d] += scale * static_cast<double>(pooled[d]);
      }
    }

    // (2d) ranking DNN -> CTR, written to the CTR buffer.
    const std::vector<std::vector<double>> parts{dense_out, item_emb, combined};
    std::vector<double> input = assemble_dnn_input(ranking_dnn_.input_width(), parts);
    std::vector<double> ctr = dnn_forward(stage, Category::Dnn, ranking_dnn_, input);
    buf.push(item, ctr.back());
  }

  // (2e) top-k via all-ones threshold searches.
  const std::size_t k = std::min(q.top_k.value_or(work_.top_k), buf.size());
  std::vector<std::size_t> top = buf.select_topk(k);

  QueryResult result;
  result.candidate_count = items.size();
  for (std::size_t item : top) {
    for (std::size_t pos = 0; pos < items.size(); ++pos) {
      if (items[pos] == item) {
        result.top_items.push_back({item, buf.ctr_of(pos)});
        break;
      }
    }
  }
  return result;
}

QueryResult Engine::run_query(const Query& q) {
  FilteringOutput filtered = filtering_stage(q);
  if (filtered.item_buffer.empty()) return {};
  return ranking_stage(filtered.item_buffer, q);
}

LedgerTotals Engine::et_lookup_pass(Stage stage, std::size_t lookups_per_table) {
  if (lookups_per_table < 1) throw ValidationError("et_lookup_pass: P must be >= 1");
  const std::size_t mark = fabric_->ledger().size();
  SlotGroups sched(fabric_->ledger());
  for (const EtSpec* spec : stage_tables(stage)) {
    // Worst case: every lookup lands in the table's first array.
    std::vector<std::size_t> indices(lookups_per_table);
    const std::size_t span = std::min(spec->entries, arch_.cma_rows);
    for (std::size_t j = 0; j < indices.size(); ++j) indices[j] = j % span;
    lookup_and_pool(stage, spec->id, indices, PoolMode::Sum, &sched);
  }
  return fabric_->ledger().totals_range(mark, fabric_->ledger().size());
}

Query Engine::random_query(std::mt19937_64& rng) const {
  Query q;
  const std::size_t dense_width = !work_.filtering.dense_layers.empty()
                                      ? work_.filtering.dense_layers.front()
                                      : (!work_.ranking.dense_layers.empty()
                                             ? work_.ranking.dense_layers.front()
                                             : 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  q.dense.resize(dense_width);
  for (auto& x : q.dense) x = gauss(rng);
  for (const auto& t : work_.tables) {
    std::uniform_int_distribution<std::size_t> pick(0, t.entries - 1);
    auto& indices = q.sparse[t.id];
    indices.resize(work_.lookups_per_table);
    for (auto& idx : indices) idx = pick(rng);
  }
  return q;
}

}  // namespace imars
