#include "imars/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "imars/errors.hpp"

namespace imars {
namespace oracle {

std::vector<std::size_t> exact_cosine_topn(std::span<const double> items, std::size_t n,
                                           std::size_t dim, std::span<const double> query,
                                           std::size_t topn) {
  if (topn > n) throw ValidationError("exact_cosine_topn: N > number of items");
  if (query.size() != dim) throw ValidationError("exact_cosine_topn: query dimension mismatch");
  double qnorm = 0.0;
  for (double x : query) qnorm += x * x;
  if (qnorm == 0.0) throw ValidationError("exact_cosine_topn: zero-norm query");
  qnorm = std::sqrt(qnorm);

  std::vector<double> sim(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = items.data() + i * dim;
    double dot = 0.0;
    double norm = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      dot += row[d] * query[d];
      norm += row[d] * row[d];
    }
    // zero-norm items sort last
    sim[i] = norm > 0.0 ? dot / (std::sqrt(norm) * qnorm) : -2.0;
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
  idx.resize(topn);
  return idx;
}

std::vector<std::size_t> exact_hamming_radius(std::span<const BitVec> sigs, const BitVec& query,
                                              std::size_t theta) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sigs.size(); ++i) {
    if (BitVec::hamming(sigs[i], query) <= theta) out.push_back(i);
  }
  return out;
}

double recall(std::span<const std::size_t> approx, std::span<const std::size_t> exact_ordered,
              std::size_t n) {
  if (n == 0) throw ValidationError("recall: N must be >= 1");
  if (n > exact_ordered.size()) throw ValidationError("recall: N exceeds exact result size");
  std::unordered_set<std::size_t> approx_set(approx.begin(), approx.end());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (approx_set.count(exact_ordered[i]) > 0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

std::vector<double> synthetic_embeddings(std::size_t n, std::size_t dim, std::size_t clusters,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t k = std::max<std::size_t>(clusters, 1);

  std::vector<double> centers(k * dim);
  for (auto& c : centers) c = 2.0 * gauss(rng);

  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::vector<double> rows(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = pick(rng);
    for (std::size_t d = 0; d < dim; ++d) {
      rows[i * dim + d] = centers[c * dim + d] + 0.4 * gauss(rng);
    }
  }
  return rows;
}

}  // namespace oracle
}  // namespace imars
