#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imars/bitvec.hpp"

namespace imars {
// Brute-force references, independent of the fabric and ledger code
// paths. Used by tests and the evaluate-recall command.
namespace oracle {

// Exact top-N by cosine similarity, ties broken by lower index.
// Zero-norm vectors sort last; a zero-norm query is an error.
std::vector<std::size_t> exact_cosine_topn(std::span<const double> items, std::size_t n,
                                           std::size_t dim, std::span<const double> query,
                                           std::size_t topn);

// Exact fixed-radius Hamming search; returns ascending indices.
std::vector<std::size_t> exact_hamming_radius(std::span<const BitVec> sigs, const BitVec& query,
                                              std::size_t theta);

// |approx intersect exact[0..n)| / n.
double recall(std::span<const std::size_t> approx, std::span<const std::size_t> exact_ordered,
              std::size_t n);

// Mixture-of-Gaussians synthetic embeddings, row-major n x dim.
std::vector<double> synthetic_embeddings(std::size_t n, std::size_t dim, std::size_t clusters,
                                         std::uint64_t seed);

}  // namespace oracle
}  // namespace imars
