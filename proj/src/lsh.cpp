#include "imars/lsh.hpp"

#include <cmath>
#include <random>

#include "imars/errors.hpp"

namespace imars {

LshModel::LshModel(std::size_t bits, std::size_t dim, std::uint64_t seed)
    : bits_(bits), dim_(dim), seed_(seed), hyperplanes_(bits * dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& h : hyperplanes_) h = gauss(rng);
}

BitVec LshModel::signature(std::span<const double> v) const {
  if (v.size() != dim_) throw ValidationError("lsh_signature: input dimension mismatch");
  for (double x : v) {
    if (!std::isfinite(x)) throw ValidationError("lsh_signature: non-finite input");
  }
  BitVec sig(bits_);
  for (std::size_t i = 0; i < bits_; ++i) {
    double dot = 0.0;
    const double* h = hyperplanes_.data() + i * dim_;
    for (std::size_t d = 0; d < dim_; ++d) dot += h[d] * v[d];
    sig.set(i, dot >= 0.0);
  }
  return sig;
}

}  // namespace imars
