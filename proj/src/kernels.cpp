#include "staykate/kernels.hpp"

#include <cstddef>

#include "staykate/static_selection.hpp"

namespace staykate::kernels {

void sentence_entropies_serial(std::span<const TokenProbMatrix> pool, std::span<double> out) {
  for (std::size_t i = 0; i < pool.size(); ++i) out[i] = sentence_entropy(pool[i]);
}

void sentence_entropies_omp(std::span<const TokenProbMatrix> pool, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(pool.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = sentence_entropy(pool[i]);
}

void cosine_scores_serial(std::span<const double> base, std::span<const double> norms,
                          std::span<const double> query, double query_norm,
                          std::span<double> out) {
  const auto dim = query.size();
  for (std::size_t i = 0; i < norms.size(); ++i)
    out[i] = dot(query, base.subspan(i * dim, dim)) / (query_norm * norms[i]);
}

void cosine_scores_omp(std::span<const double> base, std::span<const double> norms,
                       std::span<const double> query, double query_norm, std::span<double> out) {
  const auto dim = query.size();
  const auto n = static_cast<std::ptrdiff_t>(norms.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[i] = dot(query, base.subspan(i * dim, dim)) / (query_norm * norms[i]);
}

}  // namespace staykate::kernels
