#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP variant; both produce bit-identical output because every output
// element is computed independently with the same arithmetic.

#include <span>

namespace staykate {
class TokenProbMatrix;
}

namespace staykate::kernels {

void sentence_entropies_serial(std::span<const TokenProbMatrix> pool, std::span<double> out);
void sentence_entropies_omp(std::span<const TokenProbMatrix> pool, std::span<double> out);

/// out[i] = dot(query, base_i) / (query_norm * norms[i]) for row-major `base`
/// of `norms.size()` rows of query.size() columns.
void cosine_scores_serial(std::span<const double> base, std::span<const double> norms,
                          std::span<const double> query, double query_norm,
                          std::span<double> out);
void cosine_scores_omp(std::span<const double> base, std::span<const double> norms,
                       std::span<const double> query, double query_norm, std::span<double> out);

/// Sequential dot product; the single definition shared by every cosine path.
inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace staykate::kernels
