// Serial reference vs OpenMP kernels on pools sized like real runs and
// larger.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "staykate/kernels.hpp"
#include "staykate/static_selection.hpp"

namespace {

std::vector<staykate::TokenProbMatrix> make_pool(std::size_t sentences, std::size_t tokens,
                                                 std::size_t classes) {
  std::mt19937_64 gen(42);
  std::gamma_distribution<double> gamma(0.3, 1.0);
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < classes; ++c) labels.push_back("c" + std::to_string(c));
  std::vector<staykate::TokenProbMatrix> pool;
  for (std::size_t s = 0; s < sentences; ++s) {
    std::vector<std::vector<double>> rows(tokens, std::vector<double>(classes));
    for (auto& row : rows) {
      double sum = 0;
      for (auto& p : row) sum += (p = gamma(gen) + 1e-12);
      for (auto& p : row) p /= sum;
    }
    pool.emplace_back("s" + std::to_string(s), labels, rows);
  }
  return pool;
}

struct ScanData {
  std::vector<double> base, norms, query;
  double query_norm = 0;
};

ScanData make_scan(std::size_t n, std::size_t dim) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  ScanData d;
  d.base.resize(n * dim);
  for (auto& x : d.base) x = normal(gen);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < dim; ++j) s += d.base[i * dim + j] * d.base[i * dim + j];
    d.norms.push_back(std::sqrt(s));
  }
  d.query.resize(dim);
  for (auto& x : d.query) x = normal(gen);
  d.query_norm = std::sqrt(staykate::kernels::dot(d.query, d.query));
  return d;
}

template <bool Parallel>
void BM_SentenceEntropies(benchmark::State& state) {
  const auto pool = make_pool(static_cast<std::size_t>(state.range(0)), 30, 7);
  std::vector<double> out(pool.size());
  for (auto _ : state) {
    if constexpr (Parallel) staykate::kernels::sentence_entropies_omp(pool, out);
    else staykate::kernels::sentence_entropies_serial(pool, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_CosineScan(benchmark::State& state) {
  const auto d = make_scan(static_cast<std::size_t>(state.range(0)), 1536);
  std::vector<double> out(d.norms.size());
  for (auto _ : state) {
    if constexpr (Parallel) staykate::kernels::cosine_scores_omp(d.base, d.norms, d.query, d.query_norm, out);
    else staykate::kernels::cosine_scores_serial(d.base, d.norms, d.query, d.query_norm, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SentenceEntropies<false>)->Name("entropies/serial")->Arg(200)->Arg(8000);
BENCHMARK(BM_SentenceEntropies<true>)->Name("entropies/omp")->Arg(200)->Arg(8000);
BENCHMARK(BM_CosineScan<false>)->Name("cosine_scan/serial")->Arg(200)->Arg(5000);
BENCHMARK(BM_CosineScan<true>)->Name("cosine_scan/omp")->Arg(200)->Arg(5000);

BENCHMARK_MAIN();
