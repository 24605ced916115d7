#include <doctest.h>

#include <omp.h>

#include <random>

#include "staykate/dynamic_selection.hpp"
#include "staykate/kernels.hpp"
#include "staykate/static_selection.hpp"

using namespace staykate;

TEST_CASE("cosine kernels: OpenMP output equals the serial reference exactly") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> normal;
  const std::size_t n = 777, dim = 1536;
  std::vector<double> base(n * dim), norms(n), query(dim);
  for (auto& x : base) x = normal(gen);
  for (std::size_t i = 0; i < n; ++i)
    norms[i] = std::sqrt(kernels::dot({base.data() + i * dim, dim}, {base.data() + i * dim, dim}));
  for (auto& x : query) x = normal(gen);
  const double qn = std::sqrt(kernels::dot(query, query));

  std::vector<double> serial(n), parallel(n);
  kernels::cosine_scores_serial(base, norms, query, qn, serial);
  for (int threads : {1, 2, 3, 8}) {
    omp_set_num_threads(threads);
    kernels::cosine_scores_omp(base, norms, query, qn, parallel);
    CHECK(parallel == serial);
  }
}

TEST_CASE("entropy kernels: OpenMP output equals the serial reference exactly") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TokenProbMatrix> pool;
  for (int s = 0; s < 150; ++s) {
    std::vector<std::vector<double>> rows(1 + gen() % 25, std::vector<double>(5));
    for (auto& r : rows) {
      double sum = 0;
      for (auto& p : r) sum += (p = u(gen));
      for (auto& p : r) p /= sum;
    }
    pool.emplace_back("s" + std::to_string(s), std::vector<std::string>{"a", "b", "c", "d", "e"}, rows);
  }
  std::vector<double> serial(pool.size()), parallel(pool.size());
  kernels::sentence_entropies_serial(pool, serial);
  for (int threads : {1, 4, 7}) {
    omp_set_num_threads(threads);
    kernels::sentence_entropies_omp(pool, parallel);
    CHECK(parallel == serial);
  }
}

TEST_CASE("index knn and knn_serial agree") {
  std::mt19937_64 gen(10);
  std::normal_distribution<double> normal;
  std::vector<EmbeddingRecord> records;
  for (int i = 0; i < 300; ++i) {
    std::vector<double> v(64);
    for (auto& x : v) x = normal(gen);
    records.push_back({"id" + std::to_string(i), v});
  }
  const ExhaustiveIndex index(records, 64);
  std::vector<double> q(64);
  for (auto& x : q) x = normal(gen);
  CHECK(index.knn(q, 25) == index.knn_serial(q, 25));
}
