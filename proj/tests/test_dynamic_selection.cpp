#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "staykate/dynamic_selection.hpp"
#include "staykate/errors.hpp"

using namespace staykate;

namespace {

std::vector<std::pair<std::string, std::vector<double>>> random_records(std::mt19937_64& gen,
                                                                        std::size_t n,
                                                                        std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = normal(gen);
    out.emplace_back("r" + std::to_string(i), std::move(v));
  }
  return out;
}

ExhaustiveIndex build(const std::vector<std::pair<std::string, std::vector<double>>>& recs,
                      std::size_t dim) {
  std::vector<EmbeddingRecord> records;
  for (const auto& [id, v] : recs) records.push_back({id, v});
  return ExhaustiveIndex(std::move(records), dim);
}

}  // namespace

TEST_CASE("cosine_similarity examples") {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  const std::vector<double> e1{1, 0}, e2{0, 1};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(e1, e2) == 0.0);
  // 32 / (sqrt(14) sqrt(77)) by hand.
  CHECK(cosine_similarity(a, b) == doctest::Approx(0.9746318461970762).epsilon(1e-12));
  const std::vector<double> zero{0, 0, 0}, two{1, 2};
  CHECK_THROWS_AS(cosine_similarity(a, zero), ValidationError);
  CHECK_THROWS_AS(cosine_similarity(a, two), ValidationError);
}

TEST_CASE("index build rejects bad records") {
  CHECK_THROWS_AS(ExhaustiveIndex({{"a", {0, 0}}}, 2), ValidationError);
  CHECK_THROWS_AS(ExhaustiveIndex({{"a", {1, 0}}, {"a", {0, 1}}}, 2), ValidationError);
  CHECK_THROWS_AS(ExhaustiveIndex({{"a", {1, 0, 0}}}, 2), ValidationError);
}

TEST_CASE("knn_retrieve examples") {
  std::mt19937_64 gen(1);
  const auto recs = random_records(gen, 20, 8);
  const auto index = build(recs, 8);

  SUBCASE("k = size returns everything ascending") {
    const auto out = knn_retrieve(index, recs[0].second, 20);
    REQUIRE(out.size() == 20);
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i - 1].similarity <= out[i].similarity);
  }
  SUBCASE("query equal to a record ranks it last") {
    const auto out = knn_retrieve(index, recs[7].second, 3);
    CHECK(out.back().id == "r7");
    CHECK(out.back().similarity == doctest::Approx(1.0));
  }
  SUBCASE("errors") {
    const std::vector<double> short_query{1, 2};
    CHECK_THROWS_AS(knn_retrieve(index, recs[0].second, 21), ValidationError);
    CHECK_THROWS_AS(knn_retrieve(index, short_query, 1), ValidationError);
  }
}

TEST_CASE("500-record index, k = 6, equals exhaustive scan") {
  std::mt19937_64 gen(2);
  const auto recs = random_records(gen, 500, 32);
  const auto index = build(recs, 32);
  for (int q = 0; q < 20; ++q) {
    const auto query = random_records(gen, 1, 32)[0].second;
    const auto got = knn_retrieve(index, query, 6);
    const auto want = oracle::knn_scan(recs, query, 6);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].id == want[i].first);
      CHECK(got[i].similarity == want[i].second);
    }
  }
}

TEST_CASE("ties prefer the smaller id, which sits later") {
  const auto index = ExhaustiveIndex({{"b", {1, 0}}, {"a", {2, 0}}, {"c", {0, 1}}}, 2);
  const std::vector<double> q{1, 0};
  const auto two = knn_retrieve(index, q, 2);
  CHECK(two[0].id == "b");
  CHECK(two[1].id == "a");
  const auto one = knn_retrieve(index, q, 1);
  CHECK(one[0].id == "a");
}

TEST_CASE("property: positive rescaling of any vector does not change retrieval") {
  std::mt19937_64 gen(4);
  auto recs = random_records(gen, 100, 16);
  const auto query = random_records(gen, 1, 16)[0].second;
  const auto base = knn_retrieve(build(recs, 16), query, 10);
  for (auto& [id, v] : recs)
    for (auto& x : v) x *= 4.0;  // power of two keeps the rescale exact
  auto scaled_query = query;
  for (auto& x : scaled_query) x *= 0.5;
  const auto scaled = knn_retrieve(build(recs, 16), scaled_query, 10);
  REQUIRE(scaled.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(scaled[i].id == base[i].id);
}

TEST_CASE("property: knn(m) is the most-similar tail of knn(k)") {
  std::mt19937_64 gen(6);
  auto recs = random_records(gen, 60, 4);
  recs[10].second = recs[20].second;  // exact tie
  const auto index = build(recs, 4);
  for (int q = 0; q < 30; ++q) {
    const auto query = q == 0 ? recs[10].second : random_records(gen, 1, 4)[0].second;
    const auto big = knn_retrieve(index, query, 12);
    for (std::size_t m = 1; m <= 12; ++m) {
      const auto small = knn_retrieve(index, query, m);
      CHECK(std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(m)));
    }
  }
}

TEST_CASE("embedding store over the mini fixture") {
  const auto store =
      EmbeddingStore::load(std::string(STAYKATE_FIXTURE_DIR) + "/mini/embeddings.jsonl", 16);
  CHECK(store.size() == 45);
  CHECK(store.vector("test-000").size() == 16);
  CHECK_THROWS_AS(store.vector("missing"), ValidationError);
  CHECK_THROWS_AS(
      EmbeddingStore::load(std::string(STAYKATE_FIXTURE_DIR) + "/mini/embeddings.jsonl", 1536),
      ValidationError);
  const std::vector<std::string> ids{"train-000", "train-001", "train-002"};
  CHECK(store.index_for(ids).size() == 3);
}
