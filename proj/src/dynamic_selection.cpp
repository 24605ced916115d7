#include "staykate/dynamic_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "staykate/errors.hpp"
#include "staykate/kernels.hpp"
#include "staykate/util.hpp"

namespace staykate {

namespace {

double norm(std::span<const double> v) { return std::sqrt(kernels::dot(v, v)); }

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("cosine_similarity: dimension mismatch " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine_similarity: zero-norm vector");
  return kernels::dot(a, b) / (na * nb);
}

ExhaustiveIndex::ExhaustiveIndex(std::vector<EmbeddingRecord> records, std::size_t dimension)
    : dimension_(dimension) {
  if (dimension == 0) throw ValidationError("embedding dimension must be positive");
  std::set<std::string> seen;
  ids_.reserve(records.size());
  data_.reserve(records.size() * dimension);
  norms_.reserve(records.size());
  for (auto& rec : records) {
    if (!seen.insert(rec.sentence_id).second)
      throw ValidationError("duplicate embedding id " + rec.sentence_id);
    if (rec.vector.size() != dimension)
      throw ValidationError("embedding " + rec.sentence_id + " has dimension " +
                            std::to_string(rec.vector.size()) + ", expected " +
                            std::to_string(dimension));
    const double n = norm(rec.vector);
    if (n == 0.0) throw ValidationError("embedding " + rec.sentence_id + " has zero norm");
    ids_.push_back(std::move(rec.sentence_id));
    data_.insert(data_.end(), rec.vector.begin(), rec.vector.end());
    norms_.push_back(n);
  }
}

double ExhaustiveIndex::query_norm(std::span<const double> query) const {
  if (query.size() != dimension_)
    throw ValidationError("query dimension " + std::to_string(query.size()) +
                          " does not match index dimension " + std::to_string(dimension_));
  const double n = norm(query);
  if (n == 0.0) throw ValidationError("query vector has zero norm");
  return n;
}

std::vector<Neighbor> ExhaustiveIndex::rank(std::vector<double> scores, std::size_t k) const {
  if (k > ids_.size())
    throw ValidationError("k_d = " + std::to_string(k) + " exceeds index of " +
                          std::to_string(ids_.size()));
  std::vector<std::size_t> order(ids_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return ids_[a] < ids_[b];
                    });
  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t i = k; i-- > 0;) out.push_back(Neighbor{ids_[order[i]], scores[order[i]]});
  return out;
}

std::vector<Neighbor> ExhaustiveIndex::knn(std::span<const double> query, std::size_t k) const {
  const double qn = query_norm(query);
  std::vector<double> scores(ids_.size());
  kernels::cosine_scores_omp(data_, norms_, query, qn, scores);
  return rank(std::move(scores), k);
}

std::vector<Neighbor> ExhaustiveIndex::knn_serial(std::span<const double> query,
                                                  std::size_t k) const {
  const double qn = query_norm(query);
  std::vector<double> scores(ids_.size());
  kernels::cosine_scores_serial(data_, norms_, query, qn, scores);
  return rank(std::move(scores), k);
}

std::vector<Neighbor> knn_retrieve(const EmbeddingIndex& index, std::span<const double> query,
                                   std::size_t k_d) {
  return index.knn(query, k_d);
}

EmbeddingStore::EmbeddingStore(std::vector<EmbeddingRecord> records, std::size_t dimension)
    : dimension_(dimension) {
  for (auto& rec : records) {
    if (rec.vector.size() != dimension)
      throw ValidationError("embedding " + rec.sentence_id + " has dimension " +
                            std::to_string(rec.vector.size()) + ", expected " +
                            std::to_string(dimension));
    if (norm(rec.vector) == 0.0)
      throw ValidationError("embedding " + rec.sentence_id + " has zero norm");
    if (!vectors_.emplace(rec.sentence_id, std::move(rec.vector)).second)
      throw ValidationError("duplicate embedding id " + rec.sentence_id);
  }
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path, std::size_t dimension) {
  std::vector<EmbeddingRecord> records;
  for_each_json_line(path, [&](const Json& rec, std::size_t line) {
    try {
      records.push_back(EmbeddingRecord{rec.at("id").get<std::string>(),
                                        rec.at("vector").get<std::vector<double>>()});
    } catch (const Json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return EmbeddingStore(std::move(records), dimension);
}

const std::vector<double>& EmbeddingStore::vector(const std::string& id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) throw ValidationError("no embedding for sentence " + id);
  return it->second;
}

ExhaustiveIndex EmbeddingStore::index_for(std::span<const std::string> ids) const {
  std::vector<EmbeddingRecord> records;
  records.reserve(ids.size());
  for (const auto& id : ids) records.push_back(EmbeddingRecord{id, vector(id)});
  return ExhaustiveIndex(std::move(records), dimension_);
}

}  // namespace staykate
