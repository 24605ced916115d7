#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace staykate {

inline constexpr std::size_t kDefaultEmbeddingDim = 1536;

struct EmbeddingRecord {
  std::string sentence_id;
  std::vector<double> vector;
};

/// dot(a, b) / (|a| |b|). Throws ValidationError on a dimension mismatch or a
/// zero-norm input.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  std::string id;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Retrieval backend. Implementations must reproduce ExhaustiveIndex exactly
// (ids, order, tie rule); the oracle tests run against this interface.
class EmbeddingIndex {
 public:
  virtual ~EmbeddingIndex() = default;

  virtual std::size_t size() const noexcept = 0;
  virtual std::size_t dimension() const noexcept = 0;

  /// The k most similar records in ascending similarity, most similar last.
  /// Preference among equal similarities goes to the smaller id, so a
  /// preferred record sits later in the output.
  virtual std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const = 0;
};

/// Brute-force scan over all records, parallel across records.
class ExhaustiveIndex final : public EmbeddingIndex {
 public:
  /// Rejects duplicate ids, mixed dimensions and zero-norm vectors.
  ExhaustiveIndex(std::vector<EmbeddingRecord> records, std::size_t dimension);

  std::size_t size() const noexcept override { return ids_.size(); }
  std::size_t dimension() const noexcept override { return dimension_; }
  std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const override;

  /// Same as knn() but scores with the serial reference kernel.
  std::vector<Neighbor> knn_serial(std::span<const double> query, std::size_t k) const;

  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<Neighbor> rank(std::vector<double> scores, std::size_t k) const;
  double query_norm(std::span<const double> query) const;

  std::vector<std::string> ids_;
  std::vector<double> data_;   // row-major, ids_.size() x dimension_
  std::vector<double> norms_;
  std::size_t dimension_ = 0;
};

std::vector<Neighbor> knn_retrieve(const EmbeddingIndex& index, std::span<const double> query,
                                   std::size_t k_d);

/// Every embedding in a file keyed by sentence id. Query vectors for test
/// sentences are looked up here once and reused across configurations.
class EmbeddingStore {
 public:
  /// JSON-lines {"id", "vector"}; every vector must have `dimension` entries
  /// and a non-zero norm.
  static EmbeddingStore load(const std::filesystem::path& path, std::size_t dimension);

  EmbeddingStore() = default;
  EmbeddingStore(std::vector<EmbeddingRecord> records, std::size_t dimension);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  bool contains(const std::string& id) const { return vectors_.count(id) > 0; }
  const std::vector<double>& vector(const std::string& id) const;

  /// Index over the given subset, e.g. the labeled pool.
  ExhaustiveIndex index_for(std::span<const std::string> ids) const;

 private:
  std::map<std::string, std::vector<double>> vectors_;
  std::size_t dimension_ = 0;
};

}  // namespace staykate
