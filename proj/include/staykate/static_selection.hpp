#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace staykate {

struct Dataset;
struct Sentence;

/// Per-token class distributions for one sentence, row-major.
class TokenProbMatrix {
 public:
  TokenProbMatrix() = default;

  /// Validates every row (see validate_row) and renormalizes rows whose sum
  /// is within tolerance of 1.
  TokenProbMatrix(std::string sentence_id, std::vector<std::string> class_labels,
                  const std::vector<std::vector<double>>& rows);

  const std::string& sentence_id() const noexcept { return sentence_id_; }
  const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }
  std::size_t num_tokens() const noexcept { return num_tokens_; }
  std::size_t num_classes() const noexcept { return class_labels_.size(); }
  std::span<const double> row(std::size_t i) const {
    return {probs_.data() + i * num_classes(), num_classes()};
  }

 private:
  std::string sentence_id_;
  std::vector<std::string> class_labels_;
  std::vector<double> probs_;
  std::size_t num_tokens_ = 0;
};

inline constexpr double kRowSumTolerance = 1e-6;

/// Throws ValidationError on a negative entry or a sum off by more than
/// kRowSumTolerance.
void validate_row(std::span<const double> row);

/// -sum p ln p in nats, 0 ln 0 = 0. The row is validated and normalized by
/// its own sum first.
double token_entropy(std::span<const double> row);

/// Mean token entropy over the sentence.
double sentence_entropy(const TokenProbMatrix& matrix);

struct EntropyStats {
  double mean = 0.0;
  double std_dev = 0.0;  // population
  std::map<std::string, double> per_sentence;
};

/// Population mean and standard deviation of a set of sentence entropies.
/// Reductions run in ascending-id order so the result does not depend on
/// input order or thread count.
EntropyStats entropy_stats(std::map<std::string, double> per_sentence);

EntropyStats pool_entropy_stats(std::span<const TokenProbMatrix> pool);

double r_score(double h, const EntropyStats& stats, double lambda);

struct StaticSelection {
  std::vector<std::string> chosen_ids;  // ascending R_Score, ties by id
  double lambda = 0.0;
  std::map<std::string, double> scores;
  EntropyStats stats;
};

StaticSelection select_static(std::span<const TokenProbMatrix> pool, std::size_t k_s,
                              double lambda);

/// Same selection from precomputed sentence entropies.
StaticSelection select_static_by_entropy(std::map<std::string, double> entropies,
                                         std::size_t k_s, double lambda);

struct ProbabilityFile {
  std::vector<std::string> class_labels;
  std::vector<TokenProbMatrix> matrices;
};

/// JSON-lines {"id", "labels", "probs"} with an optional leading
/// {"class_labels": [...]} header.
ProbabilityFile load_token_probs(const std::filesystem::path& path);

/// The matrices for `ids`, checked against the sentences' token counts.
/// Throws ValidationError if an id has no record or the row count differs.
std::vector<TokenProbMatrix> probs_for(const ProbabilityFile& file,
                                       std::span<const std::string> ids, const Dataset& dataset);

}  // namespace staykate
