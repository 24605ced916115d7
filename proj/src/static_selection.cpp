#include "staykate/static_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "staykate/corpus.hpp"
#include "staykate/errors.hpp"
#include "staykate/kernels.hpp"
#include "staykate/util.hpp"

namespace staykate {

namespace {

double row_sum(std::span<const double> row) {
  return std::accumulate(row.begin(), row.end(), 0.0);
}

}  // namespace

void validate_row(std::span<const double> row) {
  if (row.empty()) throw ValidationError("probability row is empty");
  for (double p : row) {
    if (!(p >= 0.0) || p > 1.0 + kRowSumTolerance)
      throw ValidationError("probability entry out of [0,1]: " + std::to_string(p));
  }
  const double sum = row_sum(row);
  if (std::abs(sum - 1.0) > kRowSumTolerance)
    throw ValidationError("probability row sums to " + std::to_string(sum));
}

TokenProbMatrix::TokenProbMatrix(std::string sentence_id, std::vector<std::string> class_labels,
                                 const std::vector<std::vector<double>>& rows)
    : sentence_id_(std::move(sentence_id)),
      class_labels_(std::move(class_labels)),
      num_tokens_(rows.size()) {
  if (class_labels_.empty()) throw ValidationError(sentence_id_ + ": no class labels");
  probs_.reserve(rows.size() * class_labels_.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != class_labels_.size())
      throw ValidationError(sentence_id_ + ": row " + std::to_string(i) + " has " +
                            std::to_string(row.size()) + " entries, expected " +
                            std::to_string(class_labels_.size()));
    try {
      validate_row(row);
    } catch (const ValidationError& e) {
      throw ValidationError(sentence_id_ + ": row " + std::to_string(i) + ": " + e.what());
    }
    const double sum = row_sum(row);
    for (double p : row) probs_.push_back(p / sum);
  }
}

double token_entropy(std::span<const double> row) {
  validate_row(row);
  const double sum = row_sum(row);
  double h = 0.0;
  for (double p : row) {
    const double q = p / sum;
    if (q > 0.0) h -= q * std::log(q);
  }
  // Rounding can leave a one-hot row at -0.0.
  return std::max(h, 0.0);
}

double sentence_entropy(const TokenProbMatrix& matrix) {
  if (matrix.num_tokens() == 0)
    throw ValidationError("sentence_entropy: empty matrix for " + matrix.sentence_id());
  double total = 0.0;
  for (std::size_t i = 0; i < matrix.num_tokens(); ++i) total += token_entropy(matrix.row(i));
  return total / static_cast<double>(matrix.num_tokens());
}

EntropyStats entropy_stats(std::map<std::string, double> per_sentence) {
  if (per_sentence.empty()) throw ValidationError("entropy stats over an empty pool");
  const auto n = static_cast<double>(per_sentence.size());
  double sum = 0.0;
  for (const auto& [id, h] : per_sentence) sum += h;
  const double mean = sum / n;
  double sq = 0.0;
  for (const auto& [id, h] : per_sentence) sq += (h - mean) * (h - mean);

  EntropyStats stats;
  stats.mean = mean;
  stats.std_dev = std::sqrt(sq / n);
  stats.per_sentence = std::move(per_sentence);
  return stats;
}

EntropyStats pool_entropy_stats(std::span<const TokenProbMatrix> pool) {
  if (pool.empty()) throw ValidationError("entropy stats over an empty pool");
  for (const auto& m : pool) {
    if (m.class_labels() != pool.front().class_labels())
      throw ValidationError("inconsistent class labels in pool at " + m.sentence_id());
  }
  std::vector<double> h(pool.size());
  kernels::sentence_entropies_omp(pool, h);

  std::map<std::string, double> per_sentence;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!per_sentence.emplace(pool[i].sentence_id(), h[i]).second)
      throw ValidationError("duplicate sentence id in pool: " + pool[i].sentence_id());
  }
  return entropy_stats(std::move(per_sentence));
}

double r_score(double h, const EntropyStats& stats, double lambda) {
  return std::abs(h - (stats.mean + lambda * stats.std_dev));
}

namespace {

StaticSelection select_from_stats(EntropyStats stats, std::size_t k_s, double lambda) {
  if (k_s > stats.per_sentence.size())
    throw ValidationError("k_s = " + std::to_string(k_s) + " exceeds pool of " +
                          std::to_string(stats.per_sentence.size()));
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");

  StaticSelection sel;
  sel.lambda = lambda;
  std::vector<std::pair<double, const std::string*>> ranked;
  ranked.reserve(stats.per_sentence.size());
  for (const auto& [id, h] : stats.per_sentence) {
    const double score = r_score(h, stats, lambda);
    sel.scores.emplace(id, score);
    ranked.emplace_back(score, &id);
  }
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k_s),
                    ranked.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first < b.first;
                      return *a.second < *b.second;
                    });
  for (std::size_t i = 0; i < k_s; ++i) sel.chosen_ids.push_back(*ranked[i].second);
  sel.stats = std::move(stats);
  return sel;
}

}  // namespace

StaticSelection select_static(std::span<const TokenProbMatrix> pool, std::size_t k_s,
                              double lambda) {
  if (k_s > pool.size())
    throw ValidationError("k_s = " + std::to_string(k_s) + " exceeds pool of " +
                          std::to_string(pool.size()));
  if (pool.empty()) return StaticSelection{{}, lambda, {}, {}};
  return select_from_stats(pool_entropy_stats(pool), k_s, lambda);
}

StaticSelection select_static_by_entropy(std::map<std::string, double> entropies,
                                         std::size_t k_s, double lambda) {
  if (k_s > entropies.size())
    throw ValidationError("k_s = " + std::to_string(k_s) + " exceeds pool of " +
                          std::to_string(entropies.size()));
  if (entropies.empty()) return StaticSelection{{}, lambda, {}, {}};
  return select_from_stats(entropy_stats(std::move(entropies)), k_s, lambda);
}

ProbabilityFile load_token_probs(const std::filesystem::path& path) {
  ProbabilityFile file;
  std::map<std::string, bool> seen;
  bool have_header = false;
  for_each_json_line(path, [&](const Json& rec, std::size_t line) {
    const auto where = path.string() + ":" + std::to_string(line);
    try {
      if (rec.contains("class_labels") && !rec.contains("id")) {
        if (!file.matrices.empty() || have_header)
          throw ValidationError(where + ": class_labels header must be the first record");
        file.class_labels = rec["class_labels"].get<std::vector<std::string>>();
        have_header = true;
        return;
      }
      auto id = rec.at("id").get<std::string>();
      auto labels = rec.at("labels").get<std::vector<std::string>>();
      auto rows = rec.at("probs").get<std::vector<std::vector<double>>>();
      if (file.class_labels.empty()) file.class_labels = labels;
      if (labels != file.class_labels)
        throw ValidationError(where + ": labels differ from the file's class labels");
      if (!seen.emplace(id, true).second)
        throw ValidationError(where + ": duplicate id " + id);
      file.matrices.emplace_back(std::move(id), std::move(labels), rows);
    } catch (const Json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      if (msg.rfind(where, 0) == 0) throw;
      throw ValidationError(where + ": " + msg);
    }
  });
  return file;
}

std::vector<TokenProbMatrix> probs_for(const ProbabilityFile& file,
                                       std::span<const std::string> ids, const Dataset& dataset) {
  std::map<std::string, const TokenProbMatrix*> by_id;
  for (const auto& m : file.matrices) by_id.emplace(m.sentence_id(), &m);
  std::vector<TokenProbMatrix> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("no probability record for sentence " + id);
    const auto& sentence = dataset.find(id);
    if (it->second->num_tokens() != sentence.size())
      throw ValidationError("probability record for " + id + " has " +
                            std::to_string(it->second->num_tokens()) + " rows, sentence has " +
                            std::to_string(sentence.size()) + " tokens");
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace staykate
