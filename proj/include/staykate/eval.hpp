#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "staykate/corpus.hpp"
#include "staykate/llm.hpp"
#include "staykate/util.hpp"

namespace staykate {

struct TypedSurface {
  std::string entity_type;
  std::string surface;

  friend bool operator==(const TypedSurface&, const TypedSurface&) = default;
};

struct WrongTypePair {
  std::string predicted_type;
  std::string gold_type;
  std::string surface;

  friend bool operator==(const WrongTypePair&, const WrongTypePair&) = default;
};

// Per-sentence outcome. Conservation:
//   |tp| + |wrong_type| + |overpredicted| = |predicted|
//   |tp| + |wrong_type| + |oversighted|   = |gold|
struct MatchReport {
  std::string sentence_id;
  ParseStatus parse_status = ParseStatus::kOk;
  std::vector<TypedSurface> true_positives;
  std::vector<WrongTypePair> wrong_type;
  std::vector<TypedSurface> overpredicted;
  std::vector<TypedSurface> oversighted;

  std::size_t num_predicted() const {
    return true_positives.size() + wrong_type.size() + overpredicted.size();
  }
  std::size_t num_gold() const {
    return true_positives.size() + wrong_type.size() + oversighted.size();
  }
};

/// Case-folds ASCII letters, trims, and collapses whitespace runs to one space.
std::string normalize_surface(std::string_view surface);

/// Greedy three-pass multiset matching: exact (type, surface) pairs, then
/// same-surface pairs with differing types, then leftovers. Predictions are
/// visited by type name then list order; gold in span order.
MatchReport match_entities(const ExtractionResult& predicted, std::span<const EntitySpan> gold);

struct TypeMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double support = 0.0;
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
};

struct ErrorStats {
  double predictions = 0.0;
  double gold = 0.0;
  double overpredicted = 0.0;
  double oversight = 0.0;
  double wrong_type = 0.0;
  double overpredicted_rate = 0.0;  // / predictions
  double wrong_type_rate = 0.0;     // / predictions
  double oversight_rate = 0.0;      // / gold
};

struct PoolMetrics {
  std::optional<std::uint64_t> seed;
  double sentences = 0.0;
  double parse_failures = 0.0;
  std::map<std::string, TypeMetrics> per_type;
  TypeMetrics micro;
  double macro_f1 = 0.0;  // over types with support or predictions
  ErrorStats errors;
  // Over/wrong by predicted type, oversight by gold type.
  std::map<std::string, ErrorStats> errors_by_type;
  // "<predicted> -> <gold>" counts.
  std::map<std::string, double> confusions;
};

struct EvalReport {
  std::vector<std::string> entity_types;
  PoolMetrics metrics;              // means across runs when aggregated
  std::vector<PoolMetrics> runs;    // per pool; empty for a single scoring
};

/// F1 with 0/0 := 0 at every step.
TypeMetrics metrics_from_counts(double tp, double fp, double fn);

EvalReport f1_scores(std::span<const MatchReport> reports, const LabelScheme& scheme);

/// Arithmetic mean of every metric across pools; per-pool values kept in
/// `runs`. Throws ValidationError on mismatched entity types.
EvalReport aggregate_runs(std::span<const EvalReport> pools);

OrderedJson to_json(const EvalReport& report);

/// Aligned text table: one row per entity type, then micro avg.
std::string render_table(const EvalReport& report);

/// Error-taxonomy table per entity type.
std::string render_error_table(const EvalReport& report);

}  // namespace staykate
