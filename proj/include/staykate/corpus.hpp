#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace staykate {

struct Token {
  std::string text;
  std::size_t index = 0;
};

struct Sentence {
  std::string id;
  std::vector<Token> tokens;
  std::optional<std::vector<std::string>> bio_tags;

  std::size_t size() const noexcept { return tokens.size(); }
  /// Tokens joined by single spaces; the surface form shown to the model.
  std::string text() const;
  /// Copy with the gold tags removed, for anything on the selection side.
  Sentence without_tags() const;
};

struct EntitySpan {
  std::string sentence_id;
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::string entity_type;
  std::string surface;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

class LabelScheme {
 public:
  LabelScheme() = default;

  /// Validates: non-empty, unique names, every definition non-empty.
  static LabelScheme create(std::vector<std::pair<std::string, std::string>> types);

  const std::vector<std::string>& entity_types() const noexcept { return types_; }
  const std::string& definition(const std::string& type) const;
  bool contains(const std::string& type) const;
  std::size_t size() const noexcept { return types_.size(); }

  friend bool operator==(const LabelScheme&, const LabelScheme&) = default;

 private:
  std::vector<std::string> types_;
  std::map<std::string, std::string> definitions_;
};

struct PoolSplit {
  std::vector<std::string> labeled_ids;
  std::vector<std::string> unlabeled_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

struct CorpusOptions {
  // Tag-type renames applied before validation, e.g. merging
  // "Material-descriptor" into "Property".
  std::map<std::string, std::string> type_map;
};

/// Parses "token<TAB>tag" lines with blank-line sentence breaks. Sentence ids
/// default to "<source>:<ordinal>". Orphan I- tags are promoted to B- and a
/// message is appended to `warnings` (when non-null) for each repair.
std::vector<Sentence> parse_corpus(std::istream& in, const std::string& source,
                                   const LabelScheme& scheme,
                                   std::vector<std::string>* warnings = nullptr,
                                   const CorpusOptions& options = {});

std::vector<Sentence> load_corpus(const std::filesystem::path& path, const LabelScheme& scheme,
                                  std::vector<std::string>* warnings = nullptr,
                                  const CorpusOptions& options = {});

std::vector<EntitySpan> spans_from_bio(const Sentence& sentence);

/// Inverse of spans_from_bio for a sentence of `length` tokens.
std::vector<std::string> bio_from_spans(std::span<const EntitySpan> spans, std::size_t length);

/// Uniform sample of `labeled_size` ids without replacement; the remainder
/// is the unlabeled pool. Both lists keep the input order.
PoolSplit split_pools(std::span<const Sentence> training, std::size_t labeled_size,
                      std::uint64_t seed);

struct NonEntityStats {
  double ratio = 0.0;
  double avg_tokens = 0.0;
  double avg_non_entity_tokens = 0.0;
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t non_entity_tokens = 0;
};

NonEntityStats non_entity_ratio(std::span<const Sentence> sentences);

// A dataset described by a manifest:
//   {"dataset": str, "scheme": [{"type", "definition"}],
//    "split": {"train"|"dev"|"test": [ids]},
//    "files": {"train": path, ...}        optional, default "<split>.tsv"
//    "type_map": {"from": "to"}}          optional
// The i-th id of a split names the i-th sentence of that split's file.
struct Dataset {
  std::string name;
  LabelScheme scheme;
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  std::vector<Sentence> test;
  std::vector<std::string> warnings;

  /// Sentence by id across all splits; throws ValidationError if unknown.
  const Sentence& find(const std::string& id) const;
  const std::vector<Sentence>& split(const std::string& name) const;

 private:
  friend Dataset load_dataset(const std::filesystem::path& manifest);
  // id -> (split ordinal, position); positions stay valid across copies.
  std::map<std::string, std::pair<int, std::size_t>> by_id_;
  void index();
};

Dataset load_dataset(const std::filesystem::path& manifest);

/// Gold-annotated copies of the given sentences: the simulated expert
/// annotation step for static picks taken from the unlabeled pool.
std::vector<Sentence> reveal_gold(const Dataset& dataset, std::span<const std::string> ids);

}  // namespace staykate
