#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "staykate/corpus.hpp"
#include "staykate/dynamic_selection.hpp"
#include "staykate/eval.hpp"
#include "staykate/llm.hpp"
#include "staykate/prompt.hpp"
#include "staykate/static_selection.hpp"

namespace staykate {

enum class Method { kZeroShot, kRandom, kRepresentative, kKate, kRandomPlusKate, kStaykate };

std::string_view to_string(Method method);
Method method_from(std::string_view name);

struct KAllocation {
  std::size_t k_s = 0;
  std::size_t k_d = 0;

  friend bool operator==(const KAllocation&, const KAllocation&) = default;
};

/// Static/dynamic budget for the hybrid methods: 0->(0,0), 2->(1,1),
/// 6->(2,4), 8->(2,6); otherwise k_s = min(2, k/2), k_d = k - k_s.
KAllocation allocate_k(int k);

/// Uniform sample of k ids without replacement, in sampled order.
std::vector<std::string> random_select(std::span<const std::string> pool, std::size_t k,
                                       std::uint64_t seed);

struct ExperimentConfig {
  std::filesystem::path manifest;
  std::string domain;
  std::optional<std::string> article;
  Method method = Method::kZeroShot;
  int k = 0;
  double lambda = 0.0;
  std::vector<std::uint64_t> seeds;
  std::size_t labeled_size = 0;
  std::string model_name = "gpt-3.5-turbo-16k-0613";
  double temperature = 0.0;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  // Path, optionally containing "{seed}" for per-pool files.
  std::optional<std::string> probabilities;
  std::optional<std::filesystem::path> embeddings;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  bool allow_any_k = false;
  std::string test_split = "test";
  std::optional<std::size_t> test_subsample;
  std::uint64_t test_subsample_seed = 0;
  int parallel = 1;
  int max_concurrent_requests = 4;

  /// Relative paths resolve against `base_dir`.
  static ExperimentConfig from_json(const Json& json, const std::filesystem::path& base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Throws ValidationError on an inconsistent configuration.
  void validate() const;
  std::filesystem::path probabilities_for(std::uint64_t seed) const;
  /// Machine-independent summary (no paths) recorded in reports.
  OrderedJson summary() const;
};

/// Everything decided before the model is called, for one pool seed.
struct PoolPlan {
  std::uint64_t seed = 0;
  PoolSplit split;
  KAllocation allocation;
  std::optional<StaticSelection> static_selection;
  std::vector<std::string> static_ids;
  std::map<std::string, std::vector<Neighbor>> neighbors;  // by test id
  std::vector<PromptBundle> prompts;                       // test order
};

/// Static picks outside the labeled pool, dynamic picks inside it. Throws
/// std::logic_error on a violation.
void check_pool_discipline(const PoolPlan& plan, Method method);

struct SentenceArtifact {
  std::string test_id;
  std::vector<std::string> static_ids;
  std::vector<std::string> dynamic_ids;
  std::string prompt_digest;
  std::string request_key;
  ExtractionResult extraction;
};

struct PoolRun {
  std::uint64_t seed = 0;
  PoolSplit split;
  std::vector<SentenceArtifact> sentences;
  EvalReport report;
};

struct RunArtifacts {
  OrderedJson config_summary;
  std::vector<PoolRun> pools;
  EvalReport report;
  OrderedJson fingerprint;

  /// Pinned, byte-stable report: config summary plus the aggregated report.
  std::string report_json() const;
  /// One JSON line per (pool, test sentence).
  std::string artifacts_jsonl() const;
  std::string digest() const;
};

class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const Dataset& dataset() const noexcept { return dataset_; }
  KAllocation allocation() const;

  /// Test ids in corpus order, subsampled when configured.
  const std::vector<std::string>& test_ids() const noexcept { return test_ids_; }

  PoolSplit split(std::uint64_t seed) const;
  PoolPlan plan(std::uint64_t seed) const;
  RunArtifacts run(ChatClient& client) const;

  /// Labels `sentences` with k random demonstrations from the first seed's
  /// labeled pool. Returns the predictions file content: a header line then
  /// one {"id", "tokens", "entities", "parse_status"} line per sentence.
  std::string pseudo_label(std::span<const Sentence> sentences, ChatClient& client) const;

 private:
  PromptBundle make_prompt(const Sentence& test, const std::vector<Demonstration>& static_demos,
                           std::vector<Demonstration> dynamic_demos, KAllocation alloc) const;
  SentenceArtifact execute(const PromptBundle& prompt, ChatClient& client) const;

  ExperimentConfig config_;
  Dataset dataset_;
  std::optional<EmbeddingStore> embeddings_;
  std::vector<std::string> test_ids_;
  std::string system_role_;
  std::string instructions_;
};

/// Evaluates a predictions file (records with "id" and "entities", optional
/// "parse_status" and "seed") against dataset gold. Records carrying seeds
/// are scored per seed and aggregated.
EvalReport score_predictions(const Dataset& dataset, const std::filesystem::path& predictions);

/// Writes report.json, report.txt, errors.txt, artifacts.jsonl and
/// run_meta.json into `dir`.
void write_run(const RunArtifacts& run, const std::filesystem::path& dir);

OrderedJson prompts_to_json(std::span<const PoolPlan> plans);

/// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first
/// exception after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace staykate
