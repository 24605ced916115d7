#include "staykate/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <omp.h>

#include "staykate/errors.hpp"
#include "staykate/rng.hpp"

namespace staykate {

namespace {

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::kZeroShot, "zero_shot"},
    {Method::kRandom, "random"},
    {Method::kRepresentative, "representative"},
    {Method::kKate, "kate"},
    {Method::kRandomPlusKate, "random_plus_kate"},
    {Method::kStaykate, "staykate"},
};

bool needs_probabilities(Method m) {
  return m == Method::kRepresentative || m == Method::kStaykate;
}

bool needs_embeddings(Method m) {
  return m == Method::kKate || m == Method::kRandomPlusKate || m == Method::kStaykate;
}

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& [m, name] : kMethodNames)
    if (m == method) return name;
  return "unknown";
}

Method method_from(std::string_view name) {
  for (const auto& [m, n] : kMethodNames)
    if (n == name) return m;
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

KAllocation allocate_k(int k) {
  if (k < 0) throw ValidationError("k must be non-negative, got " + std::to_string(k));
  switch (k) {
    case 0: return {0, 0};
    case 2: return {1, 1};
    case 6: return {2, 4};
    case 8: return {2, 6};
    default: {
      const auto total = static_cast<std::size_t>(k);
      const std::size_t k_s = std::min<std::size_t>(2, total / 2);
      return {k_s, total - k_s};
    }
  }
}

std::vector<std::string> random_select(std::span<const std::string> pool, std::size_t k,
                                       std::uint64_t seed) {
  if (k > pool.size())
    throw ValidationError("random_select: k = " + std::to_string(k) + " exceeds pool of " +
                          std::to_string(pool.size()));
  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(k);
  for (auto i : rng.sample_indices(pool.size(), k)) out.push_back(pool[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::from_json(const Json& j, const std::filesystem::path& base) {
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() ? (base / path).lexically_normal() : path;
  };
  ExperimentConfig c;
  try {
    c.manifest = resolve(j.at("manifest").get<std::string>());
    c.domain = j.at("domain").get<std::string>();
    if (j.contains("article")) c.article = j["article"].get<std::string>();
    c.method = method_from(j.at("method").get<std::string>());
    c.k = j.value("k", 0);
    c.lambda = j.value("lambda", 0.0);
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.labeled_size = j.at("labeled_size").get<std::size_t>();
    c.model_name = j.value("model", c.model_name);
    c.temperature = j.value("temperature", 0.0);
    c.endpoint = j.value("endpoint", c.endpoint);
    if (j.contains("probabilities"))
      c.probabilities = resolve(j["probabilities"].get<std::string>()).string();
    if (j.contains("embeddings")) c.embeddings = resolve(j["embeddings"].get<std::string>());
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.allow_any_k = j.value("allow_any_k", false);
    c.test_split = j.value("test_split", c.test_split);
    if (j.contains("test_subsample") && !j["test_subsample"].is_null())
      c.test_subsample = j["test_subsample"].get<std::size_t>();
    c.test_subsample_seed = j.value("test_subsample_seed", std::uint64_t{0});
    c.parallel = j.value("parallel", 1);
    c.max_concurrent_requests = j.value("max_concurrent_requests", 4);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void ExperimentConfig::validate() const {
  if (trim(domain).empty()) throw ValidationError("config: domain must not be empty");
  if (k < 0) throw ValidationError("config: k must be non-negative");
  if (!allow_any_k && k != 0 && k != 2 && k != 6 && k != 8)
    throw ValidationError("config: k = " + std::to_string(k) +
                          " is outside {0, 2, 6, 8}; set allow_any_k to override");
  if (method == Method::kZeroShot && k != 0)
    throw ValidationError("config: zero_shot takes k = 0");
  if (method != Method::kZeroShot && k == 0)
    throw ValidationError("config: method " + std::string(to_string(method)) + " needs k > 0");
  if (!(lambda >= 0.0)) throw ValidationError("config: lambda must be >= 0");
  if (seeds.empty()) throw ValidationError("config: at least one pool seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ValidationError("config: duplicate pool seeds");
  if (needs_probabilities(method) && !probabilities)
    throw ValidationError("config: method " + std::string(to_string(method)) +
                          " requires a probabilities file");
  if (needs_embeddings(method) && !embeddings)
    throw ValidationError("config: method " + std::string(to_string(method)) +
                          " requires an embeddings file");
  if (embedding_dim == 0) throw ValidationError("config: embedding_dim must be positive");
  if (parallel < 1) throw ValidationError("config: parallel must be >= 1");
  if (max_concurrent_requests < 1)
    throw ValidationError("config: max_concurrent_requests must be >= 1");
  if (article && *article != "a" && *article != "an")
    throw ValidationError("config: article must be \"a\" or \"an\"");
}

std::filesystem::path ExperimentConfig::probabilities_for(std::uint64_t seed) const {
  if (!probabilities) throw ValidationError("config: no probabilities file");
  std::string p = *probabilities;
  const std::string token = "{seed}";
  for (auto pos = p.find(token); pos != std::string::npos; pos = p.find(token))
    p.replace(pos, token.size(), std::to_string(seed));
  return p;
}

OrderedJson ExperimentConfig::summary() const {
  const auto alloc = method == Method::kStaykate || method == Method::kRandomPlusKate
                         ? allocate_k(k)
                         : KAllocation{};
  OrderedJson j{{"method", to_string(method)},
                {"k", k},
                {"lambda", lambda},
                {"seeds", seeds},
                {"labeled_size", labeled_size},
                {"model", model_name},
                {"temperature", temperature},
                {"domain", domain},
                {"test_split", test_split}};
  if (method == Method::kStaykate || method == Method::kRandomPlusKate) {
    j["k_s"] = alloc.k_s;
    j["k_d"] = alloc.k_d;
  }
  if (test_subsample) {
    j["test_subsample"] = *test_subsample;
    j["test_subsample_seed"] = test_subsample_seed;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Experiment

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  dataset_ = load_dataset(config_.manifest);
  if (needs_embeddings(config_.method))
    embeddings_ = EmbeddingStore::load(*config_.embeddings, config_.embedding_dim);
  system_role_ = build_system_role(config_.domain, config_.article);
  instructions_ = build_instructions(dataset_.scheme);

  const auto& tests = dataset_.split(config_.test_split);
  std::vector<std::string> all;
  for (const auto& s : tests) all.push_back(s.id);
  if (config_.test_subsample && *config_.test_subsample < all.size()) {
    Rng rng(derive_seed(config_.test_subsample_seed, Stream::kTestSubsample));
    auto picked = rng.sample_indices(all.size(), *config_.test_subsample);
    std::sort(picked.begin(), picked.end());
    for (auto i : picked) test_ids_.push_back(all[i]);
  } else {
    test_ids_ = std::move(all);
  }
}

KAllocation Experiment::allocation() const {
  switch (config_.method) {
    case Method::kZeroShot: return {0, 0};
    case Method::kRandom:
    case Method::kRepresentative: return {static_cast<std::size_t>(config_.k), 0};
    case Method::kKate: return {0, static_cast<std::size_t>(config_.k)};
    case Method::kRandomPlusKate:
    case Method::kStaykate: return allocate_k(config_.k);
  }
  return {};
}

PoolSplit Experiment::split(std::uint64_t seed) const {
  auto split = split_pools(dataset_.train, config_.labeled_size, seed);
  split.test_ids = test_ids_;
  return split;
}

PromptBundle Experiment::make_prompt(const Sentence& test,
                                     const std::vector<Demonstration>& static_demos,
                                     std::vector<Demonstration> dynamic_demos,
                                     KAllocation alloc) const {
  return assemble_prompt(static_demos, std::move(dynamic_demos), test, system_role_,
                         instructions_, dataset_.scheme, alloc.k_s, alloc.k_d);
}

PoolPlan Experiment::plan(std::uint64_t seed) const {
  PoolPlan plan;
  plan.seed = seed;
  plan.split = split(seed);
  plan.allocation = allocation();
  const auto& [k_s, k_d] = plan.allocation;
  const auto method = config_.method;

  const bool static_from_labeled = method == Method::kRandom;
  const auto& static_pool = static_from_labeled ? plan.split.labeled_ids : plan.split.unlabeled_ids;
  if (k_s > static_pool.size())
    throw ValidationError("pool too small: k_s = " + std::to_string(k_s) + " but the " +
                          (static_from_labeled ? "labeled" : "unlabeled") + " pool has " +
                          std::to_string(static_pool.size()) + " sentences");
  if (k_d > plan.split.labeled_ids.size())
    throw ValidationError("pool too small: k_d = " + std::to_string(k_d) +
                          " but the labeled pool has " +
                          std::to_string(plan.split.labeled_ids.size()) + " sentences");

  std::vector<double> static_keys;
  switch (method) {
    case Method::kRandom:
      plan.static_ids =
          random_select(plan.split.labeled_ids, k_s, derive_seed(seed, Stream::kRandomSelect));
      break;
    case Method::kRandomPlusKate:
      plan.static_ids = random_select(plan.split.unlabeled_ids, k_s,
                                      derive_seed(seed, Stream::kRandomStatic));
      break;
    case Method::kRepresentative:
    case Method::kStaykate: {
      const auto file = load_token_probs(config_.probabilities_for(seed));
      // Selection sees only model probabilities, never the pool's gold tags.
      const auto pool = probs_for(file, plan.split.unlabeled_ids, dataset_);
      plan.static_selection = select_static(pool, k_s, config_.lambda);
      plan.static_ids = plan.static_selection->chosen_ids;
      for (const auto& id : plan.static_ids)
        static_keys.push_back(plan.static_selection->scores.at(id));
      break;
    }
    default:
      break;
  }
  static_keys.resize(plan.static_ids.size(), 0.0);

  std::vector<Demonstration> static_demos;
  const auto annotated = reveal_gold(dataset_, plan.static_ids);
  for (std::size_t i = 0; i < annotated.size(); ++i)
    static_demos.push_back(make_demonstration(annotated[i], Origin::kStatic, static_keys[i]));

  std::optional<ExhaustiveIndex> index;
  if (k_d > 0) index = embeddings_->index_for(plan.split.labeled_ids);

  plan.prompts.resize(test_ids_.size());
  std::vector<std::vector<Neighbor>> neighbors(test_ids_.size());
  parallel_for(test_ids_.size(), config_.parallel, [&](std::size_t i) {
    const auto& test = dataset_.find(test_ids_[i]);
    std::vector<Demonstration> dynamic;
    if (index) {
      neighbors[i] = knn_retrieve(*index, embeddings_->vector(test.id), k_d);
      for (const auto& n : neighbors[i])
        dynamic.push_back(make_demonstration(dataset_.find(n.id), Origin::kDynamic, n.similarity));
    }
    plan.prompts[i] = make_prompt(test.without_tags(), static_demos, std::move(dynamic),
                                  plan.allocation);
  });
  if (index) {
    for (std::size_t i = 0; i < test_ids_.size(); ++i)
      plan.neighbors.emplace(test_ids_[i], std::move(neighbors[i]));
  }
  check_pool_discipline(plan, method);
  return plan;
}

void check_pool_discipline(const PoolPlan& plan, Method method) {
  const std::set<std::string> labeled(plan.split.labeled_ids.begin(), plan.split.labeled_ids.end());
  const std::set<std::string> unlabeled(plan.split.unlabeled_ids.begin(),
                                        plan.split.unlabeled_ids.end());
  const bool static_unlabeled = method == Method::kStaykate ||
                                method == Method::kRandomPlusKate ||
                                method == Method::kRepresentative;
  for (const auto& prompt : plan.prompts) {
    std::size_t statics = 0;
    for (const auto& d : prompt.demonstrations) {
      if (d.origin == Origin::kStatic) {
        ++statics;
        if (static_unlabeled && (labeled.count(d.sentence_id) || !unlabeled.count(d.sentence_id)))
          throw std::logic_error("pool discipline: static pick " + d.sentence_id +
                                 " is not from the unlabeled pool");
        if (method == Method::kRandom && !labeled.count(d.sentence_id))
          throw std::logic_error("pool discipline: random pick " + d.sentence_id +
                                 " is not from the labeled pool");
      } else if (!labeled.count(d.sentence_id)) {
        throw std::logic_error("pool discipline: dynamic pick " + d.sentence_id +
                               " is not from the labeled pool");
      }
    }
    if (statics != plan.static_ids.size())
      throw std::logic_error("pool discipline: static picks differ across test sentences");
    for (std::size_t i = 0; i < statics; ++i) {
      if (prompt.demonstrations[i].sentence_id != plan.static_ids[i])
        throw std::logic_error("pool discipline: static picks differ across test sentences");
    }
  }
}

SentenceArtifact Experiment::execute(const PromptBundle& prompt, ChatClient& client) const {
  auto request = ChatRequest::make(config_.model_name, prompt.system_role, prompt.user_message(),
                                   config_.temperature);
  const auto response = client.complete(request);
  SentenceArtifact a;
  a.test_id = prompt.test_id;
  for (const auto& d : prompt.demonstrations)
    (d.origin == Origin::kStatic ? a.static_ids : a.dynamic_ids).push_back(d.sentence_id);
  a.prompt_digest = prompt.digest();
  a.request_key = request.request_key;
  a.extraction = parse_extraction(response, dataset_.scheme, prompt.test_id);
  return a;
}

namespace {

OrderedJson fingerprint(const ExperimentConfig& config, TransportMode mode) {
  return OrderedJson{{"compiler", __VERSION__},
                     {"cplusplus", __cplusplus},
                     {"openmp_max_threads", omp_get_max_threads()},
                     {"hardware_threads", std::thread::hardware_concurrency()},
                     {"transport", mode == TransportMode::kLive ? "live" : "replay"},
                     {"config_digest", sha256_hex(config.summary().dump())}};
}

}  // namespace

RunArtifacts Experiment::run(ChatClient& client) const {
  RunArtifacts out;
  out.config_summary = config_.summary();
  out.config_summary["dataset"] = dataset_.name;
  out.config_summary["test_sentences"] = test_ids_.size();
  std::vector<EvalReport> pool_reports;
  for (const auto seed : config_.seeds) {
    const auto plan = this->plan(seed);
    PoolRun pool;
    pool.seed = seed;
    pool.split = plan.split;
    pool.sentences.resize(plan.prompts.size());
    parallel_for(plan.prompts.size(), config_.parallel,
                 [&](std::size_t i) { pool.sentences[i] = execute(plan.prompts[i], client); });

    std::vector<MatchReport> matches;
    matches.reserve(pool.sentences.size());
    for (const auto& s : pool.sentences) {
      const auto gold = spans_from_bio(dataset_.find(s.test_id));
      matches.push_back(match_entities(s.extraction, gold));
    }
    pool.report = f1_scores(matches, dataset_.scheme);
    pool.report.metrics.seed = seed;
    pool_reports.push_back(pool.report);
    out.pools.push_back(std::move(pool));
  }
  out.report = aggregate_runs(pool_reports);
  out.fingerprint = fingerprint(config_, client.mode());
  return out;
}

std::string Experiment::pseudo_label(std::span<const Sentence> sentences,
                                     ChatClient& client) const {
  if (config_.method != Method::kRandom)
    throw ValidationError("pseudo-label requires method = random");
  const auto seed = config_.seeds.front();
  const auto pool = split(seed);
  const auto k = static_cast<std::size_t>(config_.k);
  const auto ids = random_select(pool.labeled_ids, k, derive_seed(seed, Stream::kRandomSelect));
  std::vector<Demonstration> demos;
  for (const auto& s : reveal_gold(dataset_, ids))
    demos.push_back(make_demonstration(s, Origin::kStatic, 0.0));

  std::vector<SentenceArtifact> results(sentences.size());
  parallel_for(sentences.size(), config_.parallel, [&](std::size_t i) {
    const auto prompt = make_prompt(sentences[i].without_tags(), demos, {}, {k, 0});
    results[i] = execute(prompt, client);
  });

  OrderedJson header{{"dataset", dataset_.name},     {"model", config_.model_name},
                     {"method", "random"},           {"k", config_.k},
                     {"seed", seed},                 {"demonstrations", ids},
                     {"sentences", sentences.size()}};
  std::string out = header.dump() + "\n";
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    std::vector<std::string> tokens;
    for (const auto& t : sentences[i].tokens) tokens.push_back(t.text);
    OrderedJson entities = OrderedJson::object();
    for (const auto& type : dataset_.scheme.entity_types()) {
      auto it = results[i].extraction.predicted.find(type);
      entities[type] = it == results[i].extraction.predicted.end() ? std::vector<std::string>{}
                                                                   : it->second;
    }
    OrderedJson line{{"id", sentences[i].id},
                     {"tokens", tokens},
                     {"entities", std::move(entities)},
                     {"parse_status", to_string(results[i].extraction.parse_status)}};
    out += line.dump() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Artifacts and reports

std::string RunArtifacts::report_json() const {
  OrderedJson j{{"config", config_summary}, {"report", to_json(report)}};
  return j.dump(2) + "\n";
}

std::string RunArtifacts::artifacts_jsonl() const {
  std::string out;
  for (const auto& pool : pools) {
    for (const auto& s : pool.sentences) {
      OrderedJson entities = OrderedJson::object();
      for (const auto& [type, list] : s.extraction.predicted) entities[type] = list;
      OrderedJson line{{"seed", pool.seed},
                       {"id", s.test_id},
                       {"static_ids", s.static_ids},
                       {"dynamic_ids", s.dynamic_ids},
                       {"prompt_digest", s.prompt_digest},
                       {"request_key", s.request_key},
                       {"entities", std::move(entities)},
                       {"parse_status", to_string(s.extraction.parse_status)},
                       {"warnings", s.extraction.warnings}};
      out += line.dump() + "\n";
    }
  }
  return out;
}

std::string RunArtifacts::digest() const { return sha256_hex(artifacts_jsonl()); }

void write_run(const RunArtifacts& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "report.json", run.report_json());
  write_text_file(dir / "report.txt", render_table(run.report));
  write_text_file(dir / "errors.txt", render_error_table(run.report));
  write_text_file(dir / "artifacts.jsonl", run.artifacts_jsonl());
  OrderedJson pools = OrderedJson::array();
  for (const auto& p : run.pools)
    pools.push_back({{"seed", p.seed},
                     {"labeled_ids", p.split.labeled_ids},
                     {"unlabeled_ids", p.split.unlabeled_ids},
                     {"test_ids", p.split.test_ids}});
  OrderedJson meta{{"fingerprint", run.fingerprint},
                   {"artifacts_digest", run.digest()},
                   {"pools", std::move(pools)}};
  write_text_file(dir / "run_meta.json", meta.dump(2) + "\n");
}

OrderedJson prompts_to_json(std::span<const PoolPlan> plans) {
  OrderedJson out = OrderedJson::array();
  for (const auto& plan : plans) {
    OrderedJson prompts = OrderedJson::array();
    for (const auto& p : plan.prompts) prompts.push_back(p.to_json());
    out.push_back({{"seed", plan.seed}, {"static_ids", plan.static_ids}, {"prompts", prompts}});
  }
  return out;
}

EvalReport score_predictions(const Dataset& dataset, const std::filesystem::path& predictions) {
  std::map<std::optional<std::uint64_t>, std::vector<MatchReport>> by_seed;
  for_each_json_line(predictions, [&](const Json& rec, std::size_t line) {
    if (!rec.contains("id")) return;  // header
    try {
      ExtractionResult r;
      r.sentence_id = rec.at("id").get<std::string>();
      r.parse_status = rec.contains("parse_status")
                           ? parse_status_from(rec["parse_status"].get<std::string>())
                           : ParseStatus::kOk;
      for (const auto& [type, list] : rec.at("entities").items()) {
        if (!dataset.scheme.contains(type))
          throw ValidationError("entity type outside scheme: " + type);
        auto surfaces = list.get<std::vector<std::string>>();
        if (!surfaces.empty()) r.predicted.emplace(type, std::move(surfaces));
      }
      std::optional<std::uint64_t> seed;
      if (rec.contains("seed")) seed = rec["seed"].get<std::uint64_t>();
      const auto gold = spans_from_bio(dataset.find(r.sentence_id));
      by_seed[seed].push_back(match_entities(r, gold));
    } catch (const Json::exception& e) {
      throw ValidationError(predictions.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  if (by_seed.empty()) throw ValidationError(predictions.string() + ": no prediction records");
  std::vector<EvalReport> reports;
  for (const auto& [seed, matches] : by_seed) {
    auto r = f1_scores(matches, dataset.scheme);
    r.metrics.seed = seed;
    reports.push_back(std::move(r));
  }
  if (reports.size() == 1 && !reports.front().metrics.seed) return reports.front();
  return aggregate_runs(reports);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace staykate
