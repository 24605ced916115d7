// Command-line front end: pool splitting, example selection, prompt
// building, experiment runs (live or replayed), scoring and pseudo-labels.

#include <cstdio>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "staykate/errors.hpp"
#include "staykate/pipeline.hpp"

namespace sk = staykate;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitCacheMiss = 3;

struct GlobalOptions {
  std::string config;
  std::string cache;
  bool live = false;
  bool replay = false;
  std::string report_dir;
  std::string dump_prompts;
  std::string endpoint;
};

void emit(const std::string& content, const std::string& dir, const std::string& name) {
  if (dir.empty()) {
    std::cout << content;
  } else {
    sk::write_text_file(std::filesystem::path(dir) / name, content);
    std::cerr << "wrote " << (std::filesystem::path(dir) / name).string() << "\n";
  }
}

sk::Experiment load_experiment(const GlobalOptions& g) {
  if (g.config.empty()) throw sk::ValidationError("--config is required");
  return sk::Experiment(sk::ExperimentConfig::load(g.config));
}

sk::Dataset load_dataset_for(const GlobalOptions& g, const std::string& manifest) {
  if (!manifest.empty()) return sk::load_dataset(manifest);
  if (g.config.empty()) throw sk::ValidationError("--manifest or --config is required");
  return sk::load_dataset(sk::ExperimentConfig::load(g.config).manifest);
}

// Owns the cache, optional live transport, and the client built on them.
struct ClientBundle {
  std::unique_ptr<sk::ResponseCache> cache;
  std::unique_ptr<sk::HttpChatTransport> transport;
  std::unique_ptr<sk::ChatClient> client;
};

ClientBundle make_client(const GlobalOptions& g, const sk::ExperimentConfig& config) {
  if (g.live == g.replay) throw sk::ValidationError("choose exactly one of --live or --replay");
  if (g.cache.empty()) throw sk::ValidationError("--cache is required");
  ClientBundle b;
  b.cache = std::make_unique<sk::ResponseCache>(g.cache);
  sk::ClientOptions options;
  options.max_concurrent_requests = config.max_concurrent_requests;
  if (g.live) {
    b.transport = sk::HttpChatTransport::from_environment(g.endpoint.empty() ? config.endpoint
                                                                            : g.endpoint);
    b.client = std::make_unique<sk::ChatClient>(*b.cache, sk::TransportMode::kLive,
                                                b.transport.get(), options);
  } else {
    b.client = std::make_unique<sk::ChatClient>(*b.cache, sk::TransportMode::kReplay, nullptr,
                                                options);
  }
  return b;
}

std::vector<sk::PoolPlan> plan_all(const sk::Experiment& exp) {
  std::vector<sk::PoolPlan> plans;
  for (auto seed : exp.config().seeds) plans.push_back(exp.plan(seed));
  return plans;
}

void maybe_dump_prompts(const GlobalOptions& g, const std::vector<sk::PoolPlan>& plans) {
  if (g.dump_prompts.empty()) return;
  sk::write_text_file(g.dump_prompts, sk::prompts_to_json(plans).dump(2) + "\n");
  std::cerr << "wrote " << g.dump_prompts << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-context example selection and evaluation for scientific NER"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--cache", g.cache, "Response cache (JSON-lines)");
  auto* live = app.add_flag("--live", g.live, "Call the chat endpoint for uncached requests");
  auto* replay = app.add_flag("--replay", g.replay, "Answer only from the cache");
  live->excludes(replay);
  app.add_option("--report-dir", g.report_dir, "Directory for reports and artifacts");
  app.add_option("--dump-prompts", g.dump_prompts, "Write rendered prompts to this JSON file");
  app.add_option("--endpoint", g.endpoint, "Chat-completions URL (overrides the config)");

  auto* split_cmd = app.add_subcommand("split", "Split training data into labeled/unlabeled pools");
  auto* static_cmd = app.add_subcommand("select-static", "Representativeness-based static picks");
  auto* dynamic_cmd = app.add_subcommand("select-dynamic", "Nearest labeled neighbors per test input");
  auto* prompts_cmd = app.add_subcommand("build-prompts", "Render every prompt without calling the model");
  auto* run_cmd = app.add_subcommand("run", "Run the experiment and evaluate");

  std::string manifest;
  std::string predictions;
  auto* score_cmd = app.add_subcommand("score", "Score a predictions file against gold");
  score_cmd->add_option("--predictions", predictions, "Predictions JSON-lines")->required();
  score_cmd->add_option("--manifest", manifest, "Dataset manifest (default: from --config)");
  auto* errors_cmd = app.add_subcommand("errors", "Error taxonomy for a predictions file");
  errors_cmd->add_option("--predictions", predictions, "Predictions JSON-lines")->required();
  errors_cmd->add_option("--manifest", manifest, "Dataset manifest (default: from --config)");

  std::string pl_split = "dev";
  std::string pl_output;
  auto* pseudo_cmd = app.add_subcommand("pseudo-label", "Label a split with random k-shot prompts");
  pseudo_cmd->add_option("--split", pl_split, "Split to label")->capture_default_str();
  pseudo_cmd->add_option("--output", pl_output, "Output file (default: stdout)");

  std::string stats_split = "train";
  auto* stats_cmd = app.add_subcommand("corpus-stats", "Non-entity token ratio of a split");
  stats_cmd->add_option("--split", stats_split, "Split to measure")->capture_default_str();
  stats_cmd->add_option("--manifest", manifest, "Dataset manifest (default: from --config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (split_cmd->parsed()) {
      const auto exp = load_experiment(g);
      sk::OrderedJson out = sk::OrderedJson::array();
      for (auto seed : exp.config().seeds) {
        const auto s = exp.split(seed);
        out.push_back({{"seed", seed},
                       {"labeled_ids", s.labeled_ids},
                       {"unlabeled_ids", s.unlabeled_ids},
                       {"test_ids", s.test_ids}});
      }
      emit(out.dump(2) + "\n", g.report_dir, "pools.json");
    } else if (static_cmd->parsed()) {
      const auto exp = load_experiment(g);
      sk::OrderedJson out = sk::OrderedJson::array();
      for (const auto& plan : plan_all(exp)) {
        sk::OrderedJson entry{{"seed", plan.seed}, {"chosen_ids", plan.static_ids}};
        if (plan.static_selection) {
          const auto& sel = *plan.static_selection;
          entry["lambda"] = sel.lambda;
          entry["entropy_mean"] = sel.stats.mean;
          entry["entropy_std_dev"] = sel.stats.std_dev;
          sk::OrderedJson chosen = sk::OrderedJson::array();
          for (const auto& id : sel.chosen_ids)
            chosen.push_back({{"id", id},
                              {"entropy", sel.stats.per_sentence.at(id)},
                              {"r_score", sel.scores.at(id)}});
          entry["chosen"] = std::move(chosen);
        }
        out.push_back(std::move(entry));
      }
      emit(out.dump(2) + "\n", g.report_dir, "static_selection.json");
    } else if (dynamic_cmd->parsed()) {
      const auto exp = load_experiment(g);
      sk::OrderedJson out = sk::OrderedJson::array();
      for (const auto& plan : plan_all(exp)) {
        sk::OrderedJson per_test = sk::OrderedJson::object();
        for (const auto& id : exp.test_ids()) {
          sk::OrderedJson list = sk::OrderedJson::array();
          if (auto it = plan.neighbors.find(id); it != plan.neighbors.end())
            for (const auto& n : it->second) list.push_back({{"id", n.id}, {"similarity", n.similarity}});
          per_test[id] = std::move(list);
        }
        out.push_back({{"seed", plan.seed}, {"neighbors", std::move(per_test)}});
      }
      emit(out.dump(2) + "\n", g.report_dir, "dynamic_selection.json");
    } else if (prompts_cmd->parsed()) {
      const auto exp = load_experiment(g);
      const auto plans = plan_all(exp);
      if (g.dump_prompts.empty())
        std::cout << sk::prompts_to_json(plans).dump(2) << "\n";
      else
        maybe_dump_prompts(g, plans);
    } else if (run_cmd->parsed()) {
      const auto exp = load_experiment(g);
      auto client = make_client(g, exp.config());
      maybe_dump_prompts(g, g.dump_prompts.empty() ? std::vector<sk::PoolPlan>{} : plan_all(exp));
      const auto run = exp.run(*client.client);
      if (!g.report_dir.empty()) {
        sk::write_run(run, g.report_dir);
        std::cerr << "wrote reports to " << g.report_dir << "\n";
      }
      std::cout << sk::render_table(run.report);
    } else if (score_cmd->parsed() || errors_cmd->parsed()) {
      const auto dataset = load_dataset_for(g, manifest);
      const auto report = sk::score_predictions(dataset, predictions);
      if (!g.report_dir.empty()) {
        sk::write_text_file(std::filesystem::path(g.report_dir) / "score.json",
                            sk::to_json(report).dump(2) + "\n");
      }
      std::cout << (score_cmd->parsed() ? sk::render_table(report)
                                        : sk::render_error_table(report));
    } else if (pseudo_cmd->parsed()) {
      const auto exp = load_experiment(g);
      auto client = make_client(g, exp.config());
      const auto& sentences = exp.dataset().split(pl_split);
      const auto content = exp.pseudo_label(sentences, *client.client);
      if (pl_output.empty()) std::cout << content;
      else sk::write_text_file(pl_output, content);
    } else if (stats_cmd->parsed()) {
      const auto dataset = load_dataset_for(g, manifest);
      const auto stats = sk::non_entity_ratio(dataset.split(stats_split));
      sk::OrderedJson out{{"dataset", dataset.name},
                          {"split", stats_split},
                          {"sentences", stats.sentences},
                          {"tokens", stats.tokens},
                          {"non_entity_tokens", stats.non_entity_tokens},
                          {"non_entity_ratio", stats.ratio},
                          {"avg_tokens", stats.avg_tokens},
                          {"avg_non_entity_tokens", stats.avg_non_entity_tokens}};
      std::cout << out.dump(2) << "\n";
    }
  } catch (const sk::CacheMissError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCacheMiss;
  } catch (const sk::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
