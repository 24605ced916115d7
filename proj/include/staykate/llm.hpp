#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <vector>

#include "staykate/corpus.hpp"
#include "staykate/prompt.hpp"

namespace staykate {

struct ChatRequest {
  std::string model_name;
  std::string system;
  std::string user;
  double temperature = 0.0;
  std::string request_key;

  /// Fills request_key from the other fields.
  static ChatRequest make(std::string model_name, std::string system, std::string user,
                          double temperature = 0.0);
};

/// SHA-256 of the JSON array [model, system, user, temperature].
std::string compute_request_key(const std::string& model_name, const std::string& system,
                                const std::string& user, double temperature);

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

enum class TransportKind { kLive, kReplay };

struct ChatResponse {
  std::string raw_text;
  Usage usage;
  TransportKind transport = TransportKind::kLive;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

/// Chat-completions over HTTP(S). Retries transport failures, 429 and 5xx
/// with exponential backoff; 401/403 fail immediately.
class HttpChatTransport final : public ChatTransport {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  /// `endpoint` is a full URL such as https://api.openai.com/v1/chat/completions.
  HttpChatTransport(std::string endpoint, std::string api_key, RetryPolicy retry = {},
                    Sleeper sleeper = {});

  /// Reads the credential from the API_KEY environment variable.
  static std::unique_ptr<HttpChatTransport> from_environment(std::string endpoint,
                                                             RetryPolicy retry = {});

  ChatResponse send(const ChatRequest& request) override;

 private:
  std::string base_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;
  RetryPolicy retry_;
  Sleeper sleeper_;
};

// Append-only JSON-lines store:
//   {"request_key", "model", "raw_text", "timestamp", "usage"}
// The first entry for a key wins on load.
class ResponseCache {
 public:
  /// In-memory only.
  ResponseCache() = default;
  /// Loads `path` if it exists; later record() calls append to it.
  explicit ResponseCache(std::filesystem::path path);

  std::optional<ChatResponse> find(const std::string& request_key) const;
  void record(const ChatRequest& request, const ChatResponse& response);
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, ChatResponse> entries_;
};

enum class TransportMode { kLive, kReplay };

struct ClientOptions {
  int max_concurrent_requests = 4;
  // Minimum spacing between live request starts, shared by all workers.
  std::chrono::milliseconds min_request_interval{0};
};

// Replay mode answers only from the cache and never touches `live`.
// Live mode answers cache hits from the cache and sends the rest, recording
// every live response before returning it.
class ChatClient {
 public:
  ChatClient(ResponseCache& cache, TransportMode mode, ChatTransport* live = nullptr,
             ClientOptions options = {});

  ChatResponse complete(const ChatRequest& request);
  TransportMode mode() const noexcept { return mode_; }

 private:
  void wait_for_slot();

  ResponseCache& cache_;
  TransportMode mode_;
  ChatTransport* live_;
  ClientOptions options_;
  std::counting_semaphore<> in_flight_;
  std::mutex pacing_mutex_;
  std::chrono::steady_clock::time_point next_start_{};
};

enum class ParseStatus { kOk, kRepaired, kFailed };

std::string_view to_string(ParseStatus status);
ParseStatus parse_status_from(std::string_view name);

struct ExtractionResult {
  std::string sentence_id;
  EntityMap predicted;  // scheme types only; empty lists omitted
  ParseStatus parse_status = ParseStatus::kFailed;
  std::vector<std::string> warnings;
};

/// Best-effort parse of the first JSON object in the response text. Total:
/// never throws on any input.
ExtractionResult parse_extraction(std::string_view raw_text, const LabelScheme& scheme,
                                  std::string sentence_id = {});

inline ExtractionResult parse_extraction(const ChatResponse& response, const LabelScheme& scheme,
                                         std::string sentence_id = {}) {
  return parse_extraction(response.raw_text, scheme, std::move(sentence_id));
}

/// The first balanced {...} block in `text` that parses as a JSON object.
std::optional<Json> find_json_object(std::string_view text);

}  // namespace staykate
