#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "staykate/errors.hpp"
#include "staykate/llm.hpp"
#include "staykate/util.hpp"

namespace staykate {

HttpChatTransport::HttpChatTransport(std::string endpoint, std::string api_key,
                                     RetryPolicy retry, Sleeper sleeper)
    : api_key_(std::move(api_key)), retry_(retry), sleeper_(std::move(sleeper)) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError("endpoint must be an absolute URL: " + endpoint);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  base_ = endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
}

std::unique_ptr<HttpChatTransport> HttpChatTransport::from_environment(std::string endpoint,
                                                                       RetryPolicy retry) {
  const char* key = std::getenv("API_KEY");
  if (!key || !*key) throw AuthenticationError("API_KEY is not set");
  return std::make_unique<HttpChatTransport>(std::move(endpoint), key, retry);
}

ChatResponse HttpChatTransport::send(const ChatRequest& request) {
  const OrderedJson payload{{"model", request.model_name},
                            {"messages",
                             {{{"role", "system"}, {"content", request.system}},
                              {{"role", "user"}, {"content", request.user}}}},
                            {"temperature", request.temperature}};
  const std::string body = payload.dump();
  httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

  auto backoff = retry_.initial_backoff;
  std::string last_error;
  bool rate_limited = false;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    httplib::Client client(base_);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);
    auto res = client.Post(path_, headers, body, "application/json");

    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      rate_limited = false;
    } else if (res->status == 401 || res->status == 403) {
      throw AuthenticationError("endpoint rejected credential (HTTP " +
                                std::to_string(res->status) + ")");
    } else if (res->status == 429) {
      last_error = "rate limited (HTTP 429)";
      rate_limited = true;
    } else if (res->status >= 500) {
      last_error = "server error (HTTP " + std::to_string(res->status) + ")";
      rate_limited = false;
    } else if (res->status != 200) {
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
    } else {
      try {
        const auto json = Json::parse(res->body);
        ChatResponse out;
        out.raw_text = json.at("choices").at(0).at("message").at("content").get<std::string>();
        if (json.contains("usage")) {
          out.usage.prompt_tokens = json["usage"].value("prompt_tokens", std::int64_t{0});
          out.usage.completion_tokens = json["usage"].value("completion_tokens", std::int64_t{0});
        }
        out.transport = TransportKind::kLive;
        return out;
      } catch (const Json::exception& e) {
        throw TransportError(std::string("malformed chat-completions response: ") + e.what());
      }
    }
    if (attempt < retry_.max_attempts) {
      sleeper_(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<std::int64_t>(static_cast<double>(backoff.count()) * retry_.multiplier));
    }
  }
  const auto msg = last_error + " after " + std::to_string(retry_.max_attempts) + " attempts";
  if (rate_limited) throw RateLimitError(msg);
  throw TransportError(msg);
}

}  // namespace staykate
