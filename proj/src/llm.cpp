#include "staykate/llm.hpp"

#include <cctype>
#include <ctime>
#include <fstream>
#include <thread>

#include "staykate/errors.hpp"
#include "staykate/util.hpp"

namespace staykate {

std::string compute_request_key(const std::string& model_name, const std::string& system,
                                const std::string& user, double temperature) {
  return sha256_hex(Json::array({model_name, system, user, temperature}).dump());
}

ChatRequest ChatRequest::make(std::string model_name, std::string system, std::string user,
                              double temperature) {
  ChatRequest r{std::move(model_name), std::move(system), std::move(user), temperature, {}};
  r.request_key = compute_request_key(r.model_name, r.system, r.user, r.temperature);
  return r;
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(*path_)) return;
  for_each_json_line(*path_, [&](const Json& rec, std::size_t line) {
    try {
      ChatResponse response;
      response.raw_text = rec.at("raw_text").get<std::string>();
      response.transport = TransportKind::kReplay;
      if (rec.contains("usage")) {
        response.usage.prompt_tokens = rec["usage"].value("prompt_tokens", std::int64_t{0});
        response.usage.completion_tokens =
            rec["usage"].value("completion_tokens", std::int64_t{0});
      }
      entries_.emplace(rec.at("request_key").get<std::string>(), std::move(response));
    } catch (const Json::exception& e) {
      throw ValidationError(path_->string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
}

std::optional<ChatResponse> ResponseCache::find(const std::string& request_key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(request_key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::record(const ChatRequest& request, const ChatResponse& response) {
  std::unique_lock lock(mutex_);
  if (!entries_.emplace(request.request_key, response).second) return;
  entries_[request.request_key].transport = TransportKind::kReplay;
  if (!path_) return;
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  std::ofstream out(*path_, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot append to cache " + path_->string());
  OrderedJson line{{"request_key", request.request_key},
                   {"model", request.model_name},
                   {"raw_text", response.raw_text},
                   {"timestamp", utc_timestamp()},
                   {"usage",
                    {{"prompt_tokens", response.usage.prompt_tokens},
                     {"completion_tokens", response.usage.completion_tokens}}}};
  out << line.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

ChatClient::ChatClient(ResponseCache& cache, TransportMode mode, ChatTransport* live,
                       ClientOptions options)
    : cache_(cache),
      mode_(mode),
      live_(live),
      options_(options),
      in_flight_(std::max(1, options.max_concurrent_requests)) {
  if (mode_ == TransportMode::kLive && !live_)
    throw ValidationError("live mode requires a transport");
}

void ChatClient::wait_for_slot() {
  if (options_.min_request_interval.count() <= 0) return;
  std::chrono::steady_clock::time_point start;
  {
    std::lock_guard lock(pacing_mutex_);
    start = std::max(std::chrono::steady_clock::now(), next_start_);
    next_start_ = start + options_.min_request_interval;
  }
  std::this_thread::sleep_until(start);
}

ChatResponse ChatClient::complete(const ChatRequest& request) {
  if (auto hit = cache_.find(request.request_key)) return *hit;
  if (mode_ == TransportMode::kReplay) throw CacheMissError(request.request_key);

  in_flight_.acquire();
  ChatResponse response;
  try {
    wait_for_slot();
    response = live_->send(request);
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();
  response.transport = TransportKind::kLive;
  cache_.record(request, response);
  return response;
}

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::kOk: return "ok";
    case ParseStatus::kRepaired: return "repaired";
    case ParseStatus::kFailed: return "failed";
  }
  return "failed";
}

ParseStatus parse_status_from(std::string_view name) {
  if (name == "ok") return ParseStatus::kOk;
  if (name == "repaired") return ParseStatus::kRepaired;
  if (name == "failed") return ParseStatus::kFailed;
  throw ValidationError("unknown parse_status " + std::string(name));
}

std::optional<Json> find_json_object(std::string_view text) {
  for (std::size_t open = text.find('{'); open != std::string_view::npos;
       open = text.find('{', open + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        auto parsed = Json::parse(text.substr(open, i - open + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
        break;
      }
    }
  }
  return std::nullopt;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Appends the surfaces in `value` to `out`; returns false if anything had to
// be coerced or dropped.
bool coerce_surfaces(const Json& value, std::vector<std::string>& out) {
  const auto scalar = [&](const Json& v) {
    if (v.is_string()) {
      auto s = v.get<std::string>();
      if (trim(s).empty()) return false;
      out.push_back(std::move(s));
      return true;
    }
    if (v.is_number() || v.is_boolean()) {
      out.push_back(v.dump());
      return false;
    }
    return false;
  };
  if (value.is_array()) {
    bool clean = true;
    for (const auto& v : value) clean = scalar(v) && clean;
    return clean;
  }
  scalar(value);
  return false;
}

}  // namespace

ExtractionResult parse_extraction(std::string_view raw_text, const LabelScheme& scheme,
                                  std::string sentence_id) {
  ExtractionResult result;
  result.sentence_id = std::move(sentence_id);
  result.parse_status = ParseStatus::kFailed;
  try {
    auto object = find_json_object(raw_text);
    if (!object) {
      result.warnings.push_back("no JSON object in response");
      return result;
    }
    const auto trimmed = trim(raw_text);
    if (trimmed.empty() || trimmed.front() != '{' || trimmed.back() != '}')
      result.warnings.push_back("JSON object extracted from surrounding text");
    bool repaired = false;

    std::map<std::string, std::string> by_lower;
    for (const auto& type : scheme.entity_types()) by_lower.emplace(lower(type), type);

    EntityMap predicted;
    for (const auto& [key, value] : object->items()) {
      std::string type = key;
      if (!scheme.contains(type)) {
        auto it = by_lower.find(lower(trim(key)));
        if (it == by_lower.end()) {
          result.warnings.push_back("dropped unknown entity type '" + key + "'");
          continue;
        }
        type = it->second;
        repaired = true;
        result.warnings.push_back("mapped key '" + key + "' to '" + type + "'");
      }
      auto& bucket = predicted[type];
      if (!coerce_surfaces(value, bucket)) {
        repaired = true;
        result.warnings.push_back("coerced value of '" + key + "'");
      }
    }
    for (auto& [type, surfaces] : predicted) {
      if (!surfaces.empty()) result.predicted.emplace(type, std::move(surfaces));
    }
    result.parse_status = repaired ? ParseStatus::kRepaired : ParseStatus::kOk;
  } catch (const std::exception& e) {
    result.predicted.clear();
    result.parse_status = ParseStatus::kFailed;
    result.warnings.push_back(std::string("parse failure: ") + e.what());
  }
  return result;
}

}  // namespace staykate
