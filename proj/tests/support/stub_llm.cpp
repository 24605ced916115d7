#include "stub_llm.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace staykate::testing {

namespace {

using Json = nlohmann::json;

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string stub_answer(const std::string& user_message) {
  std::map<std::string, std::string> lexicon{
      {"stirred", "Operation"}, {"heated", "Operation"}, {"NaCl", "Material"},
      {"ethanol", "Material"},  {"water", "Material"},   {"white", "Property"},
      {"box", "Material"},
  };
  std::istringstream in(user_message);
  std::string line, pending_input, test_input;
  bool in_test = false;
  while (std::getline(in, line)) {
    if (line.rfind("### Test input", 0) == 0) in_test = true;
    if (line.rfind("Input: ", 0) == 0) {
      (in_test ? test_input : pending_input) = line.substr(7);
    } else if (line.rfind("Output: ", 0) == 0 && !in_test) {
      const auto answer = Json::parse(line.substr(8), nullptr, false);
      if (answer.is_object()) {
        for (const auto& [type, list] : answer.items())
          for (const auto& s : list) lexicon[s.get<std::string>()] = type;
      }
    }
  }

  std::vector<std::pair<std::vector<std::string>, std::string>> entries;
  for (const auto& [surface, type] : lexicon) entries.emplace_back(split_words(surface), type);
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

  const auto tokens = split_words(test_input);
  Json found = Json::object();
  for (std::size_t i = 0; i < tokens.size();) {
    std::size_t advance = 1;
    for (const auto& [words, type] : entries) {
      if (words.empty() || i + words.size() > tokens.size()) continue;
      if (std::equal(words.begin(), words.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
        std::string surface;
        for (const auto& w : words) surface += (surface.empty() ? "" : " ") + w;
        found[type].push_back(surface);
        advance = words.size();
        break;
      }
    }
    i += advance;
  }

  switch (fnv1a(test_input) % 11) {
    case 0:
    case 1:
      return "```json\n" + found.dump() + "\n```";
    case 2:
      return "Here are the entities:\n" + found.dump();
    case 3:
      if (!found.empty()) {
        auto first = found.begin();
        *first = first->front();
      }
      return found.dump();
    case 4:
      return "I could not find entities.";
    default:
      return found.dump();
  }
}

struct StubLlmServer::Impl {
  httplib::Server server;
  std::thread thread;
};

StubLlmServer::StubLlmServer() : impl_(std::make_unique<Impl>()) {}

StubLlmServer::~StubLlmServer() { stop(); }

void StubLlmServer::fail_next(int n, int status) {
  failure_status_ = status;
  failures_left_ = n;
}

void StubLlmServer::require_key(std::string key) { required_key_ = std::move(key); }

std::string StubLlmServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
}

int StubLlmServer::start(int port) {
  impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
    ++requests_;
    if (!required_key_.empty() &&
        req.get_header_value("Authorization") != "Bearer " + required_key_) {
      res.status = 401;
      res.set_content(R"({"error":"invalid key"})", "application/json");
      return;
    }
    if (failures_left_ > 0) {
      --failures_left_;
      res.status = failure_status_;
      res.set_content(R"({"error":"injected"})", "application/json");
      return;
    }
    const auto body = Json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("messages")) {
      res.status = 400;
      return;
    }
    std::string user;
    for (const auto& m : body["messages"])
      if (m.value("role", "") == "user") user = m.value("content", "");
    const auto answer = stub_answer(user);
    Json out{{"id", "stub"},
             {"object", "chat.completion"},
             {"model", body.value("model", "")},
             {"choices", {{{"index", 0},
                           {"message", {{"role", "assistant"}, {"content", answer}}},
                           {"finish_reason", "stop"}}}},
             {"usage",
              {{"prompt_tokens", static_cast<int>(split_words(user).size())},
               {"completion_tokens", static_cast<int>(answer.size() / 4)}}}};
    res.set_content(out.dump(), "application/json");
  });
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) port_ = -1;
    else port_ = port;
  }
  if (port_ <= 0) throw std::runtime_error("stub server: cannot bind");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void StubLlmServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace staykate::testing
