#include "staykate/prompt.hpp"

#include <cctype>

#include "staykate/errors.hpp"

namespace staykate {

std::string_view to_string(Origin origin) {
  return origin == Origin::kStatic ? "static" : "dynamic";
}

Demonstration make_demonstration(const Sentence& sentence, Origin origin, double rank_key) {
  if (!sentence.bio_tags)
    throw ValidationError("demonstration " + sentence.id + " has no gold tags");
  Demonstration demo;
  demo.sentence_id = sentence.id;
  demo.text = sentence.text();
  demo.origin = origin;
  demo.rank_key = rank_key;
  for (auto& span : spans_from_bio(sentence))
    demo.entities[span.entity_type].push_back(std::move(span.surface));
  return demo;
}

std::string indefinite_article(std::string_view domain) {
  const auto word_end = domain.find(' ');
  const auto word = domain.substr(0, word_end);
  if (word.empty()) return "a";
  bool initialism = word.size() >= 2;
  for (char c : word) initialism = initialism && std::isupper(static_cast<unsigned char>(c));
  const char first = static_cast<char>(std::tolower(static_cast<unsigned char>(word.front())));
  if (initialism) {
    // Letters whose spoken name starts with a vowel sound.
    return std::string_view("aefhilmnorsx").find(first) != std::string_view::npos ? "an" : "a";
  }
  return std::string_view("aeiou").find(first) != std::string_view::npos ? "an" : "a";
}

std::string build_system_role(std::string_view domain,
                              const std::optional<std::string>& article_override) {
  const auto name = trim(domain);
  if (name.empty()) throw ValidationError("domain name must not be empty");
  const std::string article = article_override ? *article_override : indefinite_article(name);
  return "You are " + article + " " + name + " expert.";
}

std::string build_instructions(const LabelScheme& scheme) {
  std::string keys;
  for (const auto& type : scheme.entity_types()) {
    if (!keys.empty()) keys += ", ";
    keys += "\"" + type + "\"";
  }
  std::string out =
      "Your task is named entity recognition: find every mention of the entity types defined "
      "below in the input sentence.\n\nEntity definitions:\n";
  for (const auto& type : scheme.entity_types())
    out += "- " + type + ": " + scheme.definition(type) + "\n";
  out +=
      "\nOutput format: answer with a single JSON object whose keys are exactly " + keys +
      ". Each value is a list of the mentions of that entity type, copied verbatim from the "
      "sentence. Use an empty list for a type with no mentions; if the sentence contains no "
      "entities, return every key with an empty list.";
  return out;
}

std::string render_answer(const EntityMap& entities, const LabelScheme& scheme) {
  OrderedJson answer = OrderedJson::object();
  for (const auto& type : scheme.entity_types()) {
    auto it = entities.find(type);
    answer[type] = it == entities.end() ? std::vector<std::string>{} : it->second;
  }
  return answer.dump();
}

std::string PromptBundle::user_message() const {
  std::string out = instructions;
  out += "\n\n";
  for (std::size_t i = 0; i < demonstrations.size(); ++i) {
    const auto& demo = demonstrations[i];
    out += std::string(kExampleHeader) + std::to_string(i + 1) + "\n";
    out += "Input: " + demo.text + "\n";
    out += "Output: " + render_answer(demo.entities, scheme) + "\n\n";
  }
  out += std::string(kTestHeader) + "\n";
  out += "Input: " + test_sentence + "\n";
  out += "Output:";
  return out;
}

std::string PromptBundle::digest() const {
  std::string material = system_role;
  material.push_back('\x1f');
  material += user_message();
  return sha256_hex(material);
}

OrderedJson PromptBundle::to_json() const {
  OrderedJson demos = OrderedJson::array();
  for (const auto& d : demonstrations) {
    demos.push_back({{"id", d.sentence_id},
                     {"origin", to_string(d.origin)},
                     {"rank_key", d.rank_key},
                     {"text", d.text},
                     {"answer", render_answer(d.entities, scheme)}});
  }
  return OrderedJson{{"test_id", test_id},  {"k_s", k_s},
                     {"k_d", k_d},          {"digest", digest()},
                     {"system", system_role}, {"user", user_message()},
                     {"demonstrations", std::move(demos)}};
}

namespace {

void check_demo(const Demonstration& demo, Origin expected, const LabelScheme& scheme) {
  if (demo.origin != expected)
    throw ValidationError("demonstration " + demo.sentence_id + " is " +
                          std::string(to_string(demo.origin)) + ", expected " +
                          std::string(to_string(expected)));
  for (const auto& [type, surfaces] : demo.entities) {
    if (!scheme.contains(type))
      throw ValidationError("demonstration " + demo.sentence_id +
                            " uses entity type outside the scheme: " + type);
    for (const auto& s : surfaces) {
      if (demo.text.find(s) == std::string::npos)
        throw ValidationError("demonstration " + demo.sentence_id + ": surface '" + s +
                              "' not in sentence text");
    }
  }
}

}  // namespace

PromptBundle assemble_prompt(std::vector<Demonstration> static_demos,
                             std::vector<Demonstration> dynamic_demos, const Sentence& test,
                             std::string system_role, std::string instructions,
                             const LabelScheme& scheme, std::size_t k_s, std::size_t k_d) {
  if (static_demos.size() != k_s || dynamic_demos.size() != k_d)
    throw ValidationError("prompt for " + test.id + ": got " +
                          std::to_string(static_demos.size()) + "+" +
                          std::to_string(dynamic_demos.size()) + " demonstrations, expected " +
                          std::to_string(k_s) + "+" + std::to_string(k_d));
  for (const auto& d : static_demos) check_demo(d, Origin::kStatic, scheme);
  for (std::size_t i = 0; i < dynamic_demos.size(); ++i) {
    check_demo(dynamic_demos[i], Origin::kDynamic, scheme);
    if (i > 0 && dynamic_demos[i - 1].rank_key > dynamic_demos[i].rank_key)
      throw ValidationError("prompt for " + test.id +
                            ": dynamic demonstrations not in ascending similarity");
  }

  PromptBundle bundle;
  bundle.system_role = std::move(system_role);
  bundle.instructions = std::move(instructions);
  bundle.demonstrations = std::move(static_demos);
  for (auto& d : dynamic_demos) bundle.demonstrations.push_back(std::move(d));
  bundle.test_id = test.id;
  bundle.test_sentence = test.text();
  bundle.k_s = k_s;
  bundle.k_d = k_d;
  bundle.scheme = scheme;
  return bundle;
}

}  // namespace staykate
