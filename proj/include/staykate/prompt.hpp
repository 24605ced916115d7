#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "staykate/corpus.hpp"
#include "staykate/util.hpp"

namespace staykate {

enum class Origin { kStatic, kDynamic };

std::string_view to_string(Origin origin);

using EntityMap = std::map<std::string, std::vector<std::string>>;

struct Demonstration {
  std::string sentence_id;
  std::string text;
  EntityMap entities;
  Origin origin = Origin::kStatic;
  double rank_key = 0.0;  // R_Score for static picks, similarity for dynamic
};

/// Builds a demonstration from a gold-tagged sentence.
Demonstration make_demonstration(const Sentence& sentence, Origin origin, double rank_key);

/// "a" or "an" for the domain name. Initialisms ("NLP") go by letter name,
/// everything else by its first letter being a vowel.
std::string indefinite_article(std::string_view domain);

/// "You are a/an <domain> expert." Throws ValidationError on an empty domain.
std::string build_system_role(std::string_view domain,
                              const std::optional<std::string>& article_override = std::nullopt);

std::string build_instructions(const LabelScheme& scheme);

/// {"<type>": [surfaces], ...} with every scheme type in scheme order.
std::string render_answer(const EntityMap& entities, const LabelScheme& scheme);

inline constexpr std::string_view kExampleHeader = "### Example ";
inline constexpr std::string_view kTestHeader = "### Test input";

struct PromptBundle {
  std::string system_role;
  std::string instructions;
  std::vector<Demonstration> demonstrations;  // static first, then dynamic ascending
  std::string test_id;
  std::string test_sentence;
  std::size_t k_s = 0;
  std::size_t k_d = 0;
  LabelScheme scheme;

  /// Instructions, numbered demonstration blocks, and the test input.
  std::string user_message() const;
  /// SHA-256 over the system role and user message.
  std::string digest() const;
  OrderedJson to_json() const;
};

/// Throws ValidationError when the counts differ from k_s/k_d, an origin is
/// on the wrong side, or a demonstration uses a type outside the scheme or a
/// surface missing from its sentence. Duplicates across the two lists are
/// kept.
PromptBundle assemble_prompt(std::vector<Demonstration> static_demos,
                             std::vector<Demonstration> dynamic_demos, const Sentence& test,
                             std::string system_role, std::string instructions,
                             const LabelScheme& scheme, std::size_t k_s, std::size_t k_d);

}  // namespace staykate
