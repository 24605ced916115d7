#include "staykate/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "staykate/errors.hpp"
#include "staykate/rng.hpp"
#include "staykate/util.hpp"

namespace staykate {

std::string Sentence::text() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t.text;
  }
  return out;
}

Sentence Sentence::without_tags() const {
  Sentence s = *this;
  s.bio_tags.reset();
  return s;
}

LabelScheme LabelScheme::create(std::vector<std::pair<std::string, std::string>> types) {
  if (types.empty()) throw ValidationError("label scheme is empty");
  LabelScheme scheme;
  for (auto& [name, definition] : types) {
    if (name.empty()) throw ValidationError("label scheme: empty entity type name");
    if (trim(definition).empty())
      throw ValidationError("label scheme: empty definition for " + name);
    if (scheme.definitions_.count(name))
      throw ValidationError("label scheme: duplicate entity type " + name);
    scheme.types_.push_back(name);
    scheme.definitions_.emplace(std::move(name), std::move(definition));
  }
  return scheme;
}

const std::string& LabelScheme::definition(const std::string& type) const {
  auto it = definitions_.find(type);
  if (it == definitions_.end()) throw ValidationError("unknown entity type " + type);
  return it->second;
}

bool LabelScheme::contains(const std::string& type) const { return definitions_.count(type) > 0; }

namespace {

struct Tag {
  char prefix;  // 'O', 'B' or 'I'
  std::string type;
};

Tag parse_tag(const std::string& raw, const LabelScheme& scheme, const CorpusOptions& options,
              const std::string& where) {
  if (raw == "O") return {'O', {}};
  if (raw.size() < 3 || (raw[0] != 'B' && raw[0] != 'I') || raw[1] != '-')
    throw ValidationError(where + ": malformed tag '" + raw + "'");
  std::string type = raw.substr(2);
  if (auto it = options.type_map.find(type); it != options.type_map.end()) type = it->second;
  if (!scheme.contains(type))
    throw ValidationError(where + ": unknown entity type '" + type + "'");
  return {raw[0], std::move(type)};
}

}  // namespace

std::vector<Sentence> parse_corpus(std::istream& in, const std::string& source,
                                   const LabelScheme& scheme, std::vector<std::string>* warnings,
                                   const CorpusOptions& options) {
  std::vector<Sentence> out;
  Sentence current;
  std::vector<std::string> tags;
  Tag previous{'O', {}};

  const auto flush = [&] {
    if (current.tokens.empty()) return;
    current.id = source + ":" + std::to_string(out.size());
    current.bio_tags = std::move(tags);
    out.push_back(std::move(current));
    current = Sentence{};
    tags.clear();
    previous = Tag{'O', {}};
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      continue;
    }
    const std::string where = source + ":" + std::to_string(line_no);
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || line.find('\t', tab + 1) != std::string::npos)
      throw ValidationError(where + ": malformed line, expected token<TAB>tag");
    std::string token = line.substr(0, tab);
    Tag tag = parse_tag(line.substr(tab + 1), scheme, options, where);

    if (tag.prefix == 'I' && (previous.prefix == 'O' || previous.type != tag.type)) {
      tag.prefix = 'B';
      if (warnings)
        warnings->push_back(where + ": orphan I-" + tag.type + " promoted to B-" + tag.type);
    }
    current.tokens.push_back(Token{std::move(token), current.tokens.size()});
    tags.push_back(tag.prefix == 'O' ? "O" : std::string(1, tag.prefix) + "-" + tag.type);
    previous = std::move(tag);
  }
  flush();
  return out;
}

std::vector<Sentence> load_corpus(const std::filesystem::path& path, const LabelScheme& scheme,
                                  std::vector<std::string>* warnings,
                                  const CorpusOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file " + path.string());
  return parse_corpus(in, path.stem().string(), scheme, warnings, options);
}

std::vector<EntitySpan> spans_from_bio(const Sentence& sentence) {
  std::vector<EntitySpan> spans;
  if (!sentence.bio_tags) return spans;
  const auto& tags = *sentence.bio_tags;

  const auto close = [&](std::size_t start, std::size_t end, const std::string& type) {
    std::string surface;
    for (std::size_t i = start; i < end; ++i) {
      if (i > start) surface.push_back(' ');
      surface += sentence.tokens[i].text;
    }
    spans.push_back(EntitySpan{sentence.id, start, end, type, std::move(surface)});
  };

  constexpr auto kNone = static_cast<std::size_t>(-1);
  std::size_t open = kNone;
  std::string open_type;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto& tag = tags[i];
    const bool continues =
        tag.size() > 2 && tag[0] == 'I' && open != kNone && tag.compare(2, std::string::npos, open_type) == 0;
    if (continues) continue;
    if (open != kNone) close(open, i, open_type);
    open = kNone;
    if (tag != "O") {
      open = i;
      open_type = tag.substr(2);
    }
  }
  if (open != kNone) close(open, tags.size(), open_type);
  return spans;
}

std::vector<std::string> bio_from_spans(std::span<const EntitySpan> spans, std::size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const auto& span : spans) {
    if (span.start >= span.end || span.end > length)
      throw ValidationError("span out of range in sentence " + span.sentence_id);
    tags[span.start] = "B-" + span.entity_type;
    for (std::size_t i = span.start + 1; i < span.end; ++i) tags[i] = "I-" + span.entity_type;
  }
  return tags;
}

PoolSplit split_pools(std::span<const Sentence> training, std::size_t labeled_size,
                      std::uint64_t seed) {
  if (labeled_size > training.size())
    throw ValidationError("labeled_size " + std::to_string(labeled_size) +
                          " exceeds training set of " + std::to_string(training.size()));
  Rng rng(derive_seed(seed, Stream::kSplit));
  auto picked = rng.sample_indices(training.size(), labeled_size);
  std::vector<bool> labeled(training.size(), false);
  for (auto i : picked) labeled[i] = true;

  PoolSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < training.size(); ++i)
    (labeled[i] ? split.labeled_ids : split.unlabeled_ids).push_back(training[i].id);
  return split;
}

NonEntityStats non_entity_ratio(std::span<const Sentence> sentences) {
  if (sentences.empty()) throw ValidationError("non_entity_ratio: empty input");
  NonEntityStats stats;
  stats.sentences = sentences.size();
  for (const auto& s : sentences) {
    if (!s.bio_tags) throw ValidationError("non_entity_ratio: sentence " + s.id + " has no tags");
    stats.tokens += s.bio_tags->size();
    stats.non_entity_tokens +=
        static_cast<std::size_t>(std::count(s.bio_tags->begin(), s.bio_tags->end(), "O"));
  }
  if (stats.tokens == 0) throw ValidationError("non_entity_ratio: no tokens");
  stats.ratio = static_cast<double>(stats.non_entity_tokens) / static_cast<double>(stats.tokens);
  stats.avg_tokens = static_cast<double>(stats.tokens) / static_cast<double>(stats.sentences);
  stats.avg_non_entity_tokens =
      static_cast<double>(stats.non_entity_tokens) / static_cast<double>(stats.sentences);
  return stats;
}

namespace {
constexpr const char* kSplitNames[] = {"train", "dev", "test"};
}

const Sentence& Dataset::find(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw ValidationError("unknown sentence id " + id);
  const auto& [which, pos] = it->second;
  return split(kSplitNames[which])[pos];
}

const std::vector<Sentence>& Dataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  throw ValidationError("unknown split " + name);
}

void Dataset::index() {
  by_id_.clear();
  for (int which = 0; which < 3; ++which) {
    const auto& sentences = split(kSplitNames[which]);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      if (!by_id_.emplace(sentences[i].id, std::make_pair(which, i)).second)
        throw ValidationError("duplicate sentence id " + sentences[i].id);
    }
  }
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  Json manifest;
  try {
    manifest = Json::parse(read_text_file(manifest_path));
  } catch (const Json::exception& e) {
    throw ValidationError(manifest_path.string() + ": " + e.what());
  }
  const auto base = manifest_path.parent_path();

  Dataset ds;
  try {
    ds.name = manifest.at("dataset").get<std::string>();
    std::vector<std::pair<std::string, std::string>> types;
    for (const auto& entry : manifest.at("scheme"))
      types.emplace_back(entry.at("type").get<std::string>(),
                         entry.at("definition").get<std::string>());
    ds.scheme = LabelScheme::create(std::move(types));

    CorpusOptions options;
    if (manifest.contains("type_map"))
      options.type_map = manifest["type_map"].get<std::map<std::string, std::string>>();

    const auto& splits = manifest.at("split");
    for (const char* name : kSplitNames) {
      if (!splits.contains(name)) continue;
      const auto ids = splits[name].get<std::vector<std::string>>();
      std::filesystem::path file = std::string(name) + ".tsv";
      if (manifest.contains("files") && manifest["files"].contains(name))
        file = manifest["files"][name].get<std::string>();
      if (file.is_relative()) file = base / file;

      auto sentences = load_corpus(file, ds.scheme, &ds.warnings, options);
      if (sentences.size() != ids.size())
        throw ValidationError(manifest_path.string() + ": split '" + name + "' lists " +
                              std::to_string(ids.size()) + " ids but " + file.string() +
                              " holds " + std::to_string(sentences.size()) + " sentences");
      for (std::size_t i = 0; i < ids.size(); ++i) sentences[i].id = ids[i];
      auto& target = name == std::string_view("train") ? ds.train
                     : name == std::string_view("dev") ? ds.dev
                                                       : ds.test;
      target = std::move(sentences);
    }
  } catch (const Json::exception& e) {
    throw ValidationError(manifest_path.string() + ": " + e.what());
  }
  ds.index();
  return ds;
}

std::vector<Sentence> reveal_gold(const Dataset& dataset, std::span<const std::string> ids) {
  std::vector<Sentence> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(dataset.find(id));
  return out;
}

}  // namespace staykate
