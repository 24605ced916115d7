#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "staykate/corpus.hpp"
#include "staykate/errors.hpp"

using namespace staykate;

namespace {

LabelScheme materials() {
  return LabelScheme::create({{"Material", "A substance."},
                              {"Operation", "An action."},
                              {"Property", "A descriptor."}});
}

Sentence tagged(std::vector<std::string> tags) {
  Sentence s;
  s.id = "s";
  for (std::size_t i = 0; i < tags.size(); ++i) s.tokens.push_back({"t" + std::to_string(i), i});
  s.bio_tags = std::move(tags);
  return s;
}

std::vector<Sentence> parse(const std::string& text, std::vector<std::string>* warnings = nullptr) {
  std::istringstream in(text);
  return parse_corpus(in, "mem", materials(), warnings);
}

}  // namespace

TEST_CASE("minimal well-formed corpus") {
  const auto sentences = parse("Add\tO\nNaCl\tB-Material\n");
  REQUIRE(sentences.size() == 1);
  CHECK(sentences[0].size() == 2);
  CHECK(sentences[0].tokens[1].text == "NaCl");
  CHECK(sentences[0].tokens[1].index == 1);
  const auto spans = spans_from_bio(sentences[0]);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == EntitySpan{"mem:0", 1, 2, "Material", "NaCl"});
}

TEST_CASE("orphan I- tag is promoted with one warning") {
  std::vector<std::string> warnings;
  const auto sentences = parse("Add\tO\nNaCl\tI-Material\n", &warnings);
  CHECK(*sentences[0].bio_tags == std::vector<std::string>{"O", "B-Material"});
  CHECK(warnings.size() == 1);
}

TEST_CASE("I- after a different type is promoted") {
  std::vector<std::string> warnings;
  const auto s = parse("a\tB-Material\nb\tI-Operation\nc\tI-Operation\n", &warnings);
  CHECK(*s[0].bio_tags == std::vector<std::string>{"B-Material", "B-Operation", "I-Operation"});
  CHECK(warnings.size() == 1);
}

TEST_CASE("load errors") {
  CHECK_THROWS_AS(parse("x\tB-Foo\n"), ValidationError);
  CHECK_THROWS_WITH_AS(parse("x\tB-Foo\n"), doctest::Contains("unknown entity type"),
                       ValidationError);
  CHECK_THROWS_AS(parse("no tab here\n"), ValidationError);
  CHECK_THROWS_AS(parse("x\tQ-Material\n"), ValidationError);
  CHECK_THROWS_AS(load_corpus("/nonexistent/file.tsv", materials()), ValidationError);
}

TEST_CASE("type map merges labels before validation") {
  CorpusOptions options;
  options.type_map = {{"Material-descriptor", "Property"}};
  std::istringstream in("fine\tB-Material-descriptor\npowder\tB-Material\n");
  const auto s = parse_corpus(in, "m", materials(), nullptr, options);
  CHECK(*s[0].bio_tags == std::vector<std::string>{"B-Property", "B-Material"});
}

TEST_CASE("blank lines separate sentences; CRLF tolerated") {
  const auto s = parse("a\tO\r\n\r\n\nb\tB-Operation\nc\tO\n\n");
  REQUIRE(s.size() == 2);
  CHECK(s[1].id == "mem:1");
  CHECK(s[1].text() == "b c");
}

TEST_CASE("spans_from_bio") {
  CHECK(spans_from_bio(tagged({"O", "O", "O"})).empty());

  const auto two = spans_from_bio(tagged({"B-Mat", "I-Mat", "O", "B-Op"}));
  REQUIRE(two.size() == 2);
  CHECK(two[0].start == 0);
  CHECK(two[0].end == 2);
  CHECK(two[0].entity_type == "Mat");
  CHECK(two[0].surface == "t0 t1");
  CHECK(two[1].start == 3);
  CHECK(two[1].end == 4);
  CHECK(two[1].entity_type == "Op");

  const auto adjacent = spans_from_bio(tagged({"B-Mat", "B-Mat"}));
  REQUIRE(adjacent.size() == 2);
  CHECK(adjacent[0].end == 1);
  CHECK(adjacent[1].start == 1);
}

TEST_CASE("property: spans -> BIO is the identity on valid tag sequences") {
  std::mt19937_64 gen(11);
  const std::vector<std::string> types{"Material", "Operation", "Property"};
  for (int trial = 0; trial < 2000; ++trial) {
    const auto n = 1 + gen() % 20;
    std::vector<std::string> tags;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = gen() % 4;
      const auto& type = types[gen() % types.size()];
      const bool can_continue = !tags.empty() && tags.back() != "O";
      if (r == 0 || (r == 3 && !can_continue)) tags.push_back("O");
      else if (r == 3) tags.push_back("I-" + tags.back().substr(2));
      else tags.push_back("B-" + type);
    }
    const auto s = tagged(tags);
    const auto spans = spans_from_bio(s);
    CHECK(bio_from_spans(spans, n) == tags);
    for (std::size_t i = 1; i < spans.size(); ++i) CHECK(spans[i - 1].end <= spans[i].start);
  }
}

TEST_CASE("split_pools") {
  std::vector<Sentence> train;
  for (int i = 0; i < 1000; ++i) train.push_back(Sentence{"id" + std::to_string(i), {{"x", 0}}, {}});

  SUBCASE("boundary: everything labeled") {
    const auto s = split_pools(std::span(train).first(10), 10, 3);
    CHECK(s.labeled_ids.size() == 10);
    CHECK(s.unlabeled_ids.empty());
  }
  SUBCASE("deterministic for a fixed seed") {
    const auto a = split_pools(train, 180, 5);
    const auto b = split_pools(train, 180, 5);
    CHECK(a.labeled_ids == b.labeled_ids);
    CHECK(a.unlabeled_ids == b.unlabeled_ids);
    CHECK(split_pools(train, 180, 6).labeled_ids != a.labeled_ids);
  }
  SUBCASE("1000 sentences, 180 labeled, seed 7") {
    const auto s = split_pools(train, 180, 7);
    CHECK(s.labeled_ids.size() == 180);
    CHECK(s.unlabeled_ids.size() == 820);
    std::set<std::string> labeled(s.labeled_ids.begin(), s.labeled_ids.end());
    CHECK(labeled.size() == 180);
    for (const auto& id : s.unlabeled_ids) CHECK(labeled.count(id) == 0);
  }
  SUBCASE("partition property over many seeds") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto s = split_pools(std::span(train).first(50), 17, seed);
      std::multiset<std::string> all(s.labeled_ids.begin(), s.labeled_ids.end());
      all.insert(s.unlabeled_ids.begin(), s.unlabeled_ids.end());
      CHECK(all.size() == 50);
      CHECK(std::set<std::string>(all.begin(), all.end()).size() == 50);
    }
  }
  CHECK_THROWS_AS(split_pools(std::span(train).first(5), 6, 1), ValidationError);
}

TEST_CASE("non_entity_ratio") {
  SUBCASE("all O") {
    std::vector<Sentence> s{tagged({"O", "O"})};
    CHECK(non_entity_ratio(s).ratio == 1.0);
  }
  SUBCASE("4 O of 6 tokens") {
    std::vector<Sentence> s{tagged({"O", "B-Mat", "O"}), tagged({"B-Op", "O", "O"})};
    const auto stats = non_entity_ratio(s);
    CHECK(stats.ratio == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
    CHECK(stats.avg_tokens == 3.0);
    CHECK(stats.avg_non_entity_tokens == 2.0);
    std::reverse(s.begin(), s.end());
    CHECK(non_entity_ratio(s).ratio == stats.ratio);
  }
  CHECK_THROWS_AS(non_entity_ratio({}), ValidationError);
  std::vector<Sentence> untagged{Sentence{"u", {{"x", 0}}, {}}};
  CHECK_THROWS_AS(non_entity_ratio(untagged), ValidationError);
}

TEST_CASE("label scheme validation") {
  CHECK_THROWS_AS(LabelScheme::create({}), ValidationError);
  CHECK_THROWS_AS(LabelScheme::create({{"A", "x"}, {"A", "y"}}), ValidationError);
  CHECK_THROWS_AS(LabelScheme::create({{"A", "  "}}), ValidationError);
}

TEST_CASE("mini dataset loads with ids from the manifest") {
  const auto ds = load_dataset(std::string(STAYKATE_FIXTURE_DIR) + "/mini/manifest.json");
  CHECK(ds.name == "mini-synthesis");
  CHECK(ds.train.size() == 30);
  CHECK(ds.test.size() == 10);
  CHECK(ds.dev.size() == 5);
  CHECK(ds.warnings.empty());
  CHECK(ds.find("test-003").id == "test-003");
  CHECK_THROWS_AS(ds.find("nope"), ValidationError);
  const std::vector<std::string> ids{"train-001"};
  const auto revealed = reveal_gold(ds, ids);
  CHECK(revealed[0].bio_tags.has_value());
  CHECK_FALSE(revealed[0].without_tags().bio_tags.has_value());
}
