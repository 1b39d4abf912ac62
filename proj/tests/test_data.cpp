#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rtf/data.hpp"
#include "rtf/decoding.hpp"
#include "rtf/evaluation.hpp"
#include "rtf/random.hpp"
#include "rtf/tagging.hpp"
#include "support/oracles.hpp"

using namespace rtf;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> words(const std::string& s) { return Sentence::from_text(s).tokens; }

Corpus from_jsonl(const std::string& text, Variant variant = Variant::Exact) {
  std::istringstream in(text);
  const auto raw = read_raw_examples(in, CorpusFormat::JsonLines);
  return build_corpus(raw, infer_relations(raw), variant);
}

std::string error_of(const std::string& text, CorpusFormat format) {
  std::istringstream in(text);
  try {
    read_raw_examples(in, format);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

std::size_t exclusive(const CorpusStats& s, OverlapPattern p) {
  return s.exclusive_counts[static_cast<std::size_t>(p)];
}

}  // namespace

TEST_CASE("locate_span: examples") {
  const auto t = words("the New York Times in New York");
  CHECK(locate_span(t, words("New York")) == Span{1, 2});
  CHECK(locate_span(t, words("York Times")) == Span{2, 3});
  CHECK(locate_span(t, words("in")) == Span{4, 4});
  CHECK_FALSE(locate_span(t, words("new york")));
  CHECK_FALSE(locate_span(t, words("Times New")));
  CHECK_FALSE(locate_span(t, {}));
  CHECK_FALSE(locate_span(words("a"), words("a a")));
}

TEST_CASE("locate_span agrees with an exhaustive scan") {
  Rng rng(13);
  const std::vector<std::string> alphabet{"a", "b", "c"};
  for (int iter = 0; iter < 20000; ++iter) {
    std::vector<std::string> tokens, entity;
    for (int i = rng.randint(0, 8); i > 0; --i) tokens.push_back(alphabet[static_cast<std::size_t>(rng.randint(0, 2))]);
    for (int i = rng.randint(1, 3); i > 0; --i) entity.push_back(alphabet[static_cast<std::size_t>(rng.randint(0, 2))]);
    REQUIRE(locate_span(tokens, entity) == testing::reference_locate(tokens, entity));
  }
}

TEST_CASE("loader: spans, relations and counters") {
  const auto c = from_jsonl(
      R"({"text": "A works at B", "triple_list": [["A", "works_at", "B"]]})"
      "\n\n"
      R"({"text": "A met A and B", "triple_list": [["A", "met", "B"]]})"
      "\n"
      R"({"text": "nobody here", "triple_list": [["C", "met", "D"]]})"
      "\n"
      R"({"text": "no triples at all", "triple_list": []})"
      "\n");
  CHECK(c.inventory.names() == std::vector<std::string>{"met", "works_at"});
  CHECK(c.counters.records == 4);
  CHECK(c.counters.kept == 3);
  CHECK(c.counters.skipped_unlocatable == 1);
  CHECK(c.counters.ambiguous_mentions == 1);
  REQUIRE(c.examples.size() == 3);
  CHECK(c.examples[0].triples == std::vector<RelationalTriple>{{{0, 0}, 1, {3, 3}}});
  CHECK(c.examples[1].triples == std::vector<RelationalTriple>{{{0, 0}, 0, {4, 4}}});
  CHECK(c.examples[2].triples.empty());

  std::ostringstream warn;
  report_counters(warn, c);
  CHECK(warn.str().find("skipped 1 records with unlocatable entities") != std::string::npos);
  CHECK(warn.str().find("1 entity strings occur more than once") != std::string::npos);
}

TEST_CASE("loader: unknown relations are skipped against a fixed inventory") {
  std::istringstream in(R"({"text": "A likes B", "triple_list": [["A", "likes", "B"]]})");
  const auto raw = read_raw_examples(in, CorpusFormat::JsonLines);
  const auto c = build_corpus(raw, RelationInventory({"met"}), Variant::Exact);
  CHECK(c.examples.empty());
  CHECK(c.counters.skipped_unknown_relation == 1);
}

TEST_CASE("loader: the four field layouts") {
  const auto c = from_jsonl(
      R"({"text": "x y z", "triple_list": [["x", "r", "z"]]})"
      "\n"
      R"({"text": "x y z", "spo_list": [["x", "r", "z"]]})"
      "\n"
      R"({"text": "x y z", "relation_list": [{"subject": "x", "predicate": "r", "object": "z"}]})"
      "\n"
      R"({"sentText": "x y z", "relationMentions": [{"em1Text": "x", "label": "r", "em2Text": "z"}]})"
      "\n");
  REQUIRE(c.examples.size() == 4);
  for (const auto& ex : c.examples) CHECK(ex.triples == std::vector<RelationalTriple>{{{0, 0}, 0, {2, 2}}});
}

TEST_CASE("loader: json array and errors") {
  std::istringstream in(R"([{"text": "p q", "triple_list": [["p", "r", "q"]]}, {"text": "q", "triple_list": []}])");
  CHECK(read_raw_examples(in, CorpusFormat::JsonArray).size() == 2);

  CHECK(error_of("{\"text\": \"a\", \"triple_list\": []}\n{oops\n", CorpusFormat::JsonLines).rfind("line 2:", 0) == 0);
  CHECK(error_of("{\"text\": \"a\"}\n", CorpusFormat::JsonLines).find("line 1:") == 0);
  CHECK(error_of("{\"text\": \"a\", \"triple_list\": [[\"a\", \"r\"]]}", CorpusFormat::JsonLines).find("line 1:") == 0);
  CHECK(error_of(R"([{"text": "a", "triple_list": []}, 7])", CorpusFormat::JsonArray).find("record 2:") == 0);
  CHECK(error_of("{}", CorpusFormat::JsonArray).find("not an array") != std::string::npos);
  CHECK(error_of("", CorpusFormat::JsonLines).empty());
  CHECK_THROWS_AS(parse_corpus_format("csv"), DataError);
}

TEST_CASE("loader: empty file gives an empty corpus") {
  const auto c = from_jsonl("");
  CHECK(c.examples.empty());
  CHECK(c.inventory.size() == 0);
  std::ostringstream warn;
  report_counters(warn, c);
  CHECK(warn.str().find("no examples") != std::string::npos);
}

TEST_CASE("loader: partial variant keeps last words") {
  const auto c = from_jsonl(R"({"text": "New York City is in USA", "triple_list": [["USA", "contains", "New York City"]]})",
                            Variant::Partial);
  REQUIRE(c.examples.size() == 1);
  CHECK(c.examples[0].triples == std::vector<RelationalTriple>{{{5, 5}, 0, {2, 2}}});
  CHECK(c.variant == Variant::Partial);
}

TEST_CASE("corpus json lines round trip") {
  const auto c = generate_synthetic(SyntheticSpec{});
  std::stringstream buf;
  write_corpus_json_lines(buf, c);
  const auto raw = read_raw_examples(buf, CorpusFormat::JsonLines);
  const auto back = build_corpus(raw, c.inventory, Variant::Exact);
  REQUIRE(back.examples.size() == c.examples.size());
  CHECK(back.counters.ambiguous_mentions == 0);
  for (std::size_t i = 0; i < c.examples.size(); ++i) {
    REQUIRE(back.examples[i].sentence.tokens == c.examples[i].sentence.tokens);
    REQUIRE(back.examples[i].triples == c.examples[i].triples);
  }
}

TEST_CASE("gold oracle pipeline scores perfectly") {
  const auto c = generate_synthetic(SyntheticSpec{});
  std::vector<TripleSet> pred;
  for (const auto& ex : c.examples) {
    const auto tags = encode_tags(ex.sentence, ex.triples, c.inventory);
    pred.push_back(decode_all(tags.grids, static_cast<int>(ex.sentence.size()), c.inventory.size()));
  }
  for (auto mode : {MatchMode::Exact, MatchMode::Partial}) {
    const auto r = evaluate(c.examples, pred, mode);
    CHECK(micro_prf(r.overall).f1 == 1.0);
  }
}

TEST_CASE("synthetic: determinism and shape") {
  SyntheticSpec spec;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  std::ostringstream sa, sb;
  write_corpus_json_lines(sa, a);
  write_corpus_json_lines(sb, b);
  CHECK(sa.str() == sb.str());
  spec.seed = 2;
  std::ostringstream sc;
  write_corpus_json_lines(sc, generate_synthetic(spec));
  CHECK(sc.str() != sa.str());

  std::set<std::string> vocab;
  REQUIRE(a.examples.size() == 500);
  for (const auto& ex : a.examples) {
    CHECK(ex.sentence.size() >= 5);
    CHECK(ex.sentence.size() <= 15);
    const TripleSet distinct(ex.triples.begin(), ex.triples.end());
    CHECK(distinct.size() >= 1);
    CHECK(distinct.size() <= 3);
    CHECK(encode_tags(static_cast<int>(ex.sentence.size()), ex.triples, 3).conflicts.empty());
    vocab.insert(ex.sentence.tokens.begin(), ex.sentence.tokens.end());
  }
  CHECK(vocab.size() <= 50);
  const auto s = corpus_stats(a.examples, 3);
  CHECK(s.sentences - exclusive(s, OverlapPattern::Normal) >= 100);
}

TEST_CASE("synthetic: all-EPO mix") {
  SyntheticSpec spec;
  spec.mix = {0, 0, 1, 0};
  for (const auto& ex : generate_synthetic(spec).examples) {
    REQUIRE(ex.triples.size() >= 2);
    REQUIRE(classify_overlap(ex.triples).count(OverlapPattern::EPO) == 1);
  }
}

TEST_CASE("synthetic: one single-token triple gives one SP cell") {
  SyntheticSpec spec;
  spec.mix = {1, 0, 0, 0};
  spec.max_triples = 1;
  spec.max_entity_length = 1;
  spec.count = 200;
  for (const auto& ex : generate_synthetic(spec).examples) {
    const auto tags = encode_tags(static_cast<int>(ex.sentence.size()), ex.triples, 3);
    int sp = 0, other = 0;
    for (const auto& g : tags.grids)
      for (int i = 0; i < g.size(); ++i)
        for (int j = 0; j < g.size(); ++j) {
          sp += g.at(i, j) == Tag::SP;
          other += g.at(i, j) == Tag::UL || g.at(i, j) == Tag::BR;
        }
    REQUIRE(sp == 1);
    REQUIRE(other == 0);
  }
}

TEST_CASE("synthetic: kind mix is honoured") {
  SyntheticSpec spec;
  spec.count = 4000;
  const auto s = corpus_stats(generate_synthetic(spec).examples, 3);
  for (std::size_t k = 0; k < 4; ++k) {
    const double share = static_cast<double>(s.exclusive_counts[k]) / static_cast<double>(s.sentences);
    INFO(pattern_name(kOverlapPatterns[k]));
    CHECK(std::abs(share - spec.mix[k]) <= 0.05);
  }
}

TEST_CASE("synthetic: spec parsing and validation") {
  std::istringstream in("# toy\ncount = 7\nmix.hto=0\nseed=9\n");
  const auto spec = read_synthetic_spec(in);
  CHECK(spec.count == 7);
  CHECK(spec.mix[3] == 0);
  CHECK(spec.seed == 9);
  std::istringstream bad("volume=3\n");
  CHECK_THROWS_AS(read_synthetic_spec(bad), DataError);
  std::istringstream junk("count\n");
  CHECK_THROWS_AS(read_synthetic_spec(junk), DataError);

  SyntheticSpec s;
  s.max_length = 3;
  CHECK_THROWS_AS(s.validate(), DataError);
  s = {};
  s.vocab_size = 5;
  CHECK_THROWS_AS(generate_synthetic(s), DataError);
  s = {};
  s.mix = {0, 0, 0, 0};
  CHECK_THROWS_AS(s.validate(), DataError);
  s = {};
  s.relations = 1;
  s.mix = {0, 0, 1, 0};
  CHECK_THROWS_AS(s.validate(), DataError);
}

TEST_CASE("relation file") {
  const fs::path path = fs::temp_directory_path() / "rtf_test_relations.txt";
  {
    std::ofstream out(path);
    out << "b\n\n  a  \n";
  }
  CHECK(read_relation_file(path).names() == std::vector<std::string>{"b", "a"});
  fs::remove(path);
  CHECK_THROWS_AS(read_relation_file(path), DataError);
}
