#include "doctest.h"

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rtf/cli.hpp"
#include "rtf/data.hpp"
#include "rtf/decoding.hpp"

using namespace rtf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run rtf_run(std::vector<std::string> args) {
  args.insert(args.begin(), "rtf");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// A fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  Scratch() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("rtf_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(rtf_run({}).code == kExitUsage);
  CHECK(rtf_run({"frobnicate"}).code == kExitUsage);
  CHECK(rtf_run({"encode", "--input", "x.jsonl"}).code == kExitUsage);
  CHECK(rtf_run({"stats", "--input", "x", "--format", "csv"}).code == kExitUsage);
  CHECK(rtf_run({"gradcheck", "--d", "2"}).code == kExitUsage);
  const auto help = rtf_run({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("gradcheck") != std::string::npos);
}

TEST_CASE("data errors exit 2 with a one-line diagnostic") {
  Scratch tmp;
  spit(tmp / "bad.jsonl", "{\"text\": \"a b\", \"triple_list\": []}\nnot json\n");
  const auto r = rtf_run({"encode", "--input", tmp / "bad.jsonl", "--output", tmp / "out.tsv"});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("line 2") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK_FALSE(fs::exists(tmp / "out.tsv"));
  CHECK(rtf_run({"stats", "--input", tmp / "missing.jsonl"}).code == kExitData);
}

TEST_CASE("gen-data, encode, decode reproduce the gold triples") {
  Scratch tmp;
  REQUIRE(rtf_run({"gen-data", "--set", "count=40", "--seed", "5", "--output", tmp / "c.jsonl",
                   "--relations-output", tmp / "rels.txt"})
              .code == kExitOk);
  REQUIRE(rtf_run({"encode", "--input", tmp / "c.jsonl", "--relations", tmp / "rels.txt", "--output",
                   tmp / "grids.tsv"})
              .code == kExitOk);
  REQUIRE(rtf_run({"decode", "--input", tmp / "grids.tsv", "--relations", tmp / "rels.txt", "--output",
                   tmp / "triples.tsv"})
              .code == kExitOk);

  const auto corpus = load_corpus(tmp / "c.jsonl", CorpusFormat::JsonLines, Variant::Exact,
                                  read_relation_file(tmp / "rels.txt"));
  std::ostringstream expect;
  for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
    expect << "#sentence\t" << i << '\n';
    const TripleSet ts(corpus.examples[i].triples.begin(), corpus.examples[i].triples.end());
    for (const auto& t : ts)
      expect << t.subject.start << '\t' << t.subject.end << '\t' << corpus.inventory.name(t.relation) << '\t'
             << t.object.start << '\t' << t.object.end << '\n';
  }
  CHECK(slurp(tmp / "triples.tsv") == expect.str());
  CHECK_FALSE(fs::exists(tmp / "triples.tsv.partial"));

  SUBCASE("stats") {
    const auto r = rtf_run({"stats", "--input", tmp / "c.jsonl"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("sentences\t40\n") != std::string::npos);
    CHECK(r.out.find("relations\t3\n") != std::string::npos);
  }
}

TEST_CASE("decode: empty dump gives empty output") {
  Scratch tmp;
  spit(tmp / "empty.tsv", "");
  spit(tmp / "rels.txt", "r\n");
  CHECK(rtf_run({"decode", "--input", tmp / "empty.tsv", "--relations", tmp / "rels.txt", "--output", tmp / "o.tsv"})
            .code == kExitOk);
  CHECK(slurp(tmp / "o.tsv").empty());
}

TEST_CASE("decode: malformed dump leaves no output") {
  Scratch tmp;
  spit(tmp / "bad.tsv", "#sentence\t0\t3\nr\t0\t9\tSP\n");
  spit(tmp / "rels.txt", "r\n");
  const auto r = rtf_run({"decode", "--input", tmp / "bad.tsv", "--relations", tmp / "rels.txt", "--output", tmp / "o.tsv"});
  CHECK(r.code == kExitData);
  CHECK_FALSE(fs::exists(tmp / "o.tsv"));
}

TEST_CASE("train, eval and dump-scores") {
  Scratch tmp;
  REQUIRE(rtf_run({"gen-data", "--set", "count=20", "--output", tmp / "c.jsonl"}).code == kExitOk);
  const std::vector<std::string> train_args{"train", "--train", tmp / "c.jsonl", "--dev", tmp / "c.jsonl",
                                            "--checkpoint", tmp / "m.ckpt", "--metrics", tmp / "m.log",
                                            "--set", "hidden=8", "--set", "epochs=2", "--quiet"};
  const auto t = rtf_run(train_args);
  REQUIRE(t.code == kExitOk);
  CHECK(t.out.find("best_epoch\t") == 0);
  const std::string log = slurp(tmp / "m.log");
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);

  const auto e = rtf_run({"eval", "--checkpoint", tmp / "m.ckpt", "--input", tmp / "c.jsonl", "--output", tmp / "r.tsv"});
  CHECK(e.code == kExitOk);
  CHECK(e.out.find("match: exact") != std::string::npos);
  CHECK(slurp(tmp / "r.tsv").find("overall.f1\t") != std::string::npos);

  CHECK(rtf_run({"eval", "--checkpoint", tmp / "m.ckpt", "--input", tmp / "c.jsonl", "--variant", "partial",
                 "--match", "exact"})
            .code == kExitUsage);

  const auto d = rtf_run({"dump-scores", "--checkpoint", tmp / "m.ckpt", "--text", "e1 f2 e3", "--output", tmp / "s.csv"});
  CHECK(d.code == kExitOk);
  const std::string csv = slurp(tmp / "s.csv");
  CHECK(csv.rfind("kind,relation,tag,row,col,value\n", 0) == 0);
  // 3x3 cells, 4 tags, shared plus 3 relations.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 9 * 4 * 4);
  CHECK(rtf_run({"dump-scores", "--checkpoint", tmp / "m.ckpt", "--input", tmp / "c.jsonl", "--index", "99",
                 "--output", tmp / "s2.csv"})
            .code == kExitData);

  auto bad = train_args;
  bad.push_back("--set");
  bad.push_back("dropout=0.1");
  CHECK(rtf_run(bad).code == kExitUsage);
  CHECK(rtf_run({"eval", "--checkpoint", tmp / "c.jsonl", "--input", tmp / "c.jsonl"}).code == kExitData);
}

TEST_CASE("gradcheck reports and exits by tolerance") {
  const auto ok = rtf_run({"gradcheck", "--d", "8", "--length", "3"});
  CHECK(ok.code == kExitOk);
  CHECK(ok.out.find("max_relative_error\t") != std::string::npos);
  CHECK(ok.out.find("kink_points\t") != std::string::npos);
  CHECK(rtf_run({"gradcheck", "--d", "8", "--length", "3", "--tolerance", "0"}).code == kExitNumeric);
}
