#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rtf/core.hpp"
#include "rtf/decoding.hpp"

namespace rtf {

enum class MatchMode { Partial, Exact };

const char* match_mode_name(MatchMode mode);
// Accepts "partial" and "exact". Throws DataError otherwise.
MatchMode parse_match_mode(const std::string& name);

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t pred = 0;
  std::size_t gold = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    pred += o.pred;
    gold += o.gold;
    return *this;
  }
  bool operator==(const MatchCounts&) const = default;
};

// Partial compares (relation, subject end, object end); Exact compares the
// relation and both full spans. pred and gold count distinct triples; tp is
// the size of a maximum one-to-one matching between triples with equal keys,
// so exact tp never exceeds partial tp. With single-token spans this is the
// count over deduplicated projections.
MatchCounts match_counts(const TripleSet& pred, const TripleSet& gold, MatchMode mode);

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Zero when the corresponding denominator is zero.
Prf micro_prf(const MatchCounts& counts);

enum class OverlapPattern { Normal, SEO, EPO, HTO };
inline constexpr std::array<OverlapPattern, 4> kOverlapPatterns{
    OverlapPattern::Normal, OverlapPattern::SEO, OverlapPattern::EPO, OverlapPattern::HTO};

const char* pattern_name(OverlapPattern p);

// Multi-label pattern set of one sentence's gold triples:
//   EPO: two triples with the same ordered (subject, object) spans;
//   SEO: two triples with different ordered pairs sharing an entity span
//        (a reversed pair counts here);
//   HTO: a triple whose subject and object spans overlap;
//   Normal when none of these applies. Empty input gives an empty set.
std::set<OverlapPattern> classify_overlap(std::span<const RelationalTriple> triples);

// Single label by priority EPO > SEO > HTO > Normal.
OverlapPattern exclusive_pattern(const std::set<OverlapPattern>& patterns);

// Triple-count bucket 1..5, where 5 stands for five or more. Zero for none.
int triple_bucket(std::size_t distinct_triples);
inline constexpr int kBuckets = 5;

struct CorpusStats {
  std::size_t sentences = 0;
  std::size_t triples = 0;  // distinct per sentence
  std::size_t relations = 0;
  std::size_t empty_sentences = 0;
  std::array<std::size_t, 4> pattern_counts{};    // multi-label, by OverlapPattern
  std::array<std::size_t, 4> exclusive_counts{};  // one label per sentence
  std::array<std::size_t, kBuckets> bucket_counts{};
  double avg_entity_length = 0;  // over subject and object of every triple
  double avg_area = 0;           // subject length * object length
};

CorpusStats corpus_stats(std::span<const Example> examples, std::size_t relation_count);
void write_stats(std::ostream& out, const CorpusStats& stats);

struct EvalReport {
  MatchMode mode = MatchMode::Exact;
  MatchCounts overall;
  std::array<MatchCounts, 4> by_pattern{};
  std::array<std::size_t, 4> pattern_sentences{};
  std::array<MatchCounts, kBuckets> by_bucket{};
  std::array<std::size_t, kBuckets> bucket_sentences{};
};

// Scores predictions against gold, sentence by sentence. Pattern and bucket
// breakdowns follow the gold triples. Throws std::invalid_argument when the
// two lists differ in length.
EvalReport evaluate(std::span<const Example> gold, std::span<const TripleSet> pred, MatchMode mode);

// Aligned table of P/R/F1 for overall, per pattern and per bucket.
void write_report_table(std::ostream& out, const EvalReport& report);
// "key<TAB>value" lines, e.g. "overall.f1<TAB>0.912345".
void write_report_lines(std::ostream& out, const EvalReport& report);

}  // namespace rtf
