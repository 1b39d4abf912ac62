#include "rtf/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

namespace rtf {

namespace {

using Key = std::array<int, 5>;

// Multiplicity of each key among the distinct triples.
std::map<Key, std::size_t> project(const TripleSet& triples, MatchMode mode) {
  std::map<Key, std::size_t> keys;
  for (const auto& t : triples) {
    if (mode == MatchMode::Partial)
      ++keys[{t.relation, t.subject.end, t.object.end, 0, 0}];
    else
      ++keys[{t.relation, t.subject.start, t.subject.end, t.object.start, t.object.end}];
  }
  return keys;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string bucket_label(int b) { return b == kBuckets ? "T>=5" : "T=" + std::to_string(b); }

}  // namespace

const char* match_mode_name(MatchMode mode) { return mode == MatchMode::Partial ? "partial" : "exact"; }

MatchMode parse_match_mode(const std::string& name) {
  if (name == "partial") return MatchMode::Partial;
  if (name == "exact") return MatchMode::Exact;
  throw DataError("unknown match mode '" + name + "' (expected partial or exact)");
}

MatchCounts match_counts(const TripleSet& pred, const TripleSet& gold, MatchMode mode) {
  const auto p = project(pred, mode);
  const auto g = project(gold, mode);
  // One-to-one matching within each key: two predictions sharing tail tokens
  // cannot both claim the same gold triple.
  MatchCounts c;
  c.pred = pred.size();
  c.gold = gold.size();
  for (const auto& [k, n] : p) {
    const auto it = g.find(k);
    if (it != g.end()) c.tp += std::min(n, it->second);
  }
  return c;
}

Prf micro_prf(const MatchCounts& c) {
  Prf r;
  if (c.pred > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.pred);
  if (c.gold > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.gold);
  if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

const char* pattern_name(OverlapPattern p) {
  switch (p) {
    case OverlapPattern::Normal: return "Normal";
    case OverlapPattern::SEO: return "SEO";
    case OverlapPattern::EPO: return "EPO";
    case OverlapPattern::HTO: return "HTO";
  }
  return "?";
}

std::set<OverlapPattern> classify_overlap(std::span<const RelationalTriple> triples) {
  const TripleSet distinct(triples.begin(), triples.end());
  std::set<OverlapPattern> out;
  if (distinct.empty()) return out;

  const std::vector<RelationalTriple> t(distinct.begin(), distinct.end());
  for (std::size_t a = 0; a < t.size(); ++a) {
    if (spans_overlap(t[a].subject, t[a].object)) out.insert(OverlapPattern::HTO);
    for (std::size_t b = a + 1; b < t.size(); ++b) {
      if (t[a].subject == t[b].subject && t[a].object == t[b].object) {
        out.insert(OverlapPattern::EPO);
      } else if (t[a].subject == t[b].subject || t[a].subject == t[b].object ||
                 t[a].object == t[b].subject || t[a].object == t[b].object) {
        out.insert(OverlapPattern::SEO);
      }
    }
  }
  if (out.empty()) out.insert(OverlapPattern::Normal);
  return out;
}

OverlapPattern exclusive_pattern(const std::set<OverlapPattern>& p) {
  for (auto q : {OverlapPattern::EPO, OverlapPattern::SEO, OverlapPattern::HTO})
    if (p.count(q)) return q;
  return OverlapPattern::Normal;
}

int triple_bucket(std::size_t n) { return static_cast<int>(std::min<std::size_t>(n, kBuckets)); }

CorpusStats corpus_stats(std::span<const Example> examples, std::size_t relation_count) {
  CorpusStats s;
  s.relations = relation_count;
  double length_sum = 0, area_sum = 0;
  for (const auto& ex : examples) {
    ++s.sentences;
    const TripleSet distinct(ex.triples.begin(), ex.triples.end());
    if (distinct.empty()) {
      ++s.empty_sentences;
      continue;
    }
    s.triples += distinct.size();
    const auto patterns = classify_overlap(ex.triples);
    for (auto p : patterns) ++s.pattern_counts[static_cast<std::size_t>(p)];
    ++s.exclusive_counts[static_cast<std::size_t>(exclusive_pattern(patterns))];
    ++s.bucket_counts[static_cast<std::size_t>(triple_bucket(distinct.size()) - 1)];
    for (const auto& t : distinct) {
      length_sum += t.subject.length() + t.object.length();
      area_sum += static_cast<double>(t.subject.length()) * t.object.length();
    }
  }
  if (s.triples > 0) {
    s.avg_entity_length = length_sum / (2.0 * static_cast<double>(s.triples));
    s.avg_area = area_sum / static_cast<double>(s.triples);
  }
  return s;
}

void write_stats(std::ostream& out, const CorpusStats& s) {
  out << "sentences\t" << s.sentences << '\n'
      << "triples\t" << s.triples << '\n'
      << "relations\t" << s.relations << '\n'
      << "empty_sentences\t" << s.empty_sentences << '\n';
  for (auto p : kOverlapPatterns)
    out << "pattern." << pattern_name(p) << '\t' << s.pattern_counts[static_cast<std::size_t>(p)] << '\n';
  for (auto p : kOverlapPatterns)
    out << "exclusive." << pattern_name(p) << '\t' << s.exclusive_counts[static_cast<std::size_t>(p)] << '\n';
  for (int b = 1; b <= kBuckets; ++b)
    out << "bucket." << bucket_label(b) << '\t' << s.bucket_counts[static_cast<std::size_t>(b - 1)] << '\n';
  out << "avg_entity_length\t" << fixed(s.avg_entity_length) << '\n'
      << "avg_area\t" << fixed(s.avg_area) << '\n';
}

EvalReport evaluate(std::span<const Example> gold, std::span<const TripleSet> pred, MatchMode mode) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("evaluate: " + std::to_string(gold.size()) + " gold sentences but " +
                                std::to_string(pred.size()) + " predictions");
  EvalReport r;
  r.mode = mode;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const TripleSet g(gold[i].triples.begin(), gold[i].triples.end());
    const MatchCounts c = match_counts(pred[i], g, mode);
    r.overall += c;
    if (g.empty()) continue;
    for (auto p : classify_overlap(gold[i].triples)) {
      r.by_pattern[static_cast<std::size_t>(p)] += c;
      ++r.pattern_sentences[static_cast<std::size_t>(p)];
    }
    const auto b = static_cast<std::size_t>(triple_bucket(g.size()) - 1);
    r.by_bucket[b] += c;
    ++r.bucket_sentences[b];
  }
  return r;
}

void write_report_table(std::ostream& out, const EvalReport& r) {
  auto row = [&](const std::string& name, std::size_t sentences, const MatchCounts& c) {
    const Prf p = micro_prf(c);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s %9zu %8.4f %8.4f %8.4f %7zu %7zu %7zu\n", name.c_str(), sentences,
                  p.precision, p.recall, p.f1, c.tp, c.pred, c.gold);
    out << buf;
  };
  out << "match: " << match_mode_name(r.mode) << '\n';
  char head[160];
  std::snprintf(head, sizeof head, "%-8s %9s %8s %8s %8s %7s %7s %7s\n", "", "sentences", "prec", "rec", "f1",
                "tp", "pred", "gold");
  out << head;
  std::size_t total = 0;
  for (auto n : r.bucket_sentences) total += n;
  row("overall", total, r.overall);
  for (auto p : kOverlapPatterns)
    row(pattern_name(p), r.pattern_sentences[static_cast<std::size_t>(p)], r.by_pattern[static_cast<std::size_t>(p)]);
  for (int b = 1; b <= kBuckets; ++b)
    row(bucket_label(b), r.bucket_sentences[static_cast<std::size_t>(b - 1)],
        r.by_bucket[static_cast<std::size_t>(b - 1)]);
}

void write_report_lines(std::ostream& out, const EvalReport& r) {
  auto emit = [&](const std::string& prefix, const MatchCounts& c) {
    const Prf p = micro_prf(c);
    out << prefix << ".precision\t" << fixed(p.precision) << '\n'
        << prefix << ".recall\t" << fixed(p.recall) << '\n'
        << prefix << ".f1\t" << fixed(p.f1) << '\n'
        << prefix << ".tp\t" << c.tp << '\n'
        << prefix << ".pred\t" << c.pred << '\n'
        << prefix << ".gold\t" << c.gold << '\n';
  };
  out << "match\t" << match_mode_name(r.mode) << '\n';
  emit("overall", r.overall);
  for (auto p : kOverlapPatterns) emit(std::string("pattern.") + pattern_name(p), r.by_pattern[static_cast<std::size_t>(p)]);
  for (int b = 1; b <= kBuckets; ++b)
    emit("bucket." + bucket_label(b), r.by_bucket[static_cast<std::size_t>(b - 1)]);
}

}  // namespace rtf
