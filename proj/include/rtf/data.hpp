#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtf/core.hpp"

namespace rtf {

enum class CorpusFormat { JsonLines, JsonArray };
// "json-lines" or "json-array"; throws DataError otherwise.
CorpusFormat parse_corpus_format(const std::string& name);

// Exact variants annotate whole entity strings; partial variants only the
// last word of each entity.
enum class Variant { Exact, Partial };
Variant parse_variant(const std::string& name);
const char* variant_name(Variant v);

struct RawTriple {
  std::string subject;
  std::string relation;
  std::string object;
};

struct RawExample {
  std::string text;
  std::vector<RawTriple> triples;
};

// Reads records in any of the known field layouts:
//   {"text", "triple_list": [[s, r, o], ...]}
//   {"text", "relation_list": [{"subject", "predicate", "object"}, ...]}
//   {"text", "spo_list": [[s, r, o], ...]}
//   {"sentText", "relationMentions": [{"em1Text", "label", "em2Text"}, ...]}
// Throws DataError naming the line (json-lines) or record (json-array).
std::vector<RawExample> read_raw_examples(std::istream& in, CorpusFormat format);

// First contiguous, case-sensitive occurrence of `entity` in `tokens`.
std::optional<Span> locate_span(std::span<const std::string> tokens, std::span<const std::string> entity);

// One relation name per non-empty line.
RelationInventory read_relation_file(const std::filesystem::path& path);
// Sorted distinct relation names of the examples.
RelationInventory infer_relations(std::span<const RawExample> raw);

struct LoadCounters {
  std::size_t records = 0;
  std::size_t kept = 0;
  std::size_t skipped_unlocatable = 0;       // records dropped: an entity string was not found
  std::size_t skipped_unknown_relation = 0;  // records dropped: relation not in the inventory
  std::size_t ambiguous_mentions = 0;        // triple arguments whose string occurs more than once
};

struct Corpus {
  RelationInventory inventory;
  std::vector<Example> examples;
  std::string source;
  Variant variant = Variant::Exact;
  LoadCounters counters;
};

// Tokenizes on whitespace and localizes entity strings at their first
// occurrence. In the partial variant each entity becomes the single-token
// span of its last word. Records with unlocatable entities or unknown
// relations are skipped and counted.
Corpus build_corpus(std::span<const RawExample> raw, const RelationInventory& inventory, Variant variant,
                    std::string source = {});

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, Variant variant,
                   const std::optional<RelationInventory>& inventory = std::nullopt);

// Prints the counters as "warning: ..." lines when non-zero.
void report_counters(std::ostream& out, const Corpus& corpus);

// Writes {"text", "triple_list"} JSON lines using the entity surface strings.
void write_corpus_json_lines(std::ostream& out, const Corpus& corpus);

// Synthetic corpus description. Read from key=value lines.
struct SyntheticSpec {
  int vocab_size = 50;
  int relations = 3;
  int min_length = 5;
  int max_length = 15;
  int min_triples = 1;
  int max_triples = 3;
  int max_entity_length = 3;
  int count = 500;
  std::uint64_t seed = 1;
  // Relative weights of sentence kinds, indexed by OverlapPattern order
  // (Normal, SEO, EPO, HTO).
  std::array<double, 4> mix{0.5, 0.25, 0.15, 0.10};

  bool set(const std::string& key, const std::string& value);
  // Throws DataError for malformed or infeasible specs.
  void validate() const;
};

SyntheticSpec read_synthetic_spec(std::istream& in);

// Sentences built from filler words and entity words drawn from disjoint
// word classes; the gold triples follow from the classes:
//   a subject entity relates to every object entity in its sentence
//   (objects of class A_r under relation r, of class B_r under r and r+1);
//   an entity of class H_r relates to itself under r.
// Each sentence realizes one kind: Normal (one subject, one A object), SEO
// (one subject, several objects), EPO (one subject, one B object, optionally
// an extra A object) or HTO (one or more H entities). Entity words never
// repeat inside a sentence, so surface strings localize unambiguously.
Corpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace rtf
