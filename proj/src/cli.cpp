#include "rtf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "rtf/checkpoint.hpp"
#include "rtf/data.hpp"
#include "rtf/decoding.hpp"
#include "rtf/evaluation.hpp"
#include "rtf/gradcheck.hpp"
#include "rtf/model.hpp"
#include "rtf/tagging.hpp"
#include "rtf/training.hpp"

namespace rtf {

namespace {

// Raised for inconsistent flags or config keys; maps to kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusFlags {
  std::string format = "json-lines";
  std::string variant = "exact";
  std::string relations;

  void add(CLI::App* cmd) {
    cmd->add_option("--format", format, "json-lines or json-array")->check(CLI::IsMember({"json-lines", "json-array"}));
    cmd->add_option("--variant", variant, "exact or partial entity annotation")
        ->check(CLI::IsMember({"exact", "partial"}));
    cmd->add_option("--relations", relations, "relation inventory file, one name per line");
  }

  std::optional<RelationInventory> inventory() const {
    if (relations.empty()) return std::nullopt;
    return read_relation_file(relations);
  }

  Corpus load(const std::string& path, const std::optional<RelationInventory>& inv, std::ostream& err) const {
    Corpus c = load_corpus(path, parse_corpus_format(format), parse_variant(variant), inv);
    report_counters(err, c);
    return c;
  }
};

// key=value lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](const std::string& s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

void apply_settings(const std::vector<std::pair<std::string, std::string>>& kv, ModelConfig* model,
                    TrainConfig* train) {
  for (const auto& [k, v] : kv) {
    try {
      if (model && model->set(k, v)) continue;
      if (train && train->set(k, v)) continue;
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    throw UsageError("unknown config key '" + k + "'");
  }
}

void write_triples(std::ostream& out, std::size_t id, const TripleSet& triples, const RelationInventory& inv) {
  out << "#sentence\t" << id << '\n';
  for (const auto& t : triples)
    out << t.subject.start << '\t' << t.subject.end << '\t' << inv.name(t.relation) << '\t' << t.object.start
        << '\t' << t.object.end << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relation triple extraction by entity-pair regions on token-pair tables", "rtf"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  // Subcommands without --seed keep their own defaults (config file, spec).
  std::uint64_t seed = 7;
  bool seed_given = false;
  int threads = 1;
  std::string config_path;
  std::vector<std::string> settings;
  auto common = [&](CLI::App* cmd, bool with_config) {
    cmd->add_option("--seed", seed, "random seed")->each([&](const std::string&) { seed_given = true; });
    cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    if (with_config) {
      cmd->add_option("--config", config_path, "key=value configuration file");
      cmd->add_option("--set", settings, "configuration override key=value (repeatable)");
    }
  };

  // encode
  auto* encode = app.add_subcommand("encode", "write gold tag grids of a corpus as a grid dump");
  std::string enc_in, enc_out, enc_rel_out;
  CorpusFlags enc_flags;
  encode->add_option("--input", enc_in, "corpus file")->required();
  encode->add_option("--output", enc_out, "grid dump output")->required();
  encode->add_option("--relations-output", enc_rel_out, "write the relation inventory here");
  enc_flags.add(encode);

  // decode
  auto* decode = app.add_subcommand("decode", "decode a grid dump into triples");
  std::string dec_in, dec_out, dec_rel;
  decode->add_option("--input", dec_in, "grid dump")->required();
  decode->add_option("--relations", dec_rel, "relation inventory file")->required();
  decode->add_option("--output", dec_out, "triples output (TSV)")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string tr_train, tr_dev, tr_ckpt, tr_metrics, tr_embeddings;
  bool tr_quiet = false;
  CorpusFlags tr_flags;
  std::string tr_match;
  train_cmd->add_option("--train", tr_train, "training corpus")->required();
  train_cmd->add_option("--dev", tr_dev, "development corpus for model selection");
  train_cmd->add_option("--checkpoint", tr_ckpt, "checkpoint output")->required();
  train_cmd->add_option("--metrics", tr_metrics, "per-epoch metrics log output");
  train_cmd->add_option("--embeddings", tr_embeddings, "external token embeddings (token TAB values)");
  train_cmd->add_option("--match", tr_match, "dev matching mode")->check(CLI::IsMember({"partial", "exact"}));
  train_cmd->add_flag("--quiet", tr_quiet, "no per-epoch progress");
  tr_flags.add(train_cmd);
  common(train_cmd, true);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
  std::string ev_ckpt, ev_in, ev_out, ev_match;
  CorpusFlags ev_flags;
  eval_cmd->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
  eval_cmd->add_option("--input", ev_in, "corpus file")->required();
  eval_cmd->add_option("--output", ev_out, "key<TAB>value report output");
  eval_cmd->add_option("--match", ev_match, "partial or exact")->check(CLI::IsMember({"partial", "exact"}));
  ev_flags.add(eval_cmd);
  common(eval_cmd, false);

  // stats
  auto* stats = app.add_subcommand("stats", "corpus statistics");
  std::string st_in;
  CorpusFlags st_flags;
  stats->add_option("--input", st_in, "corpus file")->required();
  st_flags.add(stats);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full model gradient");
  int gc_d = 8, gc_bottleneck = 0, gc_blocks = 1, gc_relations = 2, gc_length = 4;
  double gc_h = 1e-4, gc_tol = 1e-4;
  gradcheck->add_option("--d", gc_d, "hidden size")->check(CLI::Range(4, 256));
  gradcheck->add_option("--bottleneck", gc_bottleneck, "bottleneck width (default d/2)");
  gradcheck->add_option("--blocks", gc_blocks, "conv blocks")->check(CLI::Range(1, 8));
  gradcheck->add_option("--relations", gc_relations, "relation count")->check(CLI::Range(1, 16));
  gradcheck->add_option("--length", gc_length, "sentence length")->check(CLI::Range(1, 32));
  gradcheck->add_option("--step", gc_h, "finite-difference step");
  gradcheck->add_option("--tolerance", gc_tol, "maximum accepted relative error");
  common(gradcheck, false);

  // dump-scores
  auto* dump = app.add_subcommand("dump-scores", "write shared and per-relation logits as CSV");
  std::string ds_ckpt, ds_in, ds_text, ds_out;
  std::size_t ds_index = 0;
  CorpusFlags ds_flags;
  dump->add_option("--checkpoint", ds_ckpt, "trained checkpoint")->required();
  auto* ds_in_opt = dump->add_option("--input", ds_in, "corpus file");
  dump->add_option("--text", ds_text, "raw sentence")->excludes(ds_in_opt);
  dump->add_option("--index", ds_index, "sentence index within --input");
  dump->add_option("--output", ds_out, "CSV output")->required();
  ds_flags.add(dump);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  std::string gd_spec, gd_out, gd_rel_out;
  std::vector<std::string> gd_settings;
  gen->add_option("--spec", gd_spec, "key=value generator spec");
  gen->add_option("--set", gd_settings, "spec override key=value (repeatable)");
  gen->add_option("--output", gd_out, "JSON lines output")->required();
  gen->add_option("--relations-output", gd_rel_out, "write the relation inventory here");
  gen->add_option("--seed", seed, "random seed")->each([&](const std::string&) { seed_given = true; });

  try {
    std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rev.begin(), rev.end());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto write_relations = [](const std::string& path, const RelationInventory& inv) {
    write_atomically(path, [&](std::ostream& o) {
      for (const auto& n : inv.names()) o << n << '\n';
    });
  };

  try {
    if (*encode) {
      const Corpus c = enc_flags.load(enc_in, enc_flags.inventory(), err);
      std::vector<GridDumpEntry> entries;
      std::size_t conflicts = 0;
      for (std::size_t i = 0; i < c.examples.size(); ++i) {
        const auto& ex = c.examples[i];
        auto enc = encode_tags(ex.sentence, ex.triples, c.inventory);
        conflicts += enc.conflicts.size();
        entries.push_back({i, static_cast<int>(ex.sentence.size()), std::move(enc.grids)});
      }
      if (conflicts) err << "warning: " << conflicts << " tag collisions resolved by priority SP > UL > BR\n";
      write_atomically(enc_out, [&](std::ostream& o) { write_grid_dump(o, entries, c.inventory); });
      if (!enc_rel_out.empty()) write_relations(enc_rel_out, c.inventory);
      return kExitOk;
    }

    if (*decode) {
      const RelationInventory inv = read_relation_file(dec_rel);
      std::ifstream in(dec_in);
      if (!in) throw DataError("cannot open grid dump " + dec_in);
      const auto entries = read_grid_dump(in, inv);
      write_atomically(dec_out, [&](std::ostream& o) {
        for (const auto& e : entries) write_triples(o, e.id, decode_all(e.grids, e.n, inv.size()), inv);
      });
      return kExitOk;
    }

    if (*gen) {
      SyntheticSpec spec;
      if (!gd_spec.empty()) {
        std::ifstream in(gd_spec);
        if (!in) throw DataError("cannot open spec " + gd_spec);
        spec = read_synthetic_spec(in);
      }
      for (const auto& s : gd_settings) {
        const auto [k, v] = split_assignment(s);
        if (!spec.set(k, v)) throw UsageError("unknown spec key '" + k + "'");
      }
      if (seed_given) spec.seed = seed;
      const Corpus c = generate_synthetic(spec);
      write_atomically(gd_out, [&](std::ostream& o) { write_corpus_json_lines(o, c); });
      if (!gd_rel_out.empty()) write_relations(gd_rel_out, c.inventory);
      return kExitOk;
    }

    if (*stats) {
      const Corpus c = st_flags.load(st_in, st_flags.inventory(), err);
      write_stats(out, corpus_stats(c.examples, c.inventory.size()));
      return kExitOk;
    }

    if (*train_cmd) {
      ModelConfig mc;
      TrainConfig tc;
      if (!config_path.empty()) apply_settings(read_key_values(config_path), &mc, &tc);
      std::vector<std::pair<std::string, std::string>> overrides;
      for (const auto& s : settings) overrides.push_back(split_assignment(s));
      apply_settings(overrides, &mc, &tc);
      if (seed_given) tc.seed = seed;
      tc.threads = threads;
      if (!tr_match.empty()) tc.dev_match = parse_match_mode(tr_match);
      else if (tr_flags.variant == "partial") tc.dev_match = MatchMode::Partial;
      if (tr_flags.variant == "partial" && tc.dev_match == MatchMode::Exact)
        throw UsageError("the partial variant only supports --match partial");

      const Corpus train_corpus = tr_flags.load(tr_train, tr_flags.inventory(), err);
      Corpus dev_corpus;
      if (!tr_dev.empty()) dev_corpus = tr_flags.load(tr_dev, train_corpus.inventory, err);
      if (train_corpus.inventory.size() == 0) throw DataError("no relations found in " + tr_train);

      mc.relations = static_cast<int>(train_corpus.inventory.size());
      std::shared_ptr<const TokenEncoder> encoder;
      if (!tr_embeddings.empty()) {
        encoder = std::make_shared<ExternalEncoder>(ExternalEmbeddings::load(tr_embeddings), tr_embeddings);
      } else {
        std::vector<Sentence> sentences;
        for (const auto& ex : train_corpus.examples) sentences.push_back(ex.sentence);
        auto vocab = Vocabulary::build(sentences);
        mc.vocab_size = static_cast<int>(vocab.size());
        encoder = std::make_shared<WindowEncoder>(std::move(vocab));
      }
      std::unique_ptr<RtfModel> model;
      try {
        model = std::make_unique<RtfModel>(mc, encoder);
        tc.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const TrainResult r = train(*model, model->init_params(tc.seed), train_corpus.examples, dev_corpus.examples,
                                  tc, tr_quiet ? nullptr : &err);
      save_checkpoint(tr_ckpt, make_checkpoint(*model, r.best, train_corpus.inventory.names()));
      if (!tr_metrics.empty())
        write_atomically(tr_metrics, [&](std::ostream& o) { write_metrics_log(o, r.history); });
      out << "best_epoch\t" << r.best_epoch << '\n';
      if (!r.history.empty()) {
        const auto& best = r.history[static_cast<std::size_t>(r.best_epoch - 1)];
        out << "best_dev_f1\t" << best.dev.f1 << '\n';
      }
      return kExitOk;
    }

    if (*eval_cmd) {
      const LoadedModel lm = model_from_checkpoint(load_checkpoint(ev_ckpt));
      const RelationInventory inv(lm.relations);
      MatchMode mode = ev_flags.variant == "partial" ? MatchMode::Partial : MatchMode::Exact;
      if (!ev_match.empty()) mode = parse_match_mode(ev_match);
      if (ev_flags.variant == "partial" && mode == MatchMode::Exact)
        throw UsageError("the partial variant only supports --match partial");
      if (!ev_flags.relations.empty() && ev_flags.inventory()->names() != inv.names())
        throw UsageError("--relations does not match the checkpoint's relation inventory");
      const Corpus c = ev_flags.load(ev_in, inv, err);
      const auto pred = predict_corpus(*lm.model, lm.params, c.examples, threads);
      const EvalReport report = evaluate(c.examples, pred, mode);
      write_report_table(out, report);
      if (!ev_out.empty()) write_atomically(ev_out, [&](std::ostream& o) { write_report_lines(o, report); });
      return kExitOk;
    }

    if (*dump) {
      const LoadedModel lm = model_from_checkpoint(load_checkpoint(ds_ckpt));
      const RelationInventory inv(lm.relations);
      Sentence sentence;
      if (!ds_text.empty()) {
        sentence = Sentence::from_text(ds_text);
      } else if (!ds_in.empty()) {
        const Corpus c = ds_flags.load(ds_in, inv, err);
        if (ds_index >= c.examples.size())
          throw DataError("--index " + std::to_string(ds_index) + " is past the " +
                          std::to_string(c.examples.size()) + " sentences of " + ds_in);
        sentence = c.examples[ds_index].sentence;
      } else {
        throw UsageError("dump-scores needs --input or --text");
      }
      const ScoreGrids g = lm.model->scores(lm.params, sentence);
      const std::size_t n = sentence.size();
      const std::size_t r = inv.size();
      write_atomically(ds_out, [&](std::ostream& o) {
        o << "kind,relation,tag,row,col,value\n";
        char buf[64];
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            for (int c = 0; c < kNumTags; ++c) {
              std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(g.shared[(i * n + j) * kNumTags + c]));
              o << "shared,," << tag_name(static_cast<Tag>(c)) << ',' << i << ',' << j << ',' << buf << '\n';
            }
        for (std::size_t rel = 0; rel < r; ++rel)
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
              for (int c = 0; c < kNumTags; ++c) {
                const double v = g.residual[((i * n + j) * r + rel) * kNumTags + static_cast<std::size_t>(c)];
                std::snprintf(buf, sizeof buf, "%.17g", v);
                o << "residual," << inv.name(static_cast<RelationId>(rel)) << ',' << tag_name(static_cast<Tag>(c))
                  << ',' << i << ',' << j << ',' << buf << '\n';
              }
      });
      return kExitOk;
    }

    if (*gradcheck) {
      ModelConfig mc;
      mc.hidden = gc_d;
      mc.bottleneck = gc_bottleneck;
      mc.blocks = gc_blocks;
      mc.relations = gc_relations;
      std::vector<std::string> tokens;
      for (int i = 0; i < gc_length; ++i) tokens.push_back("t" + std::to_string(i));
      Sentence s{tokens};
      Vocabulary vocab(tokens);
      mc.vocab_size = static_cast<int>(vocab.size());
      std::unique_ptr<RtfModel> model;
      try {
        model = std::make_unique<RtfModel>(mc, std::make_shared<WindowEncoder>(vocab));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      Rng rng(seed);
      std::vector<TagGrid> gold;
      for (int r = 0; r < gc_relations; ++r) {
        gold.emplace_back(r, gc_length);
        for (int i = 0; i < gc_length; ++i)
          for (int j = 0; j < gc_length; ++j) gold.back().set(i, j, static_cast<Tag>(rng.randint(0, kNumTags - 1)));
      }
      const ScalarFn f = [&](Tape& t, const ParamStore& ps) { return model->loss(t, ps, s, gold); };
      ParamStore params = model->init_params(seed);
      const GradCheckResult plain = grad_check(f, params, gc_h);
      const GradCheckResult kink = grad_check(f, params, GradCheckOptions{gc_h, 1e-7, 1e-6});
      out << "parameters\t" << kink.checked << '\n'
          << "max_relative_error\t" << kink.max_rel_error << '\n'
          << "max_abs_error\t" << kink.max_abs_error << '\n'
          << "worst\t" << kink.worst_param << '[' << kink.worst_index << "]\n"
          << "kink_points\t" << kink.kinks << '\n'
          << "plain_max_relative_error\t" << plain.max_rel_error << '\n';
      if (!(kink.max_rel_error < gc_tol)) {
        err << "rtf: gradient check failed: " << kink.max_rel_error << " >= " << gc_tol << '\n';
        return kExitNumeric;
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "rtf: usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "rtf: numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "rtf: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "rtf: error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace rtf
