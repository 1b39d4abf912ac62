#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rtf/checkpoint.hpp"
#include "rtf/decoding.hpp"
#include "rtf/evaluation.hpp"
#include "rtf/model.hpp"

namespace rtf {

struct TrainConfig {
  double lr = 3e-3;
  int batch_size = 8;
  int epochs = 50;
  std::uint64_t seed = 1;
  long total_steps = 0;   // decay horizon; 0 means epochs * batches per epoch
  double clip_norm = 0;   // global gradient norm cap; 0 disables clipping
  int patience = 0;       // stop after this many epochs without a dev F1 gain; 0 disables
  int threads = 1;
  MatchMode dev_match = MatchMode::Exact;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;
  // Applies one key=value override. Returns false for unknown keys.
  bool set(const std::string& key, const std::string& value);
};

// lr * (1 - step / total), floored at zero.
double lr_at(long step, long total_steps, double lr);

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
};

AdamState make_adam_state(const ParamStore& params);

// One bias-corrected Adam update from the gradients stored in `params`, at
// learning rate `lr`. Throws NumericError naming the first parameter with a
// non-finite gradient; no parameter is modified in that case.
void adam_step(ParamStore& params, AdamState& state, double lr, const TrainConfig& config);

// Scales all gradients so their global L2 norm is at most `max_norm`.
// Returns the norm before scaling.
double clip_gradients(ParamStore& params, double max_norm);

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  Prf dev;
};

struct TrainResult {
  ParamStore best;     // parameters of the best dev F1 (the final epoch without dev data)
  int best_epoch = 0;
  std::vector<EpochMetrics> history;
  std::size_t skipped = 0;  // over-length training sentences
};

// Called after every epoch; returning false stops training.
using EpochCallback = std::function<bool(const EpochMetrics&, const ParamStore&)>;

// Adam with a linearly decaying learning rate over shuffled mini-batches.
// Each sentence's gradient is computed on its own tape; a batch's gradient is
// the mean of these, summed in batch order, so results do not depend on the
// thread count. Sentences longer than the model's max length are skipped.
// Throws DataError if no trainable sentence remains.
TrainResult train(const RtfModel& model, ParamStore params, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const TrainConfig& config,
                  std::ostream* progress = nullptr, const EpochCallback& on_epoch = {});

// Decoded triples for every sentence (no length limit).
std::vector<TripleSet> predict_corpus(const RtfModel& model, const ParamStore& params,
                                      std::span<const Example> examples, int threads = 1);

// "epoch<TAB>train_loss<TAB>dev_precision<TAB>dev_recall<TAB>dev_f1" lines.
void write_metrics_log(std::ostream& out, const std::vector<EpochMetrics>& history);

// Model configuration, encoder description and vocabulary go into the
// checkpoint metadata so that a model can be rebuilt from the file alone.
Checkpoint make_checkpoint(const RtfModel& model, const ParamStore& params,
                           const std::vector<std::string>& relations);

struct LoadedModel {
  std::unique_ptr<RtfModel> model;
  ParamStore params;
  std::vector<std::string> relations;
};

// Throws DataError if the parameters do not match the described model.
LoadedModel model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace rtf
