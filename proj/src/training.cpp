#include "rtf/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "rtf/ops.hpp"
#include "rtf/random.hpp"
#include "rtf/tagging.hpp"

namespace rtf {

namespace {

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

long to_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' expects an integer, got '" + value + "'");
  }
}

// Runs fn(i) for i in [0, n) on up to `threads` workers, i strided by worker.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Prepared {
  const Example* example;
  std::vector<TagGrid> gold;
};

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0)) throw std::invalid_argument("learning rate must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (total_steps < 0) throw std::invalid_argument("total steps must be >= 0");
  if (clip_norm < 0) throw std::invalid_argument("clip norm must be >= 0");
  if (patience < 0) throw std::invalid_argument("patience must be >= 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

bool TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "lr") lr = to_double(key, value);
  else if (key == "batch_size") batch_size = static_cast<int>(to_long(key, value));
  else if (key == "epochs") epochs = static_cast<int>(to_long(key, value));
  else if (key == "seed") seed = static_cast<std::uint64_t>(to_long(key, value));
  else if (key == "total_steps") total_steps = to_long(key, value);
  else if (key == "clip_norm") clip_norm = to_double(key, value);
  else if (key == "patience") patience = static_cast<int>(to_long(key, value));
  else if (key == "threads") threads = static_cast<int>(to_long(key, value));
  else if (key == "match") {
    try {
      dev_match = parse_match_mode(value);
    } catch (const DataError& e) {
      throw std::invalid_argument(e.what());
    }
  } else if (key == "beta1") beta1 = to_double(key, value);
  else if (key == "beta2") beta2 = to_double(key, value);
  else if (key == "adam_eps") adam_eps = to_double(key, value);
  else return false;
  return true;
}

double lr_at(long step, long total_steps, double lr) {
  if (total_steps <= 0) return lr;
  const double f = 1.0 - static_cast<double>(step) / static_cast<double>(total_steps);
  return lr * std::max(0.0, f);
}

AdamState make_adam_state(const ParamStore& params) {
  AdamState s;
  for (const auto& e : params) {
    s.m.emplace_back(e.value.shape());
    s.v.emplace_back(e.value.shape());
  }
  return s;
}

void adam_step(ParamStore& params, AdamState& state, double lr, const TrainConfig& c) {
  if (state.m.size() != params.size()) throw std::invalid_argument("adam state does not match parameters");
  for (const auto& e : params)
    if (!e.grad.all_finite()) throw NumericError("non-finite gradient in parameter " + e.name);

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1 - std::pow(c.beta1, t);
  const double bc2 = 1 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& e = params.entry(k);
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double g = static_cast<double>(e.grad[i]);
      const double mi = c.beta1 * static_cast<double>(m[i]) + (1 - c.beta1) * g;
      const double vi = c.beta2 * static_cast<double>(v[i]) + (1 - c.beta2) * g * g;
      m[i] = static_cast<real>(mi);
      v[i] = static_cast<real>(vi);
      const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + c.adam_eps);
      e.value[i] = static_cast<real>(static_cast<double>(e.value[i]) - update);
    }
  }
}

double clip_gradients(ParamStore& params, double max_norm) {
  double sq = 0;
  for (const auto& e : params)
    for (std::size_t i = 0; i < e.grad.size(); ++i) sq += static_cast<double>(e.grad[i]) * e.grad[i];
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const real scale = static_cast<real>(max_norm / norm);
    for (auto& e : params)
      for (std::size_t i = 0; i < e.grad.size(); ++i) e.grad[i] *= scale;
  }
  return norm;
}

std::vector<TripleSet> predict_corpus(const RtfModel& model, const ParamStore& params,
                                      std::span<const Example> examples, int threads) {
  std::vector<TripleSet> out(examples.size());
  const auto relations = static_cast<std::size_t>(model.config().relations);
  parallel_for(examples.size(), threads, [&](std::size_t i) {
    const Sentence& s = examples[i].sentence;
    out[i] = decode_all(model.predict(params, s), static_cast<int>(s.size()), relations);
  });
  return out;
}

TrainResult train(const RtfModel& model, ParamStore params, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const TrainConfig& config, std::ostream* progress,
                  const EpochCallback& on_epoch) {
  config.validate();
  const ModelConfig& mc = model.config();
  const auto relations = static_cast<std::size_t>(mc.relations);

  TrainResult result;
  std::vector<Prepared> data;
  for (const auto& ex : train_set) {
    if (ex.sentence.size() > static_cast<std::size_t>(mc.max_length)) {
      ++result.skipped;
      continue;
    }
    const int n = static_cast<int>(ex.sentence.size());
    data.push_back({&ex, encode_tags(n, ex.triples, relations).grids});
  }
  if (progress && result.skipped > 0)
    *progress << "warning: skipped " << result.skipped << " training sentences longer than "
              << mc.max_length << " tokens\n";
  if (data.empty()) throw DataError("no trainable sentences in the training set");

  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const long batches_per_epoch = static_cast<long>((data.size() + batch - 1) / batch);
  const long total = config.total_steps > 0 ? config.total_steps : batches_per_epoch * config.epochs;

  Rng rng(config.seed);
  AdamState adam = make_adam_state(params);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  double best_f1 = -1;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      std::vector<GradBuffer> grads(count);
      std::vector<double> losses(count);
      parallel_for(count, config.threads, [&](std::size_t k) {
        const Prepared& p = data[order[start + k]];
        Tape tape;
        const Var l = model.loss(tape, params, p.example->sentence, p.gold);
        losses[k] = static_cast<double>(l.value().item());
        tape.backward(l);
        grads[k] = make_grad_buffer(params);
        tape.accumulate_grads(params, grads[k]);
      });

      params.zero_grad();
      const real inv = real{1} / static_cast<real>(count);
      for (std::size_t k = 0; k < count; ++k) {
        loss_sum += losses[k];
        for (std::size_t j = 0; j < params.size(); ++j) params.entry(j).grad.add_(grads[k][j]);
      }
      for (auto& e : params)
        for (std::size_t i = 0; i < e.grad.size(); ++i) e.grad[i] *= inv;
      if (config.clip_norm > 0) clip_gradients(params, config.clip_norm);
      adam_step(params, adam, lr_at(adam.step, total, config.lr), config);
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(data.size());
    if (!dev_set.empty()) {
      const auto pred = predict_corpus(model, params, dev_set, config.threads);
      m.dev = micro_prf(evaluate(dev_set, pred, config.dev_match).overall);
    }
    result.history.push_back(m);

    const bool improved = dev_set.empty() || m.dev.f1 > best_f1;
    if (improved) {
      best_f1 = m.dev.f1;
      result.best = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (progress) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "epoch %d loss %.6f dev P %.4f R %.4f F1 %.4f%s\n", epoch, m.train_loss,
                    m.dev.precision, m.dev.recall, m.dev.f1, improved ? " *" : "");
      *progress << buf << std::flush;
    }
    if (on_epoch && !on_epoch(m, params)) break;
    if (config.patience > 0 && since_best >= config.patience) break;
  }
  result.best.zero_grad();
  return result;
}

void write_metrics_log(std::ostream& out, const std::vector<EpochMetrics>& history) {
  for (const auto& m : history) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.6f\t%.6f\t%.6f\n", m.epoch, m.train_loss, m.dev.precision,
                  m.dev.recall, m.dev.f1);
    out << buf;
  }
}

Checkpoint make_checkpoint(const RtfModel& model, const ParamStore& params,
                           const std::vector<std::string>& relations) {
  Checkpoint c;
  c.meta = model.config().to_meta();
  const auto enc = model.encoder().meta();
  if (enc.empty()) c.meta.emplace_back("encoder", "window");
  c.meta.insert(c.meta.end(), enc.begin(), enc.end());
  for (std::size_t r = 0; r < relations.size(); ++r) c.meta.emplace_back("relation." + std::to_string(r), relations[r]);
  if (const auto* w = dynamic_cast<const WindowEncoder*>(&model.encoder())) c.vocab = w->vocab().tokens();
  c.params = params;
  c.params.zero_grad();
  return c;
}

LoadedModel model_from_checkpoint(const Checkpoint& ckpt) {
  const ModelConfig config = ModelConfig::from_meta(ckpt.meta);
  std::shared_ptr<const TokenEncoder> encoder;
  const std::string* kind = ckpt.find_meta("encoder");
  if (kind && *kind == "external") {
    const std::string* source = ckpt.find_meta("external_embeddings");
    if (!source) throw DataError("checkpoint names an external encoder without an embedding file");
    encoder = std::make_shared<ExternalEncoder>(ExternalEmbeddings::load(*source), *source);
  } else {
    encoder = std::make_shared<WindowEncoder>(Vocabulary(ckpt.vocab));
  }

  LoadedModel out;
  try {
    out.model = std::make_unique<RtfModel>(config, encoder);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint model config: ") + e.what());
  }
  // The freshly initialized store fixes the expected names and shapes.
  const ParamStore expected = out.model->init_params(0);
  if (expected.size() != ckpt.params.size()) throw DataError("checkpoint parameter count does not match the model");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& want = expected.entry(i);
    const auto& got = ckpt.params.entry(i);
    if (want.name != got.name || want.value.shape() != got.value.shape())
      throw DataError("checkpoint parameter " + got.name + " " + shape_string(got.value.shape()) +
                      " does not match expected " + want.name + " " + shape_string(want.value.shape()));
  }
  out.params = ckpt.params;
  for (std::size_t r = 0;; ++r) {
    const std::string* name = ckpt.find_meta("relation." + std::to_string(r));
    if (!name) break;
    out.relations.push_back(*name);
  }
  return out;
}

}  // namespace rtf
