/* Copyright 2026 The protohead Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "protohead/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "protohead/error.hpp"
#include "protohead/numerics.hpp"
#include "protohead/rng.hpp"

namespace protohead {
namespace {

// Stream identifiers for the counter-based generator.
constexpr std::uint64_t kShuffleStream = 0x73687566666c65ULL;  // "shuffle"
constexpr std::uint64_t kSentimentStream = 0x73656e74ULL;      // "sent"

std::string bound(const std::string& field, const std::string& requirement) {
  return field + ": " + requirement;
}

void check_compatible(const Model& model, const EmbeddingDataset& data) {
  if (data.dim() != model.dim())
    throw ShapeError("dataset dimension " + std::to_string(data.dim()) + " != model dimension " +
                     std::to_string(model.dim()));
  if (data.num_classes() != model.num_classes())
    throw ShapeError("dataset has " + std::to_string(data.num_classes()) +
                     " classes, model expects " + std::to_string(model.num_classes()));
  if (model.two_view() && data.num_views() < 2)
    throw ShapeError("two-view model needs a two-view dataset");
}

// Cosine similarity with the exact-copy case pinned to 1 so a projected
// prototype keeps its exemplar under re-projection.
double exemplar_similarity(std::span<const double> p, std::span<const double> x) {
  if (std::equal(p.begin(), p.end(), x.begin(), x.end())) return 1.0;
  return cosine(p, x);
}

template <class Predicate>
std::size_t best_exemplar(std::span<const double> p, const EmbeddingDataset& data, std::size_t view,
                          Predicate&& allowed) {
  std::size_t best = data.size();
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!allowed(data[i])) continue;
    const double s = exemplar_similarity(p, data[i].view(view));
    if (s > best_sim) best_sim = s, best = i;  // ids ascend, so the first max is the lowest id
  }
  return best;
}

PrototypeSet init_sentiment(const TrainConfig& config, const EmbeddingDataset& train,
                            const PolarityHints& hints) {
  if (train.num_views() < 2) throw ValidationError("two_view requires a two-view dataset");
  Rng rng(counter_u64(config.seed, kSentimentStream, 0));
  std::vector<std::size_t> positive, negative;
  bool hinted = false;
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto it = hints.find(train[i].id);
    if (it == hints.end()) continue;
    hinted = true;
    (it->second > 0 ? positive : negative).push_back(i);
  }
  if (!hinted) {
    // Without known polarity, split on the leading principal axis of view 1.
    const auto pca = pca_2d(train.view_matrix(1));
    for (std::size_t i = 0; i < train.size(); ++i)
      (pca.coords(i, 0) >= 0.0 ? positive : negative).push_back(i);
  }
  const std::size_t half = config.sentiment_prototypes / 2;
  if (positive.size() < half || negative.size() < half)
    throw ValidationError("not enough records of each polarity to initialise " +
                          std::to_string(config.sentiment_prototypes) + " sentiment prototypes");
  rng.shuffle(positive);
  rng.shuffle(negative);
  Matrix vectors(2 * half, train.dim());
  PrototypeSet q(std::move(vectors));
  for (std::size_t j = 0; j < 2 * half; ++j) {
    const bool pos = j < half;
    const auto& src = train[pos ? positive[j] : negative[j - half]].views[1];
    std::copy(src.begin(), src.end(), q.vectors.row(j).begin());
    q.polarity[j] = pos ? Polarity::Positive : Polarity::Negative;
  }
  if (config.init_jitter > 0.0)
    for (double& v : q.vectors.flat()) v += config.init_jitter * rng.normal();
  return q;
}

std::vector<const EmbeddingRecord*> all_records(const EmbeddingDataset& data) {
  std::vector<const EmbeddingRecord*> out;
  out.reserve(data.size());
  for (const auto& r : data.records()) out.push_back(&r);
  return out;
}

struct Optimizer {
  std::vector<AdamState> states;

  Optimizer(Model& model, const TrainConfig& c) {
    for (const auto& b : parameter_blocks(model))
      states.emplace_back(b.values.size(), c.learning_rate, c.beta1, c.beta2, c.adam_eps);
  }

  void step(Model& model, ModelGradients& grads) {
    auto params = parameter_blocks(model);
    auto g = gradient_blocks(grads);
    for (std::size_t b = 0; b < params.size(); ++b)
      adam_step(params[b].values, g[b].values, states[b], params[b].name);
    model.touch();
  }
};

}  // namespace

HeadConfig TrainConfig::head_config() const {
  HeadConfig h;
  h.num_prototypes = num_prototypes;
  h.num_heads = num_heads;
  h.head_dim = head_dim;
  h.neighbors = neighbors;
  h.num_features = two_view ? 3 : 0;
  h.jitter = init_jitter;
  return h;
}

void TrainConfig::validate() const {
  if (num_prototypes < 2) throw ConfigError(bound("num_prototypes", "K >= 2"));
  if (num_heads < 1) throw ConfigError(bound("num_heads", "H >= 1"));
  if (head_dim < 1) throw ConfigError(bound("head_dim", "D_h >= 1"));
  if (neighbors > num_prototypes) throw ConfigError(bound("neighbors", "n <= K"));
  if (epochs < 1) throw ConfigError(bound("epochs", "epochs >= 1"));
  if (batch_size < 1) throw ConfigError(bound("batch_size", "batch_size >= 1"));
  if (!(learning_rate > 0.0)) throw ConfigError(bound("learning_rate", "> 0"));
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError(bound("beta1", "in [0, 1)"));
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError(bound("beta2", "in [0, 1)"));
  if (!(adam_eps > 0.0)) throw ConfigError(bound("adam_eps", "> 0"));
  if (projection_period < 1) throw ConfigError(bound("projection_period", "P_e >= 1"));
  if (projection_start < 0) throw ConfigError(bound("projection_start", ">= 0"));
  if (patience < 1) throw ConfigError(bound("patience", ">= 1"));
  if (!(init_jitter >= 0.0)) throw ConfigError(bound("init_jitter", ">= 0"));
  if (two_view && (sentiment_prototypes < 2 || sentiment_prototypes % 2 != 0))
    throw ConfigError(bound("sentiment_prototypes", "M >= 2 and even in two-view mode"));
  loss.validate();
  split.validate();
}

Model init_model(const TrainConfig& config, const EmbeddingDataset& train,
                 const PolarityHints& hints) {
  config.validate();
  if (config.num_prototypes > train.size())
    throw ValidationError("num_prototypes: K = " + std::to_string(config.num_prototypes) +
                          " exceeds training set size " + std::to_string(train.size()));
  Model model;
  if (config.head == HeadKind::GA)
    model.head = init_ga_head(config.head_config(), train, config.seed);
  else
    model.head = init_cosine_head(config.head_config(), train, config.seed);
  if (config.two_view) model.sentiment = init_sentiment(config, train, hints);
  return model;
}

ProjectionMap project_prototypes(Model& model, const EmbeddingDataset& train,
                                 const PolarityHints& hints) {
  if (train.empty()) throw ValidationError("project_prototypes: empty training set");
  check_compatible(model, train);
  ProjectionMap map;
  auto& protos = model.prototypes();
  double shift = 0.0;
  for (std::size_t k = 0; k < protos.size(); ++k) {
    const std::size_t i = best_exemplar(protos[k], train, 0, [](const auto&) { return true; });
    const auto& x = train[i].views[0];
    shift += std::sqrt(squared_distance(protos[k], x));
    std::copy(x.begin(), x.end(), protos.vectors.row(k).begin());
    protos.exemplar_id[k] = train[i].id;
    map.exemplar_ids.push_back(train[i].id);
  }
  map.mean_shift = shift / static_cast<double>(protos.size());

  if (model.sentiment) {
    auto& q = *model.sentiment;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const int want = q.polarity[k] ? static_cast<int>(*q.polarity[k]) : 0;
      auto matches = [&](const EmbeddingRecord& r) {
        auto it = hints.find(r.id);
        return it != hints.end() && want != 0 && (it->second > 0) == (want > 0);
      };
      std::size_t i = best_exemplar(q[k], train, 1, matches);
      if (i == train.size()) i = best_exemplar(q[k], train, 1, [](const auto&) { return true; });
      const auto& x = train[i].views[1];
      std::copy(x.begin(), x.end(), q.vectors.row(k).begin());
      q.exemplar_id[k] = train[i].id;
      map.sentiment_exemplar_ids.push_back(train[i].id);
    }
  }
  model.touch();
  return map;
}

Evaluation evaluate(const Model& model, const EmbeddingDataset& dataset) {
  if (dataset.empty()) throw ValidationError("evaluate: empty dataset");
  check_compatible(model, dataset);
  const std::size_t c = model.num_classes();
  Evaluation ev;
  ev.confusion.assign(c, std::vector<std::size_t>(c, 0));
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& r : dataset.records()) {
    const auto pred = predict(model, r);
    const std::size_t y = argmax(pred.probs);
    ev.confusion[r.label][y]++;
    correct += (y == r.label) ? 1 : 0;
    loss += cross_entropy(pred.probs, r.label);
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
  ev.mean_loss = loss / static_cast<double>(dataset.size());
  return ev;
}

TrainResult train(const TrainConfig& config, const EmbeddingDataset& train_set,
                  const EmbeddingDataset& val, const EmbeddingDataset& test,
                  const PolarityHints& hints) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  for (const auto* d : {&val, &test}) {
    if (d->dim() != train_set.dim() || d->num_classes() != train_set.num_classes() ||
        d->num_views() != train_set.num_views())
      throw ShapeError("train/val/test datasets disagree on dimension, class count or views");
  }
  if (config.two_view && config.loss.incongruity > 0.0 && train_set.num_classes() != 2)
    throw ConfigError("lambda_inc: the incongruity loss needs binary labels (C = 2)");

  Model model = init_model(config, train_set, hints);
  Optimizer opt(model, config);
  const ObjectiveOptions obj_opts{config.parallel, config.threads};

  TrainReport report;
  report.seed = config.seed;
  Model best = model;
  report.best_epoch = 0;
  report.best_val_accuracy = -1.0;

  const auto records = all_records(train_set);
  const std::size_t n = records.size();
  std::vector<const EmbeddingRecord*> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto perm = counter_permutation(n, config.seed, kShuffleStream + static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(records[perm[i]]);
      auto grads = ModelGradients::zeros_like(model);
      ObjectiveTerms terms;
      try {
        terms = batch_objective(model, batch, config.loss, &grads, obj_opts);
        if (!std::isfinite(terms.total)) throw NumericError("non-finite loss");
        opt.step(model, grads);
      } catch (const NumericError& e) {
        throw DivergenceError(epoch, batch_index, e.what());
      }
      loss_sum += terms.total * static_cast<double>(end - start);
      correct += terms.correct;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(n);
    log.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    if (epoch >= config.projection_start &&
        (epoch - config.projection_start) % config.projection_period == 0) {
      const auto map = project_prototypes(model, train_set, hints);
      report.projections.push_back(
          {epoch, false, map.exemplar_ids, map.sentiment_exemplar_ids, map.mean_shift});
      log.projected = true;
    }
    // The checkpoint candidate is the projected state, since that is what a
    // retained checkpoint becomes.
    Model candidate = model;
    if (!log.projected) project_prototypes(candidate, train_set, hints);
    const auto ev = evaluate(candidate, val);
    log.val_loss = ev.mean_loss;
    log.val_accuracy = ev.accuracy;
    report.epochs.push_back(log);

    if (ev.accuracy > report.best_val_accuracy) {
      report.best_val_accuracy = ev.accuracy;
      report.best_epoch = epoch;
      best = std::move(candidate);
    } else if (epoch - report.best_epoch >= config.patience) {
      report.early_stopped = true;
      break;
    }
  }

  const auto map = project_prototypes(best, train_set, hints);
  report.projections.push_back({0, true, map.exemplar_ids, map.sentiment_exemplar_ids, map.mean_shift});
  const auto test_ev = evaluate(best, test);
  report.test_accuracy = test_ev.accuracy;
  report.test_loss = test_ev.mean_loss;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(best), std::move(report)};
}

BaselineResult train_linear_baseline(const TrainConfig& config, const EmbeddingDataset& train_set,
                                     const EmbeddingDataset& val, const EmbeddingDataset& test) {
  config.validate();
  const std::size_t c = train_set.num_classes();
  const std::size_t d = train_set.dim();
  Rng rng(config.seed);
  BaselineResult res;
  Matrix w(c, d);
  for (double& v : w.flat()) v = rng.uniform(-1.0, 1.0) / std::sqrt(static_cast<double>(d));
  std::vector<double> b(c, 0.0);
  AdamState sw(w.size(), config.learning_rate, config.beta1, config.beta2, config.adam_eps);
  AdamState sb(c, config.learning_rate, config.beta1, config.beta2, config.adam_eps);

  auto probs_of = [&](std::span<const double> x) {
    std::vector<double> logits(c);
    matvec(w, x, logits);
    for (std::size_t k = 0; k < c; ++k) logits[k] += b[k];
    return stable_softmax(logits);
  };
  auto accuracy = [&](const EmbeddingDataset& data) {
    std::size_t ok = 0;
    for (const auto& r : data.records()) ok += argmax(probs_of(r.view(0))) == r.label ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(data.size());
  };

  const std::size_t n = train_set.size();
  res.best_val_accuracy = -1.0;
  res.weights = w;
  res.bias = b;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto perm = counter_permutation(n, config.seed, kShuffleStream + static_cast<std::uint64_t>(epoch));
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      Matrix gw(c, d);
      std::vector<double> gb(c, 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const auto& r = train_set[perm[i]];
        const auto g = softmax_cross_entropy_grad(probs_of(r.view(0)), r.label, scale);
        rank1_update(gw, 1.0, g, r.view(0));
        for (std::size_t k = 0; k < c; ++k) gb[k] += g[k];
      }
      adam_step(w.flat(), gw.flat(), sw, "baseline.W");
      adam_step(b, gb, sb, "baseline.b");
    }
    const double acc = accuracy(val);
    if (acc > res.best_val_accuracy) {
      res.best_val_accuracy = acc;
      res.best_epoch = epoch;
      res.weights = w;
      res.bias = b;
    } else if (epoch - res.best_epoch >= config.patience) {
      break;
    }
  }
  w = res.weights;
  b = res.bias;
  res.test_accuracy = accuracy(test);
  return res;
}

std::vector<std::string> GradcheckReport::failing() const {
  std::vector<std::string> out;
  for (const auto& b : blocks)
    if (!(b.max_relative_error <= tolerance)) out.push_back(b.name);
  return out;
}

GradcheckReport gradcheck(const GradcheckConfig& gc, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t views = gc.two_view ? 2 : 1;
  const std::size_t n = std::max({gc.batch_size, gc.num_prototypes, gc.sentiment_prototypes});
  std::vector<EmbeddingRecord> rows;
  PolarityHints hints;
  for (std::size_t i = 0; i < n; ++i) {
    EmbeddingRecord r;
    r.id = i;
    r.label = static_cast<std::uint32_t>(i % gc.num_classes);
    for (std::size_t v = 0; v < views; ++v) {
      std::vector<double> x(gc.dim);
      for (double& e : x) e = rng.normal();
      r.views.push_back(std::move(x));
    }
    hints[i] = (i % 2 == 0) ? 1 : -1;
    rows.push_back(std::move(r));
  }
  const EmbeddingDataset data(std::move(rows), gc.num_classes);

  TrainConfig tc;
  tc.head = gc.head;
  tc.num_prototypes = gc.num_prototypes;
  tc.num_heads = gc.num_heads;
  tc.head_dim = gc.head_dim;
  tc.two_view = gc.two_view;
  tc.sentiment_prototypes = gc.sentiment_prototypes;
  tc.loss = gc.loss;
  tc.seed = seed;
  tc.init_jitter = 0.5;
  Model model = init_model(tc, data, hints);
  // A nonzero bias keeps the b_c block away from its initial symmetric point.
  std::visit([&](auto& h) { for (double& b : h.bias) b = rng.uniform(-0.5, 0.5); }, model.head);
  model.touch();

  std::vector<const EmbeddingRecord*> batch;
  for (std::size_t i = 0; i < gc.batch_size; ++i) batch.push_back(&data[i]);

  auto grads = ModelGradients::zeros_like(model);
  batch_objective(model, batch, gc.loss, &grads);

  GradcheckReport report;
  report.tolerance = gc.tolerance;
  auto param_blocks = parameter_blocks(model);
  auto grad_blocks = gradient_blocks(grads);
  for (std::size_t b = 0; b < param_blocks.size(); ++b) {
    std::vector<double> theta(param_blocks[b].values.begin(), param_blocks[b].values.end());
    Model probe = model;
    auto objective = [&](std::span<const double> values) {
      auto blocks = parameter_blocks(probe);
      std::copy(values.begin(), values.end(), blocks[b].values.begin());
      probe.touch();
      return batch_objective(probe, batch, gc.loss, nullptr).total;
    };
    const auto fd = finite_diff_grad(objective, std::span<double>(theta));
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i)
      worst = std::max(worst, relative_error(grad_blocks[b].values[i], fd[i]));

    const auto& group = param_blocks[b].group;
    auto it = std::find_if(report.blocks.begin(), report.blocks.end(),
                           [&](const BlockError& e) { return e.name == group; });
    if (it == report.blocks.end()) {
      report.blocks.push_back({group, worst, fd.size()});
    } else {
      it->max_relative_error = std::max(it->max_relative_error, worst);
      it->size += fd.size();
    }
  }
  report.passed = report.failing().empty();
  return report;
}

}  // namespace protohead
