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

#include "protohead/objective.hpp"

#include <algorithm>
#include <optional>
#include <thread>

#include "protohead/error.hpp"

namespace protohead {
namespace {

struct ItemResult {
  double ce = 0.0;
  double clu = 0.0;
  double inc = 0.0;
  bool correct = false;
  std::optional<ModelGradients> grads;
};

ItemResult evaluate_item(const Model& model, const EmbeddingRecord& record,
                         const LossWeights& w, bool with_incongruity, double scale,
                         bool want_grads) {
  ItemResult r;
  const auto x = record.view(0);
  std::vector<double> features;
  IncongruityFeatures f;
  if (model.sentiment) {
    if (record.views.size() < 2)
      throw ShapeError("two-view model needs records with a sentiment view");
    f = incongruity_features(x, record.view(1), *model.sentiment);
    auto arr = f.as_array();
    features.assign(arr.begin(), arr.end());
  }

  const auto& prototypes = model.prototypes().vectors;
  r.clu = nearest_prototype_sq(x, prototypes);
  if (model.sentiment && with_incongruity)
    r.inc = incongruity_term(f.gap, record.label, w.tau, w.tau_prime);

  std::vector<double> dfeatures;
  if (const auto* ga = std::get_if<GAHeadModel>(&model.head)) {
    auto fwd = ga_forward(*ga, x, features);
    r.ce = cross_entropy(fwd.probs, record.label);
    r.correct = argmax(fwd.probs) == record.label;
    if (want_grads) {
      r.grads = ModelGradients::zeros_like(model);
      auto dlogits = softmax_cross_entropy_grad(fwd.probs, record.label, scale);
      dfeatures = ga_backward(*ga, fwd.cache, dlogits, std::get<GAGradients>(r.grads->head));
    }
  } else {
    const auto& cos = std::get<CosineHeadModel>(model.head);
    auto fwd = cosine_forward(cos, x, features);
    r.ce = cross_entropy(fwd.probs, record.label);
    r.correct = argmax(fwd.probs) == record.label;
    if (want_grads) {
      r.grads = ModelGradients::zeros_like(model);
      auto dlogits = softmax_cross_entropy_grad(fwd.probs, record.label, scale);
      dfeatures = cosine_backward(cos, fwd.cache, dlogits, std::get<CosineGradients>(r.grads->head));
    }
  }

  if (want_grads) {
    Matrix& dproto = std::visit([](auto& g) -> Matrix& { return g.prototypes; }, r.grads->head);
    if (w.clustering != 0.0) clustering_grad(x, prototypes, w.clustering * scale, dproto);
    if (model.sentiment) {
      std::array<double, 3> upstream{dfeatures[0], dfeatures[1], dfeatures[2]};
      if (with_incongruity && w.incongruity != 0.0)
        upstream[2] += w.incongruity * scale *
                       incongruity_term_grad(f.gap, record.label, w.tau, w.tau_prime);
      incongruity_features_grad(x, record.view(1), *model.sentiment, upstream, r.grads->sentiment);
    }
  }
  return r;
}

}  // namespace

ObjectiveTerms batch_objective(const Model& model, std::span<const EmbeddingRecord* const> batch,
                               const LossWeights& weights, ModelGradients* grads,
                               const ObjectiveOptions& options) {
  if (batch.empty()) throw ValidationError("batch_objective: empty batch");
  const std::size_t b = batch.size();
  const double scale = 1.0 / static_cast<double>(b);
  const bool with_inc = model.sentiment && (weights.incongruity > 0.0 || model.num_classes() == 2);
  const bool want = grads != nullptr;

  std::vector<ItemResult> items(b);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      items[i] = evaluate_item(model, *batch[i], weights, with_inc, scale, want);
  };

  std::size_t threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, b);
  if (!options.parallel || threads == 1) {
    run(0, b);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> workers;
      const std::size_t chunk = (b + threads - 1) / threads;
      for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(b, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&, t, begin, end] {
          try {
            run(begin, end);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  ObjectiveTerms terms;
  terms.count = b;
  double ce = 0.0, clu = 0.0, inc = 0.0;
  for (auto& item : items) {
    ce += item.ce;
    clu += item.clu;
    inc += item.inc;
    terms.correct += item.correct ? 1 : 0;
    if (want) accumulate(*grads, *item.grads);
  }
  const auto& prototypes = model.prototypes().vectors;
  terms.cross_entropy = ce * scale;
  terms.clustering = clu * scale;
  terms.incongruity = inc * scale;
  terms.separation = separation_loss(prototypes, weights.d_min);
  if (want && weights.separation != 0.0) {
    Matrix& dproto = std::visit([](auto& g) -> Matrix& { return g.prototypes; }, grads->head);
    separation_grad(prototypes, weights.d_min, weights.separation, dproto);
  }
  terms.total = total_loss(terms.cross_entropy, terms.clustering, terms.separation,
                           terms.incongruity, weights);
  return terms;
}

}  // namespace protohead
