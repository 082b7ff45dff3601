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

#include "protohead/model.hpp"

#include "protohead/error.hpp"
#include "protohead/simd/kernels.hpp"

namespace protohead {

std::string_view head_kind_name(HeadKind kind) noexcept {
  return kind == HeadKind::GA ? "ga" : "cosine";
}

HeadKind parse_head_kind(std::string_view name) {
  if (name == "ga") return HeadKind::GA;
  if (name == "cosine") return HeadKind::Cosine;
  throw ConfigError("head: expected \"ga\" or \"cosine\", got \"" + std::string(name) + "\"");
}

PrototypeSet& Model::prototypes() {
  return std::visit([](auto& h) -> PrototypeSet& { return h.prototypes; }, head);
}

const PrototypeSet& Model::prototypes() const {
  return std::visit([](const auto& h) -> const PrototypeSet& { return h.prototypes; }, head);
}

std::size_t Model::num_classes() const {
  return std::visit([](const auto& h) { return h.num_classes(); }, head);
}

std::size_t Model::dim() const {
  return std::visit([](const auto& h) { return h.dim(); }, head);
}

void Model::touch() {
  std::visit([](auto& h) { ++h.revision; }, head);
}

Prediction predict(const Model& model, const EmbeddingRecord& record) {
  Prediction out;
  std::vector<double> features;
  if (model.sentiment) {
    if (record.views.size() < 2)
      throw ShapeError("two-view model needs records with a sentiment view");
    out.features = incongruity_features(record.view(0), record.view(1), *model.sentiment);
    auto arr = out.features->as_array();
    features.assign(arr.begin(), arr.end());
  }
  if (const auto* ga = std::get_if<GAHeadModel>(&model.head)) {
    auto fwd = ga_forward(*ga, record.view(0), features);
    out.probs = std::move(fwd.probs);
    out.edges = std::move(fwd.edges);
  } else {
    auto fwd = cosine_forward(std::get<CosineHeadModel>(model.head), record.view(0), features);
    out.probs = std::move(fwd.probs);
  }
  return out;
}

ModelGradients ModelGradients::zeros_like(const Model& model) {
  ModelGradients g;
  if (const auto* ga = std::get_if<GAHeadModel>(&model.head))
    g.head = GAGradients::zeros_like(*ga);
  else
    g.head = CosineGradients::zeros_like(std::get<CosineHeadModel>(model.head));
  if (model.sentiment) g.sentiment = Matrix(model.sentiment->size(), model.sentiment->dim());
  return g;
}

std::vector<BlockView> parameter_blocks(Model& model) {
  Matrix* sentiment = model.sentiment ? &model.sentiment->vectors : nullptr;
  if (auto* ga = std::get_if<GAHeadModel>(&model.head)) {
    std::vector<BlockView> blocks;
    for (std::size_t h = 0; h < ga->heads.size(); ++h)
      blocks.push_back({"W_h[" + std::to_string(h) + "]", "W_h", ga->heads[h].projection.flat()});
    for (std::size_t h = 0; h < ga->heads.size(); ++h)
      blocks.push_back({"a_h[" + std::to_string(h) + "]", "a_h", ga->heads[h].attention});
    blocks.push_back({"W_c", "W_c", ga->classifier.flat()});
    blocks.push_back({"b_c", "b_c", ga->bias});
    blocks.push_back({"prototypes", "prototypes", ga->prototypes.vectors.flat()});
    if (sentiment) blocks.push_back({"sentiment_prototypes", "sentiment_prototypes", sentiment->flat()});
    return blocks;
  }
  auto& cos = std::get<CosineHeadModel>(model.head);
  std::vector<BlockView> blocks;
  blocks.push_back({"W_c", "W_c", cos.classifier.flat()});
  blocks.push_back({"b_c", "b_c", cos.bias});
  blocks.push_back({"prototypes", "prototypes", cos.prototypes.vectors.flat()});
  if (sentiment) blocks.push_back({"sentiment_prototypes", "sentiment_prototypes", sentiment->flat()});
  return blocks;
}

std::vector<BlockView> gradient_blocks(ModelGradients& grads) {
  std::vector<BlockView> blocks;
  if (auto* ga = std::get_if<GAGradients>(&grads.head)) {
    for (std::size_t h = 0; h < ga->projection.size(); ++h)
      blocks.push_back({"W_h[" + std::to_string(h) + "]", "W_h", ga->projection[h].flat()});
    for (std::size_t h = 0; h < ga->attention.size(); ++h)
      blocks.push_back({"a_h[" + std::to_string(h) + "]", "a_h", ga->attention[h]});
    blocks.push_back({"W_c", "W_c", ga->classifier.flat()});
    blocks.push_back({"b_c", "b_c", ga->bias});
    blocks.push_back({"prototypes", "prototypes", ga->prototypes.flat()});
  } else {
    auto& cos = std::get<CosineGradients>(grads.head);
    blocks.push_back({"W_c", "W_c", cos.classifier.flat()});
    blocks.push_back({"b_c", "b_c", cos.bias});
    blocks.push_back({"prototypes", "prototypes", cos.prototypes.flat()});
  }
  if (!grads.sentiment.empty())
    blocks.push_back({"sentiment_prototypes", "sentiment_prototypes", grads.sentiment.flat()});
  return blocks;
}

void accumulate(ModelGradients& into, ModelGradients& from) {
  auto dst = gradient_blocks(into);
  auto src = gradient_blocks(from);
  if (dst.size() != src.size()) throw ShapeError("accumulate: gradient layouts differ");
  for (std::size_t b = 0; b < dst.size(); ++b) axpy(1.0, src[b].values, dst[b].values);
}

std::size_t argmax(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

}  // namespace protohead
