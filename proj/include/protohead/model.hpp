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

#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "protohead/embedding_io.hpp"
#include "protohead/losses.hpp"
#include "protohead/proto_head.hpp"

namespace protohead {

enum class HeadKind { GA, Cosine };

std::string_view head_kind_name(HeadKind kind) noexcept;
HeadKind parse_head_kind(std::string_view name);

// The full trainable state: one prototype head plus, in two-view mode, the
// polarity-tagged sentiment prototypes that produce the incongruity features.
struct Model {
  std::variant<GAHeadModel, CosineHeadModel> head;
  std::optional<PrototypeSet> sentiment;

  HeadKind kind() const noexcept {
    return std::holds_alternative<GAHeadModel>(head) ? HeadKind::GA : HeadKind::Cosine;
  }
  bool two_view() const noexcept { return sentiment.has_value(); }

  PrototypeSet& prototypes();
  const PrototypeSet& prototypes() const;
  std::size_t num_classes() const;
  std::size_t dim() const;

  // Marks parameters as changed so outstanding forward caches go stale.
  void touch();

  friend bool operator==(const Model&, const Model&) = default;
};

struct Prediction {
  std::vector<double> probs;
  std::optional<IncongruityFeatures> features;
  std::optional<EdgeWeights> edges;  // GA head only
};

Prediction predict(const Model& model, const EmbeddingRecord& record);

struct ModelGradients {
  std::variant<GAGradients, CosineGradients> head;
  Matrix sentiment;

  static ModelGradients zeros_like(const Model& model);
};

// A named view onto one parameter (or gradient) block. `group` collects the
// per-head blocks (W_h[0], W_h[1], ...) under one name for reporting.
struct BlockView {
  std::string name;
  std::string group;
  std::span<double> values;
};

// Blocks in a fixed order: W_h[h]..., a_h[h]..., W_c, b_c, prototypes,
// sentiment_prototypes. GA-only blocks are absent for the cosine head.
std::vector<BlockView> parameter_blocks(Model& model);
std::vector<BlockView> gradient_blocks(ModelGradients& grads);

// y += x, block by block.
void accumulate(ModelGradients& into, ModelGradients& from);

// Index of the largest entry; ties go to the lower index.
std::size_t argmax(std::span<const double> probs);

}  // namespace protohead
