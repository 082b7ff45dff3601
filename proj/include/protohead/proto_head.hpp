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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "protohead/embedding_io.hpp"
#include "protohead/matrix.hpp"
#include "protohead/rng.hpp"

namespace protohead {

enum class Polarity : int { Negative = -1, Positive = 1 };

struct PrototypeSet {
  Matrix vectors;  // K x D
  std::vector<std::optional<std::uint64_t>> exemplar_id;
  std::vector<std::optional<Polarity>> polarity;

  PrototypeSet() = default;
  explicit PrototypeSet(Matrix v)
      : vectors(std::move(v)), exemplar_id(vectors.rows()), polarity(vectors.rows()) {}

  std::size_t size() const noexcept { return vectors.rows(); }
  std::size_t dim() const noexcept { return vectors.cols(); }
  std::span<const double> operator[](std::size_t k) const { return vectors.row(k); }

  // Every prototype carries an exemplar id.
  bool projected() const;
  void validate() const;

  friend bool operator==(const PrototypeSet&, const PrototypeSet&) = default;
};

// K prototypes drawn round-robin over classes (seeded sampling without
// replacement within each class, skipping exhausted classes), plus N(0,
// jitter^2) noise per coordinate. Uses `view` of each record.
PrototypeSet init_prototypes(const EmbeddingDataset& train, std::size_t k, double jitter, Rng& rng,
                             std::size_t view = 0);

struct AttentionHead {
  Matrix projection;               // D_h x D
  std::vector<double> attention;   // 2 D_h: [input half, prototype half]

  friend bool operator==(const AttentionHead&, const AttentionHead&) = default;
};

struct GAHeadModel {
  std::vector<AttentionHead> heads;
  Matrix classifier;          // C x (H K + F)
  std::vector<double> bias;   // C
  PrototypeSet prototypes;
  std::size_t neighbors = 1;  // n in [1, K]
  std::size_t num_features = 0;
  // Bumped by every parameter mutation; forward caches record it.
  std::uint64_t revision = 0;

  std::size_t num_heads() const noexcept { return heads.size(); }
  std::size_t num_prototypes() const noexcept { return prototypes.size(); }
  std::size_t num_classes() const noexcept { return classifier.rows(); }
  std::size_t dim() const noexcept { return prototypes.dim(); }
  std::size_t head_dim() const noexcept { return heads.empty() ? 0 : heads[0].projection.rows(); }

  void validate() const;

  friend bool operator==(const GAHeadModel&, const GAHeadModel&) = default;
};

struct CosineHeadModel {
  PrototypeSet prototypes;
  Matrix classifier;          // C x (K + F)
  std::vector<double> bias;
  std::size_t num_features = 0;
  std::uint64_t revision = 0;

  std::size_t num_prototypes() const noexcept { return prototypes.size(); }
  std::size_t num_classes() const noexcept { return classifier.rows(); }
  std::size_t dim() const noexcept { return prototypes.dim(); }

  void validate() const;

  friend bool operator==(const CosineHeadModel&, const CosineHeadModel&) = default;
};

struct HeadConfig {
  std::size_t num_prototypes = 10;
  std::size_t num_heads = 4;
  std::size_t head_dim = 8;
  std::size_t neighbors = 0;  // 0 selects ceil(K / 2)
  std::size_t num_features = 0;
  double jitter = 0.01;

  std::size_t resolved_neighbors() const noexcept {
    return neighbors == 0 ? (num_prototypes + 1) / 2 : neighbors;
  }
};

GAHeadModel init_ga_head(const HeadConfig& config, const EmbeddingDataset& train,
                         std::uint64_t seed);
CosineHeadModel init_cosine_head(const HeadConfig& config, const EmbeddingDataset& train,
                                 std::uint64_t seed);

// Indices of the n prototypes most cosine-similar to x, highest first; ties
// go to the lower index.
std::vector<std::size_t> rank_neighbors(std::span<const double> x, const PrototypeSet& prototypes,
                                        std::size_t n);

// rank_neighbors sorted ascending.
std::vector<std::size_t> select_neighbors(std::span<const double> x,
                                          const PrototypeSet& prototypes, std::size_t n);

struct EdgeWeights {
  std::vector<std::vector<double>> per_head;  // H vectors of length K
  std::vector<std::size_t> neighbors;         // ascending, shared by all heads
};

struct GACache {
  const GAHeadModel* model = nullptr;
  std::uint64_t revision = 0;
  std::vector<double> x;
  std::vector<double> features;
  std::vector<std::size_t> ranked;               // neighbor indices, rank order
  std::vector<std::vector<double>> input_proj;   // per head: W_h x
  std::vector<Matrix> proto_proj;                // per head: n x D_h, rows in rank order
  std::vector<std::vector<double>> pre;          // per head: pre-activation logits, rank order
  std::vector<std::vector<double>> alpha;        // per head: weights, rank order
};

struct GAForward {
  std::vector<double> probs;
  std::vector<double> logits;
  EdgeWeights edges;
  GACache cache;
};

// features must have exactly model.num_features entries (empty when F = 0).
GAForward ga_forward(const GAHeadModel& model, std::span<const double> x,
                     std::span<const double> features = {});

struct GAGradients {
  std::vector<Matrix> projection;
  std::vector<std::vector<double>> attention;
  Matrix classifier;
  std::vector<double> bias;
  Matrix prototypes;

  static GAGradients zeros_like(const GAHeadModel& model);
};

// Accumulates parameter gradients for upstream dL/dlogits into grads and
// returns dL/dfeatures. The neighbour set is held fixed.
std::vector<double> ga_backward(const GAHeadModel& model, const GACache& cache,
                                std::span<const double> dlogits, GAGradients& grads);

struct CosineCache {
  const CosineHeadModel* model = nullptr;
  std::uint64_t revision = 0;
  std::vector<double> x;
  std::vector<double> inputs;  // [similarities (K), features (F)]
};

struct CosineForward {
  std::vector<double> probs;
  std::vector<double> logits;
  std::vector<double> similarities;
  CosineCache cache;
};

CosineForward cosine_forward(const CosineHeadModel& model, std::span<const double> x,
                             std::span<const double> features = {});

struct CosineGradients {
  Matrix classifier;
  std::vector<double> bias;
  Matrix prototypes;

  static CosineGradients zeros_like(const CosineHeadModel& model);
};

std::vector<double> cosine_backward(const CosineHeadModel& model, const CosineCache& cache,
                                    std::span<const double> dlogits, CosineGradients& grads);

// probs - onehot(label), times scale: dL/dlogits for scale * cross-entropy.
std::vector<double> softmax_cross_entropy_grad(std::span<const double> probs, std::size_t label,
                                               double scale = 1.0);

}  // namespace protohead
