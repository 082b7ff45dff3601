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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "protohead/embedding_io.hpp"
#include "protohead/losses.hpp"
#include "protohead/model.hpp"
#include "protohead/objective.hpp"

namespace protohead {

struct TrainConfig {
  HeadKind head = HeadKind::GA;
  std::size_t num_prototypes = 10;  // K
  std::size_t num_heads = 4;        // H
  std::size_t head_dim = 8;         // D_h
  std::size_t neighbors = 0;        // n; 0 selects ceil(K / 2)
  int epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  LossWeights loss;
  int projection_period = 5;
  int projection_start = 10;
  int patience = 10;
  std::uint64_t seed = 42;
  bool two_view = false;
  std::size_t sentiment_prototypes = 4;  // M
  double init_jitter = 0.01;
  SplitSpec split{0.8, 0.1, 0.1, 0};
  bool parallel = false;
  std::size_t threads = 0;

  std::size_t resolved_neighbors() const noexcept {
    return neighbors == 0 ? (num_prototypes + 1) / 2 : neighbors;
  }
  HeadConfig head_config() const;

  // Throws ConfigError naming the field and the violated bound.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  bool projected = false;
};

struct ProjectionEvent {
  int epoch = 0;  // 0 for the final projection of the retained checkpoint
  bool final = false;
  std::vector<std::uint64_t> exemplar_ids;
  std::vector<std::uint64_t> sentiment_exemplar_ids;
  double mean_shift = 0.0;  // mean L2 distance moved by head prototypes
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  std::vector<ProjectionEvent> projections;
  bool early_stopped = false;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Model model;
  TrainReport report;
};

// Builds the initial model: head from view 0 and, in two-view mode, M
// sentiment prototypes (half positive, half negative) from view 1.
Model init_model(const TrainConfig& config, const EmbeddingDataset& train,
                 const PolarityHints& hints = {});

TrainResult train(const TrainConfig& config, const EmbeddingDataset& train,
                  const EmbeddingDataset& val, const EmbeddingDataset& test,
                  const PolarityHints& hints = {});

struct ProjectionMap {
  std::vector<std::uint64_t> exemplar_ids;
  std::vector<std::uint64_t> sentiment_exemplar_ids;
  double mean_shift = 0.0;
};

// Replaces every prototype by the training embedding of highest cosine
// similarity (lowest record id on ties). Sentiment prototypes search view 1,
// restricted to records whose hinted polarity matches their tag when hints
// cover any such record.
ProjectionMap project_prototypes(Model& model, const EmbeddingDataset& train,
                                 const PolarityHints& hints = {});

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;  // mean cross-entropy
  std::vector<std::vector<std::size_t>> confusion;  // rows: true class
};

Evaluation evaluate(const Model& model, const EmbeddingDataset& dataset);

// Softmax regression on view 0, trained with the same optimizer, batch order
// and early stopping as train(); used as the accuracy reference.
struct BaselineResult {
  Matrix weights;
  std::vector<double> bias;
  double test_accuracy = 0.0;
  double best_val_accuracy = 0.0;
  int best_epoch = 0;
};

BaselineResult train_linear_baseline(const TrainConfig& config, const EmbeddingDataset& train,
                                     const EmbeddingDataset& val, const EmbeddingDataset& test);

struct GradcheckConfig {
  HeadKind head = HeadKind::GA;
  bool two_view = false;
  std::size_t num_prototypes = 3;
  std::size_t num_heads = 2;
  std::size_t dim = 4;
  std::size_t head_dim = 2;
  std::size_t num_classes = 2;
  std::size_t batch_size = 5;
  std::size_t sentiment_prototypes = 2;
  double tolerance = 1e-4;
  // d_min is raised above the typical prototype spacing of the tiny instance
  // so the separation term has active pairs.
  LossWeights loss{0.1, 0.1, 0.5, 4.0, 0.5, 0.1};
};

struct BlockError {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t size = 0;
};

struct GradcheckReport {
  std::vector<BlockError> blocks;  // one entry per group
  double tolerance = 0.0;
  bool passed = false;
  std::vector<std::string> failing() const;
};

GradcheckReport gradcheck(const GradcheckConfig& config, std::uint64_t seed);

}  // namespace protohead
