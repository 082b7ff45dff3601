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

#include <cstddef>
#include <span>

#include "protohead/embedding_io.hpp"
#include "protohead/losses.hpp"
#include "protohead/model.hpp"

namespace protohead {

struct ObjectiveTerms {
  double cross_entropy = 0.0;  // batch means
  double clustering = 0.0;
  double separation = 0.0;
  double incongruity = 0.0;
  double total = 0.0;
  std::size_t correct = 0;
  std::size_t count = 0;
};

struct ObjectiveOptions {
  // Evaluate items on worker threads. Per-item results are reduced in index
  // order, so the output is bit-identical to serial evaluation.
  bool parallel = false;
  std::size_t threads = 0;  // 0: hardware concurrency
};

// total = CE + l_clu * clustering + l_sep * separation + l_inc * incongruity
// over the batch, with gradients accumulated into *grads when non-null.
// Incongruity is evaluated for two-view models when l_inc > 0 or C = 2.
ObjectiveTerms batch_objective(const Model& model, std::span<const EmbeddingRecord* const> batch,
                               const LossWeights& weights, ModelGradients* grads,
                               const ObjectiveOptions& options = {});

}  // namespace protohead
