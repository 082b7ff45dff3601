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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "protohead/embedding_io.hpp"
#include "protohead/model.hpp"

namespace protohead {

struct ExplanationEdge {
  std::size_t prototype = 0;
  double weight = 0.0;
  std::uint64_t exemplar_id = 0;
  std::optional<std::string> exemplar_text;
};

struct Explanation {
  std::uint64_t id = 0;
  std::size_t predicted = 0;
  double probability = 0.0;
  std::vector<double> probs;
  std::vector<std::vector<ExplanationEdge>> heads;  // descending weight per head
  std::optional<IncongruityFeatures> features;
};

// GA head only; the model must be projected. Lists at most top_k selected
// edges per head, heaviest first (lower prototype index on ties). Exemplar
// texts are looked up in `exemplars` when given.
Explanation explain_instance(const Model& model, const EmbeddingRecord& record, std::size_t top_k,
                             const EmbeddingDataset* exemplars = nullptr);

nlohmann::ordered_json to_json(const Explanation& explanation);

// Fraction of prototypes whose exemplar id no other prototype shares.
double distinguished_percentage(const PrototypeSet& prototypes);

struct SpreadStats {
  double mean_distance = 0.0;  // over all pairs, cosine distance 1 - cos
  double min_distance = 0.0;
  // min / mean of the per-prototype nearest-neighbour distances; 0 when the
  // mean is 0.
  double nn_ratio = 0.0;
};

SpreadStats spread_stats(const PrototypeSet& prototypes);

// PCA of a seeded sample of view-0 training rows together with the head
// prototypes. Point count is sample_size + K.
nlohmann::ordered_json viz_json(const Model& model, const EmbeddingDataset& train,
                                std::size_t sample_size, std::uint64_t seed);
void export_viz(const Model& model, const EmbeddingDataset& train, std::size_t sample_size,
                std::uint64_t seed, const std::filesystem::path& path);

}  // namespace protohead
