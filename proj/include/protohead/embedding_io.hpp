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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "protohead/matrix.hpp"

namespace protohead {

struct EmbeddingRecord {
  std::uint64_t id = 0;
  std::vector<std::vector<double>> views;  // 1 or 2 views of length dim
  std::uint32_t label = 0;
  std::optional<std::string> text;

  std::span<const double> view(std::size_t v) const { return views[v]; }

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

// Immutable once constructed; the constructor validates every invariant.
class EmbeddingDataset {
 public:
  EmbeddingDataset() = default;
  EmbeddingDataset(std::vector<EmbeddingRecord> records, std::size_t num_classes);

  const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }
  const EmbeddingRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t num_views() const noexcept { return num_views_; }

  // Position of a record id, if present.
  std::optional<std::size_t> find(std::uint64_t id) const;

  // Rows of one view stacked into an N x dim matrix.
  Matrix view_matrix(std::size_t view) const;

  std::vector<std::size_t> class_counts() const;

  friend bool operator==(const EmbeddingDataset&, const EmbeddingDataset&) = default;

 private:
  std::vector<EmbeddingRecord> records_;
  std::size_t dim_ = 0;
  std::size_t num_classes_ = 0;
  std::size_t num_views_ = 0;
};

// Known sign (+1/-1) of a record's explicit (view 2) polarity, keyed by id.
using PolarityHints = std::map<std::uint64_t, int>;

// PEMB: "PEMB", u32 LE [version=1, N, D, V], then N*V*D f32 LE, record-major
// then view-major. Labels and texts go to `<stem>.jsonl` next to it.
inline constexpr std::uint32_t kPembVersion = 1;

std::filesystem::path sidecar_path(const std::filesystem::path& pemb);
std::filesystem::path manifest_path(const std::filesystem::path& pemb);

void write_pemb(const EmbeddingDataset& dataset, const std::filesystem::path& path);

// num_classes: when absent, C = max(label) + 1 (at least 2).
EmbeddingDataset read_pemb(const std::filesystem::path& path,
                           std::optional<std::size_t> num_classes = std::nullopt);

struct SplitSpec {
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct DatasetSplit {
  EmbeddingDataset train;
  EmbeddingDataset val;
  EmbeddingDataset test;
};

// Seeded permutation, then floor(N * fraction) records to val and test and the
// remainder to train. Each part keeps ascending id order.
DatasetSplit split(const EmbeddingDataset& dataset, const SplitSpec& spec);

struct SyntheticConfig {
  std::size_t num_classes = 4;
  std::size_t dim = 16;
  std::size_t per_class = 500;
  double separation = 6.0;
  double noise = 1.0;
  std::size_t views = 1;
  double incongruity_rate = 0.0;
  // Amplitude of the planted polarity component, in units of separation.
  double polarity_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  EmbeddingDataset dataset;
  SyntheticConfig config;
  std::vector<std::vector<double>> means;  // C x D
  // Two-view only: the unit direction along which both views carry their
  // polarity, so one set of sentiment prototypes can read either view.
  std::vector<double> polarity_direction;
  std::vector<int> implicit_polarity;  // per record, +1/-1 (two-view only)
  std::vector<int> explicit_polarity;

  PolarityHints polarity_hints() const;
};

// Class c ~ N(mu_c, noise^2 I) with mu_c = separation * R e_c for a seeded
// random rotation R. With two views, view 1 gains sigma_i*a*R e_C and view 2 is
// sigma'_i*a*R e_C plus noise, a = polarity_scale*separation; noise is removed
// along that axis so planted signs are exact.
// Label-1 records have sigma' = -sigma with probability incongruity_rate,
// every other record has sigma' = sigma. Coordinates are rounded to float32.
SyntheticData gen_synthetic(const SyntheticConfig& config);

void write_manifest(const SyntheticData& data, const std::filesystem::path& path);

struct Manifest {
  std::optional<std::size_t> num_classes;
  PolarityHints hints;
};

// Reads the class count and explicit polarity hints back from a manifest.
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace protohead
