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

#include "protohead/embedding_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "protohead/error.hpp"
#include "protohead/rng.hpp"

namespace protohead {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path.string(), "read failed");
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace

EmbeddingDataset::EmbeddingDataset(std::vector<EmbeddingRecord> records, std::size_t num_classes)
    : records_(std::move(records)), num_classes_(num_classes) {
  if (records_.empty()) throw ValidationError("dataset must contain at least one record");
  if (num_classes_ < 2) throw ValidationError("dataset needs at least 2 classes");
  num_views_ = records_[0].views.size();
  if (num_views_ < 1 || num_views_ > 2)
    throw ValidationError("record 0 has " + std::to_string(num_views_) + " views; expected 1 or 2");
  dim_ = records_[0].views[0].size();
  if (dim_ == 0) throw ValidationError("record 0 has zero-dimensional embedding");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.views.size() != num_views_)
      throw ValidationError("row " + std::to_string(i) + ": view count " +
                            std::to_string(r.views.size()) + " != " + std::to_string(num_views_));
    for (const auto& v : r.views) {
      if (v.size() != dim_)
        throw ValidationError("row " + std::to_string(i) + ": dimension " +
                              std::to_string(v.size()) + " != " + std::to_string(dim_));
      for (double x : v)
        if (!std::isfinite(x))
          throw ValidationError("row " + std::to_string(i) + ": non-finite coordinate");
    }
    if (r.label >= num_classes_)
      throw ValidationError("row " + std::to_string(i) + ": label " + std::to_string(r.label) +
                            " >= num_classes " + std::to_string(num_classes_));
    if (i > 0 && r.id <= records_[i - 1].id)
      throw ValidationError("row " + std::to_string(i) + ": id " + std::to_string(r.id) +
                            " not strictly increasing");
  }
}

std::optional<std::size_t> EmbeddingDataset::find(std::uint64_t id) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), id,
                             [](const EmbeddingRecord& r, std::uint64_t v) { return r.id < v; });
  if (it == records_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - records_.begin());
}

Matrix EmbeddingDataset::view_matrix(std::size_t view) const {
  Matrix m(records_.size(), dim_);
  for (std::size_t i = 0; i < records_.size(); ++i)
    std::copy(records_[i].views[view].begin(), records_[i].views[view].end(), m.row(i).begin());
  return m;
}

std::vector<std::size_t> EmbeddingDataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes_, 0);
  for (const auto& r : records_) counts[r.label]++;
  return counts;
}

std::filesystem::path sidecar_path(const std::filesystem::path& pemb) {
  auto p = pemb;
  return p.replace_extension(".jsonl");
}

std::filesystem::path manifest_path(const std::filesystem::path& pemb) {
  auto p = pemb;
  return p.replace_extension(".manifest.json");
}

void write_pemb(const EmbeddingDataset& dataset, const std::filesystem::path& path) {
  if (dataset.empty()) throw ValidationError("write_pemb: dataset has no records");
  const std::size_t n = dataset.size();
  const std::size_t d = dataset.dim();
  const std::size_t v = dataset.num_views();

  std::string bytes;
  bytes.reserve(20 + n * v * d * 4);
  bytes.append("PEMB");
  put_u32(bytes, kPembVersion);
  put_u32(bytes, static_cast<std::uint32_t>(n));
  put_u32(bytes, static_cast<std::uint32_t>(d));
  put_u32(bytes, static_cast<std::uint32_t>(v));
  for (const auto& r : dataset.records())
    for (const auto& view : r.views)
      for (double x : view) put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(x)));

  std::string sidecar;
  for (const auto& r : dataset.records()) {
    nlohmann::ordered_json row;
    row["id"] = r.id;
    row["label"] = r.label;
    row["text"] = r.text ? nlohmann::ordered_json(*r.text) : nlohmann::ordered_json(nullptr);
    sidecar += row.dump();
    sidecar += '\n';
  }

  write_file(path, bytes);
  write_file(sidecar_path(path), sidecar);
}

EmbeddingDataset read_pemb(const std::filesystem::path& path,
                           std::optional<std::size_t> num_classes) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 20) throw FormatError(path.string() + ": truncated header");
  if (bytes.compare(0, 4, "PEMB") != 0)
    throw FormatError(path.string() + ": bad magic '" + bytes.substr(0, 4) + "'");
  const std::uint32_t version = get_u32(p + 4);
  if (version != kPembVersion)
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  const std::uint64_t n = get_u32(p + 8);
  const std::uint64_t d = get_u32(p + 12);
  const std::uint64_t v = get_u32(p + 16);
  if (n == 0) throw ValidationError(path.string() + ": N = 0");
  if (d == 0) throw ValidationError(path.string() + ": D = 0");
  if (v < 1 || v > 2) throw FormatError(path.string() + ": view count " + std::to_string(v));
  const std::uint64_t expected = 20 + n * v * d * 4;
  if (bytes.size() != expected)
    throw FormatError(path.string() + ": payload length " + std::to_string(bytes.size()) +
                      " bytes, header implies " + std::to_string(expected));

  const auto side = sidecar_path(path);
  std::ifstream in(side);
  if (!in) throw IoError(side.string(), "cannot open sidecar");
  std::vector<nlohmann::json> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(side.string() + ": line " + std::to_string(rows.size() + 1) + ": " +
                        e.what());
    }
  }
  if (rows.size() != n)
    throw ValidationError(side.string() + ": sidecar has " + std::to_string(rows.size()) +
                          " rows but " + path.string() + " declares N = " + std::to_string(n));

  std::vector<EmbeddingRecord> records(n);
  std::size_t offset = 20;
  std::uint32_t max_label = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto& r = records[i];
    const auto& row = rows[i];
    try {
      r.id = row.at("id").get<std::uint64_t>();
      const auto label = row.at("label").get<std::int64_t>();
      if (label < 0) throw ValidationError("row " + std::to_string(i) + ": negative label");
      r.label = static_cast<std::uint32_t>(label);
      if (row.contains("text") && !row["text"].is_null()) r.text = row["text"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(side.string() + ": row " + std::to_string(i) + ": " + e.what());
    }
    max_label = std::max(max_label, r.label);
    r.views.assign(v, std::vector<double>(d));
    for (auto& view : r.views)
      for (auto& x : view) {
        x = static_cast<double>(std::bit_cast<float>(get_u32(p + offset)));
        offset += 4;
      }
  }
  const std::size_t c = num_classes.value_or(std::max<std::size_t>(2, max_label + 1));
  return EmbeddingDataset(std::move(records), c);
}

void SplitSpec::validate() const {
  for (double f : {train_fraction, val_fraction, test_fraction})
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("split fractions must lie in (0, 1)");
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
}

DatasetSplit split(const EmbeddingDataset& dataset, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = dataset.size();
  if (n < 3) throw ValidationError("split: need at least 3 records, got " + std::to_string(n));
  auto part = [n](double f) { return static_cast<std::size_t>(std::floor(n * f + 1e-9)); };
  const std::size_t n_val = part(spec.val_fraction);
  const std::size_t n_test = part(spec.test_fraction);
  if (n_val == 0 || n_test == 0 || n_val + n_test >= n)
    throw ValidationError("split: an empty partition results from N = " + std::to_string(n));

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(perm);

  auto take = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                                 perm.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(idx.begin(), idx.end());
    std::vector<EmbeddingRecord> rows;
    rows.reserve(idx.size());
    for (auto i : idx) rows.push_back(dataset[i]);
    return EmbeddingDataset(std::move(rows), dataset.num_classes());
  };
  DatasetSplit out;
  out.val = take(0, n_val);
  out.test = take(n_val, n_val + n_test);
  out.train = take(n_val + n_test, n);
  return out;
}

}  // namespace protohead
