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

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "protohead/embedding_io.hpp"
#include "protohead/error.hpp"
#include "protohead/rng.hpp"

namespace protohead {
namespace {

// Columns of a seeded random orthogonal matrix: Gram-Schmidt (applied twice
// for stability) on Gaussian columns.
std::vector<std::vector<double>> random_orthonormal(std::size_t dim, std::size_t count, Rng& rng) {
  std::vector<std::vector<double>> basis;
  basis.reserve(count);
  while (basis.size() < count) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) {
        double proj = 0.0;
        for (std::size_t i = 0; i < dim; ++i) proj += v[i] * b[i];
        for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * b[i];
      }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

void remove_component(std::vector<double>& v, const std::vector<double>& unit) {
  double proj = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) proj += v[i] * unit[i];
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * unit[i];
}

double to_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

}  // namespace

void SyntheticConfig::validate() const {
  if (num_classes < 2) throw ConfigError("num_classes: C >= 2 required");
  if (dim < 2) throw ConfigError("dim: D >= 2 required");
  if (per_class < 2) throw ConfigError("per_class: n >= 2 required");
  if (!(separation > 0.0)) throw ConfigError("separation: s > 0 required");
  if (!(noise > 0.0)) throw ConfigError("noise: sigma > 0 required");
  if (views != 1 && views != 2) throw ConfigError("views: must be 1 or 2");
  if (!(incongruity_rate >= 0.0 && incongruity_rate <= 1.0))
    throw ConfigError("incongruity_rate: rho in [0, 1] required");
  if (!(polarity_scale > 0.0)) throw ConfigError("polarity_scale: must be > 0");
  const std::size_t axes = num_classes + (views == 2 ? 1 : 0);
  if (dim < axes)
    throw ConfigError("dim: D = " + std::to_string(dim) + " is too small to place " +
                      std::to_string(axes) + " orthogonal directions; use D >= " +
                      std::to_string(axes));
}

PolarityHints SyntheticData::polarity_hints() const {
  PolarityHints hints;
  if (explicit_polarity.empty()) return hints;
  for (std::size_t i = 0; i < dataset.size(); ++i) hints[dataset[i].id] = explicit_polarity[i];
  return hints;
}

SyntheticData gen_synthetic(const SyntheticConfig& config) {
  config.validate();
  const std::size_t c_count = config.num_classes;
  const std::size_t d = config.dim;
  const bool two_view = config.views == 2;

  Rng rng(config.seed);
  auto axes = random_orthonormal(d, c_count + (two_view ? 1 : 0), rng);

  SyntheticData out;
  out.config = config;
  for (std::size_t c = 0; c < c_count; ++c) {
    std::vector<double> mu(d);
    for (std::size_t i = 0; i < d; ++i) mu[i] = config.separation * axes[c][i];
    out.means.push_back(std::move(mu));
  }
  const double amplitude = config.polarity_scale * config.separation;
  if (two_view) out.polarity_direction = axes[c_count];

  std::vector<EmbeddingRecord> records;
  records.reserve(c_count * config.per_class);
  std::vector<double> noise(d);
  for (std::size_t c = 0; c < c_count; ++c) {
    for (std::size_t j = 0; j < config.per_class; ++j) {
      EmbeddingRecord r;
      r.id = records.size();
      r.label = static_cast<std::uint32_t>(c);
      r.text = "synthetic class " + std::to_string(c) + " sample " + std::to_string(j);

      for (auto& x : noise) x = config.noise * rng.normal();
      std::vector<double> v1 = out.means[c];
      if (two_view) {
        remove_component(noise, out.polarity_direction);
        const int implicit = rng.uniform() < 0.5 ? 1 : -1;
        int explicit_sign = implicit;
        if (c == 1 && rng.uniform() < config.incongruity_rate) explicit_sign = -implicit;
        for (std::size_t i = 0; i < d; ++i)
          v1[i] += noise[i] + implicit * amplitude * out.polarity_direction[i];

        for (auto& x : noise) x = config.noise * rng.normal();
        remove_component(noise, out.polarity_direction);
        std::vector<double> v2(d);
        for (std::size_t i = 0; i < d; ++i)
          v2[i] = noise[i] + explicit_sign * amplitude * out.polarity_direction[i];

        for (auto& x : v1) x = to_f32(x);
        for (auto& x : v2) x = to_f32(x);
        r.views = {std::move(v1), std::move(v2)};
        out.implicit_polarity.push_back(implicit);
        out.explicit_polarity.push_back(explicit_sign);
      } else {
        for (std::size_t i = 0; i < d; ++i) v1[i] = to_f32(v1[i] + noise[i]);
        r.views = {std::move(v1)};
      }
      records.push_back(std::move(r));
    }
  }
  out.dataset = EmbeddingDataset(std::move(records), c_count);
  return out;
}

void write_manifest(const SyntheticData& data, const std::filesystem::path& path) {
  const auto& c = data.config;
  nlohmann::ordered_json j;
  j["format"] = "protohead-synthetic-manifest";
  j["version"] = 1;
  j["seed"] = c.seed;
  j["generator"] = {{"num_classes", c.num_classes}, {"dim", c.dim},
                    {"per_class", c.per_class},     {"separation", c.separation},
                    {"noise", c.noise},             {"views", c.views},
                    {"incongruity_rate", c.incongruity_rate},
                    {"polarity_scale", c.polarity_scale}};
  j["num_records"] = data.dataset.size();
  j["means"] = data.means;
  if (c.views == 2) {
    j["polarity_direction"] = data.polarity_direction;
    j["implicit_polarity"] = data.implicit_polarity;
    j["explicit_polarity"] = data.explicit_polarity;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open manifest");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  Manifest m;
  if (j.contains("generator")) m.num_classes = j["generator"].at("num_classes").get<std::size_t>();
  if (j.contains("explicit_polarity")) {
    const auto signs = j["explicit_polarity"].get<std::vector<int>>();
    // Synthetic ids are 0..N-1 in generation order.
    for (std::size_t i = 0; i < signs.size(); ++i) m.hints[i] = signs[i];
  }
  return m;
}

}  // namespace protohead
