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

#include "protohead/explain.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "protohead/checkpoint.hpp"
#include "protohead/error.hpp"
#include "protohead/numerics.hpp"
#include "protohead/rng.hpp"

namespace protohead {
namespace {

using ojson = nlohmann::ordered_json;

void require_projected(const PrototypeSet& p, const char* what) {
  if (!p.projected())
    throw ValidationError(std::string(what) +
                          ": prototypes have not been projected; run `project` first");
}

}  // namespace

Explanation explain_instance(const Model& model, const EmbeddingRecord& record, std::size_t top_k,
                             const EmbeddingDataset* exemplars) {
  const auto* ga = std::get_if<GAHeadModel>(&model.head);
  if (!ga) throw ValidationError("explain: explanations are defined for the ga head only");
  if (top_k < 1) throw ValidationError("explain: top_k must be >= 1");
  require_projected(ga->prototypes, "explain");

  const auto pred = predict(model, record);
  Explanation ex;
  ex.id = record.id;
  ex.probs = pred.probs;
  ex.predicted = argmax(pred.probs);
  ex.probability = pred.probs[ex.predicted];
  ex.features = pred.features;

  const auto& edges = *pred.edges;
  for (const auto& alpha : edges.per_head) {
    std::vector<std::size_t> order = edges.neighbors;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return alpha[a] > alpha[b]; });
    order.resize(std::min(order.size(), top_k));
    std::vector<ExplanationEdge> list;
    for (std::size_t k : order) {
      ExplanationEdge e;
      e.prototype = k;
      e.weight = alpha[k];
      e.exemplar_id = *ga->prototypes.exemplar_id[k];
      if (exemplars) {
        if (auto pos = exemplars->find(e.exemplar_id)) e.exemplar_text = (*exemplars)[*pos].text;
      }
      list.push_back(std::move(e));
    }
    ex.heads.push_back(std::move(list));
  }
  return ex;
}

ojson to_json(const Explanation& ex) {
  ojson j;
  j["id"] = ex.id;
  j["predicted"] = ex.predicted;
  j["probability"] = ex.probability;
  j["probs"] = ex.probs;
  ojson heads = ojson::array();
  for (const auto& list : ex.heads) {
    ojson h = ojson::array();
    for (const auto& e : list) {
      ojson x;
      x["prototype"] = e.prototype;
      x["weight"] = e.weight;
      x["exemplar_id"] = e.exemplar_id;
      x["exemplar_text"] = e.exemplar_text ? ojson(*e.exemplar_text) : ojson(nullptr);
      h.push_back(x);
    }
    heads.push_back(h);
  }
  j["heads"] = heads;
  if (ex.features) {
    j["incongruity"] = {{"explicit", ex.features->explicit_polarity},
                        {"implicit", ex.features->implicit_polarity},
                        {"gap", ex.features->gap}};
  } else {
    j["incongruity"] = nullptr;
  }
  return j;
}

double distinguished_percentage(const PrototypeSet& p) {
  require_projected(p, "distinguished_percentage");
  std::map<std::uint64_t, std::size_t> counts;
  for (const auto& id : p.exemplar_id) counts[*id]++;
  std::size_t unique = 0;
  for (const auto& id : p.exemplar_id) unique += counts[*id] == 1 ? 1 : 0;
  return static_cast<double>(unique) / static_cast<double>(p.size());
}

SpreadStats spread_stats(const PrototypeSet& p) {
  const std::size_t k = p.size();
  if (k < 2) throw ValidationError("spread_stats: need at least 2 prototypes");
  std::vector<double> nn(k, std::numeric_limits<double>::infinity());
  SpreadStats s;
  s.min_distance = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const double d = std::max(0.0, 1.0 - cosine(p[a], p[b]));
      sum += d;
      s.min_distance = std::min(s.min_distance, d);
      nn[a] = std::min(nn[a], d);
      nn[b] = std::min(nn[b], d);
    }
  }
  s.mean_distance = sum / static_cast<double>(k * (k - 1) / 2);
  const double nn_mean = std::accumulate(nn.begin(), nn.end(), 0.0) / static_cast<double>(k);
  const double nn_min = *std::min_element(nn.begin(), nn.end());
  s.nn_ratio = nn_mean > 0.0 ? nn_min / nn_mean : 0.0;
  return s;
}

ojson viz_json(const Model& model, const EmbeddingDataset& train, std::size_t sample_size,
               std::uint64_t seed) {
  if (sample_size < 3) throw ValidationError("export-viz: sample size must be >= 3");
  if (sample_size > train.size())
    throw ValidationError("export-viz: sample size " + std::to_string(sample_size) +
                          " exceeds training set size " + std::to_string(train.size()));
  if (train.dim() != model.dim()) throw ShapeError("export-viz: dataset dimension mismatch");

  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(sample_size);
  std::sort(idx.begin(), idx.end());

  const auto& protos = model.prototypes();
  Matrix points(sample_size + protos.size(), train.dim());
  for (std::size_t i = 0; i < sample_size; ++i) {
    const auto x = train[idx[i]].view(0);
    std::copy(x.begin(), x.end(), points.row(i).begin());
  }
  for (std::size_t k = 0; k < protos.size(); ++k)
    std::copy(protos[k].begin(), protos[k].end(), points.row(sample_size + k).begin());
  const auto pca = pca_2d(points);

  ojson j;
  j["format"] = "protohead-viz";
  j["version"] = 1;
  j["seed"] = seed;
  j["num_prototypes"] = protos.size();
  j["sample_size"] = sample_size;
  j["explained_variance"] = {pca.variance[0], pca.variance[1]};
  j["distinguished_percentage"] =
      protos.projected() ? ojson(distinguished_percentage(protos)) : ojson(nullptr);
  const auto spread = spread_stats(protos);
  j["spread"] = {{"mean_distance", spread.mean_distance},
                 {"min_distance", spread.min_distance},
                 {"nn_ratio", spread.nn_ratio}};
  ojson pts = ojson::array();
  for (std::size_t i = 0; i < points.rows(); ++i) {
    ojson p;
    if (i < sample_size) {
      const auto& r = train[idx[i]];
      p["kind"] = "data";
      p["id"] = r.id;
      p["label"] = r.label;
    } else {
      const std::size_t k = i - sample_size;
      p["kind"] = "prototype";
      p["index"] = k;
      const auto& id = protos.exemplar_id[k];
      p["exemplar_id"] = id ? ojson(*id) : ojson(nullptr);
      std::optional<std::size_t> pos = id ? train.find(*id) : std::nullopt;
      p["label"] = pos ? ojson(train[*pos].label) : ojson(nullptr);
    }
    p["x"] = pca.coords(i, 0);
    p["y"] = pca.coords(i, 1);
    pts.push_back(p);
  }
  j["points"] = pts;
  return j;
}

void export_viz(const Model& model, const EmbeddingDataset& train, std::size_t sample_size,
                std::uint64_t seed, const std::filesystem::path& path) {
  write_text(path, viz_json(model, train, sample_size, seed).dump(1) + "\n");
}

}  // namespace protohead
