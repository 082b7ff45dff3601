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

#include "protohead/proto_head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "protohead/error.hpp"
#include "protohead/numerics.hpp"

namespace protohead {
namespace {

void fill_uniform(std::span<double> values, double bound, Rng& rng) {
  for (double& v : values) v = rng.uniform(-bound, bound);
}

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw NumericError(std::string(what) + " contains a non-finite value");
}

void check_input(std::size_t dim, std::span<const double> x, std::size_t num_features,
                 std::span<const double> features) {
  if (x.size() != dim)
    throw ShapeError("input has dimension " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(dim));
  if (features.size() != num_features)
    throw ShapeError("got " + std::to_string(features.size()) + " incongruity features, model expects " +
                     std::to_string(num_features));
}

}  // namespace

bool PrototypeSet::projected() const {
  return std::all_of(exemplar_id.begin(), exemplar_id.end(),
                     [](const auto& id) { return id.has_value(); });
}

void PrototypeSet::validate() const {
  if (size() < 2) throw ValidationError("prototype set needs K >= 2, got " + std::to_string(size()));
  if (exemplar_id.size() != size() || polarity.size() != size())
    throw ShapeError("prototype metadata length does not match K = " + std::to_string(size()));
  check_finite(vectors.flat(), "prototype vectors");
}

PrototypeSet init_prototypes(const EmbeddingDataset& train, std::size_t k, double jitter, Rng& rng,
                             std::size_t view) {
  if (k > train.size())
    throw ValidationError("K = " + std::to_string(k) + " exceeds training set size " +
                          std::to_string(train.size()));
  const std::size_t c_count = train.num_classes();
  std::vector<std::vector<std::size_t>> pools(c_count);
  for (std::size_t i = 0; i < train.size(); ++i) pools[train[i].label].push_back(i);
  for (auto& pool : pools) rng.shuffle(pool);
  std::vector<std::size_t> cursor(c_count, 0);

  Matrix vectors(k, train.dim());
  std::size_t cls = 0;
  for (std::size_t slot = 0; slot < k; ++slot) {
    while (cursor[cls] >= pools[cls].size()) cls = (cls + 1) % c_count;
    const auto& src = train[pools[cls][cursor[cls]++]].views[view];
    auto row = vectors.row(slot);
    for (std::size_t j = 0; j < src.size(); ++j) row[j] = src[j];
    cls = (cls + 1) % c_count;
  }
  if (jitter > 0.0)
    for (double& v : vectors.flat()) v += jitter * rng.normal();
  return PrototypeSet(std::move(vectors));
}

void GAHeadModel::validate() const {
  prototypes.validate();
  const std::size_t k = num_prototypes();
  if (heads.empty()) throw ValidationError("GA head needs H >= 1");
  if (neighbors < 1 || neighbors > k)
    throw ValidationError("neighbor count n = " + std::to_string(neighbors) + " outside [1, K = " +
                          std::to_string(k) + "]");
  const std::size_t dh = head_dim();
  if (dh < 1) throw ValidationError("head dimension D_h must be >= 1");
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const auto& head = heads[h];
    if (head.projection.rows() != dh || head.projection.cols() != dim())
      throw ShapeError("W_h[" + std::to_string(h) + "] has shape " + head.projection.shape_string());
    if (head.attention.size() != 2 * dh)
      throw ShapeError("a_h[" + std::to_string(h) + "] has length " +
                       std::to_string(head.attention.size()));
    check_finite(head.projection.flat(), "W_h");
    check_finite(head.attention, "a_h");
  }
  if (classifier.cols() != heads.size() * k + num_features)
    throw ShapeError("W_c has shape " + classifier.shape_string() + ", expected C x " +
                     std::to_string(heads.size() * k + num_features));
  if (classifier.rows() < 2) throw ValidationError("classifier needs C >= 2");
  if (bias.size() != classifier.rows()) throw ShapeError("b_c length does not match C");
  check_finite(classifier.flat(), "W_c");
  check_finite(bias, "b_c");
}

void CosineHeadModel::validate() const {
  prototypes.validate();
  if (classifier.cols() != num_prototypes() + num_features)
    throw ShapeError("W_c has shape " + classifier.shape_string() + ", expected C x " +
                     std::to_string(num_prototypes() + num_features));
  if (classifier.rows() < 2) throw ValidationError("classifier needs C >= 2");
  if (bias.size() != classifier.rows()) throw ShapeError("b_c length does not match C");
  check_finite(classifier.flat(), "W_c");
  check_finite(bias, "b_c");
}

GAHeadModel init_ga_head(const HeadConfig& config, const EmbeddingDataset& train,
                         std::uint64_t seed) {
  Rng rng(seed);
  GAHeadModel model;
  model.prototypes = init_prototypes(train, config.num_prototypes, config.jitter, rng);
  model.neighbors = config.resolved_neighbors();
  model.num_features = config.num_features;
  const std::size_t d = train.dim();
  const std::size_t dh = config.head_dim;
  for (std::size_t h = 0; h < config.num_heads; ++h) {
    AttentionHead head{Matrix(dh, d), std::vector<double>(2 * dh)};
    fill_uniform(head.projection.flat(), 1.0 / std::sqrt(static_cast<double>(d)), rng);
    fill_uniform(head.attention, 1.0 / std::sqrt(static_cast<double>(2 * dh)), rng);
    model.heads.push_back(std::move(head));
  }
  const std::size_t fan_in = config.num_heads * config.num_prototypes + config.num_features;
  model.classifier = Matrix(train.num_classes(), fan_in);
  fill_uniform(model.classifier.flat(), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
  model.bias.assign(train.num_classes(), 0.0);
  model.validate();
  return model;
}

CosineHeadModel init_cosine_head(const HeadConfig& config, const EmbeddingDataset& train,
                                 std::uint64_t seed) {
  Rng rng(seed);
  CosineHeadModel model;
  model.prototypes = init_prototypes(train, config.num_prototypes, config.jitter, rng);
  model.num_features = config.num_features;
  const std::size_t fan_in = config.num_prototypes + config.num_features;
  model.classifier = Matrix(train.num_classes(), fan_in);
  fill_uniform(model.classifier.flat(), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
  model.bias.assign(train.num_classes(), 0.0);
  model.validate();
  return model;
}

std::vector<std::size_t> rank_neighbors(std::span<const double> x, const PrototypeSet& prototypes,
                                        std::size_t n) {
  const std::size_t k = prototypes.size();
  if (n < 1 || n > k)
    throw ValidationError("neighbor count " + std::to_string(n) + " outside [1, " +
                          std::to_string(k) + "]");
  std::vector<double> sims(k);
  for (std::size_t j = 0; j < k; ++j) sims[j] = cosine(x, prototypes[j]);
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return sims[a] > sims[b] || (sims[a] == sims[b] && a < b);
                    });
  order.resize(n);
  return order;
}

std::vector<std::size_t> select_neighbors(std::span<const double> x,
                                          const PrototypeSet& prototypes, std::size_t n) {
  auto idx = rank_neighbors(x, prototypes, n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Reductions over the neighbourhood run in rank order, which does not depend
// on prototype indexing; permuting prototypes together with their classifier
// columns therefore reproduces the logits bit for bit.
GAForward ga_forward(const GAHeadModel& model, std::span<const double> x,
                     std::span<const double> features) {
  check_input(model.dim(), x, model.num_features, features);
  const std::size_t k = model.num_prototypes();
  const std::size_t hcount = model.num_heads();
  const std::size_t dh = model.head_dim();
  const std::size_t c_count = model.num_classes();

  GAForward out;
  GACache& cache = out.cache;
  cache.model = &model;
  cache.revision = model.revision;
  cache.x.assign(x.begin(), x.end());
  cache.features.assign(features.begin(), features.end());
  cache.ranked = rank_neighbors(x, model.prototypes, model.neighbors);
  const std::size_t n = cache.ranked.size();

  out.edges.neighbors = cache.ranked;
  std::sort(out.edges.neighbors.begin(), out.edges.neighbors.end());
  out.edges.per_head.assign(hcount, std::vector<double>(k, 0.0));

  cache.input_proj.resize(hcount);
  cache.proto_proj.resize(hcount);
  cache.pre.resize(hcount);
  cache.alpha.resize(hcount);
  for (std::size_t h = 0; h < hcount; ++h) {
    const auto& head = model.heads[h];
    std::span<const double> a_in(head.attention.data(), dh);
    std::span<const double> a_proto(head.attention.data() + dh, dh);

    auto& zx = cache.input_proj[h];
    zx.assign(dh, 0.0);
    matvec(head.projection, x, zx);
    const double input_term = dot(a_in, zx);

    Matrix& zp = cache.proto_proj[h];
    zp = Matrix(n, dh);
    auto& pre = cache.pre[h];
    pre.assign(n, 0.0);
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      matvec(head.projection, model.prototypes[cache.ranked[j]], zp.row(j));
      pre[j] = input_term + dot(a_proto, zp.row(j));
      mx = std::max(mx, leaky_relu(pre[j]));
    }
    auto& alpha = cache.alpha[h];
    alpha.assign(n, 0.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      alpha[j] = std::exp(leaky_relu(pre[j]) - mx);
      sum += alpha[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
      alpha[j] /= sum;
      out.edges.per_head[h][cache.ranked[j]] = alpha[j];
    }
  }

  out.logits.assign(c_count, 0.0);
  for (std::size_t c = 0; c < c_count; ++c) {
    auto w = model.classifier.row(c);
    double s = model.bias[c];
    for (std::size_t h = 0; h < hcount; ++h)
      for (std::size_t j = 0; j < n; ++j) s += w[h * k + cache.ranked[j]] * cache.alpha[h][j];
    for (std::size_t f = 0; f < features.size(); ++f) s += w[hcount * k + f] * features[f];
    out.logits[c] = s;
  }
  out.probs = stable_softmax(out.logits);
  return out;
}

GAGradients GAGradients::zeros_like(const GAHeadModel& model) {
  GAGradients g;
  for (const auto& head : model.heads) {
    g.projection.emplace_back(head.projection.rows(), head.projection.cols());
    g.attention.emplace_back(head.attention.size(), 0.0);
  }
  g.classifier = Matrix(model.classifier.rows(), model.classifier.cols());
  g.bias.assign(model.bias.size(), 0.0);
  g.prototypes = Matrix(model.prototypes.size(), model.prototypes.dim());
  return g;
}

std::vector<double> ga_backward(const GAHeadModel& model, const GACache& cache,
                                std::span<const double> dlogits, GAGradients& grads) {
  if (cache.model != &model || cache.revision != model.revision)
    throw Error("ga_backward: cache is stale (model changed since forward)");
  const std::size_t k = model.num_prototypes();
  const std::size_t hcount = model.num_heads();
  const std::size_t dh = model.head_dim();
  const std::size_t c_count = model.num_classes();
  const std::size_t n = cache.ranked.size();
  if (dlogits.size() != c_count) throw ShapeError("ga_backward: upstream length != C");

  for (std::size_t c = 0; c < c_count; ++c) grads.bias[c] += dlogits[c];
  std::vector<double> dfeatures(cache.features.size(), 0.0);
  for (std::size_t c = 0; c < c_count; ++c) {
    const double g = dlogits[c];
    if (g == 0.0) continue;
    auto w = model.classifier.row(c);
    auto dw = grads.classifier.row(c);
    for (std::size_t h = 0; h < hcount; ++h)
      for (std::size_t j = 0; j < n; ++j) dw[h * k + cache.ranked[j]] += g * cache.alpha[h][j];
    for (std::size_t f = 0; f < cache.features.size(); ++f) {
      dw[hcount * k + f] += g * cache.features[f];
      dfeatures[f] += g * w[hcount * k + f];
    }
  }

  std::vector<double> dalpha(n), dpre(n), dz(dh), dzx(dh);
  for (std::size_t h = 0; h < hcount; ++h) {
    const auto& head = model.heads[h];
    const auto& alpha = cache.alpha[h];
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < c_count; ++c)
        s += dlogits[c] * model.classifier(c, h * k + cache.ranked[j]);
      dalpha[j] = s;
    }
    double weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) weighted += alpha[j] * dalpha[j];
    double dpre_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dpre[j] = alpha[j] * (dalpha[j] - weighted) * leaky_relu_grad(cache.pre[h][j]);
      dpre_sum += dpre[j];
    }

    auto& da = grads.attention[h];
    std::span<double> da_in(da.data(), dh);
    std::span<double> da_proto(da.data() + dh, dh);
    axpy(dpre_sum, cache.input_proj[h], da_in);
    for (std::size_t j = 0; j < n; ++j) axpy(dpre[j], cache.proto_proj[h].row(j), da_proto);

    // Input path: dz_x = a_in * sum_j dpre_j.
    for (std::size_t i = 0; i < dh; ++i) dzx[i] = head.attention[i] * dpre_sum;
    rank1_update(grads.projection[h], 1.0, dzx, cache.x);
    // Prototype paths: dz_j = a_proto * dpre_j.
    for (std::size_t j = 0; j < n; ++j) {
      if (dpre[j] == 0.0) continue;
      for (std::size_t i = 0; i < dh; ++i) dz[i] = head.attention[dh + i] * dpre[j];
      const std::size_t p = cache.ranked[j];
      rank1_update(grads.projection[h], 1.0, dz, model.prototypes[p]);
      matvec_transpose_accumulate(head.projection, dz, grads.prototypes.row(p));
    }
  }
  return dfeatures;
}

CosineForward cosine_forward(const CosineHeadModel& model, std::span<const double> x,
                             std::span<const double> features) {
  check_input(model.dim(), x, model.num_features, features);
  const std::size_t k = model.num_prototypes();
  CosineForward out;
  out.cache.model = &model;
  out.cache.revision = model.revision;
  out.cache.x.assign(x.begin(), x.end());
  out.similarities.resize(k);
  for (std::size_t j = 0; j < k; ++j) out.similarities[j] = cosine(x, model.prototypes[j]);
  auto& inputs = out.cache.inputs;
  inputs = out.similarities;
  inputs.insert(inputs.end(), features.begin(), features.end());
  out.logits.assign(model.num_classes(), 0.0);
  matvec(model.classifier, inputs, out.logits);
  for (std::size_t c = 0; c < out.logits.size(); ++c) out.logits[c] += model.bias[c];
  out.probs = stable_softmax(out.logits);
  return out;
}

CosineGradients CosineGradients::zeros_like(const CosineHeadModel& model) {
  CosineGradients g;
  g.classifier = Matrix(model.classifier.rows(), model.classifier.cols());
  g.bias.assign(model.bias.size(), 0.0);
  g.prototypes = Matrix(model.prototypes.size(), model.prototypes.dim());
  return g;
}

std::vector<double> cosine_backward(const CosineHeadModel& model, const CosineCache& cache,
                                    std::span<const double> dlogits, CosineGradients& grads) {
  if (cache.model != &model || cache.revision != model.revision)
    throw Error("cosine_backward: cache is stale (model changed since forward)");
  const std::size_t k = model.num_prototypes();
  if (dlogits.size() != model.num_classes()) throw ShapeError("cosine_backward: upstream length != C");
  for (std::size_t c = 0; c < dlogits.size(); ++c) grads.bias[c] += dlogits[c];
  rank1_update(grads.classifier, 1.0, dlogits, cache.inputs);
  std::vector<double> dinputs(cache.inputs.size(), 0.0);
  matvec_transpose_accumulate(model.classifier, dlogits, dinputs);
  for (std::size_t j = 0; j < k; ++j)
    accumulate_cosine_grad(cache.x, model.prototypes[j], dinputs[j], grads.prototypes.row(j));
  return {dinputs.begin() + static_cast<std::ptrdiff_t>(k), dinputs.end()};
}

std::vector<double> softmax_cross_entropy_grad(std::span<const double> probs, std::size_t label,
                                               double scale) {
  if (label >= probs.size())
    throw ValidationError("label " + std::to_string(label) + " out of range for " +
                          std::to_string(probs.size()) + " classes");
  std::vector<double> g(probs.begin(), probs.end());
  g[label] -= 1.0;
  for (double& v : g) v *= scale;
  return g;
}

}  // namespace protohead
