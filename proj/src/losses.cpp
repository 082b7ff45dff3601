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

#include "protohead/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "protohead/error.hpp"
#include "protohead/numerics.hpp"

namespace protohead {
namespace {

struct PolarityArgmax {
  std::size_t positive = 0;
  std::size_t negative = 0;
  double positive_sim = -std::numeric_limits<double>::infinity();
  double negative_sim = -std::numeric_limits<double>::infinity();
};

PolarityArgmax polarity_argmax(std::span<const double> v, const PrototypeSet& q) {
  PolarityArgmax best;
  bool has_pos = false;
  bool has_neg = false;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (!q.polarity[j]) continue;
    const double s = cosine(v, q[j]);
    if (*q.polarity[j] == Polarity::Positive) {
      if (!has_pos || s > best.positive_sim) best.positive = j, best.positive_sim = s;
      has_pos = true;
    } else {
      if (!has_neg || s > best.negative_sim) best.negative = j, best.negative_sim = s;
      has_neg = true;
    }
  }
  if (!has_pos || !has_neg)
    throw ValidationError("polarity_score: sentiment prototypes need at least one positive and one "
                          "negative tag");
  return best;
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

void LossWeights::validate() const {
  for (double v : {clustering, separation, incongruity, tau, tau_prime})
    if (!(std::isfinite(v) && v >= 0.0))
      throw ConfigError("loss weights and margins must be finite and non-negative");
  if (!(std::isfinite(d_min) && d_min > 0.0)) throw ConfigError("d_min: must be > 0");
  if (tau < tau_prime) throw ConfigError("tau: tau >= tau_prime required");
}

double cross_entropy(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size())
    throw ValidationError("cross_entropy: label " + std::to_string(label) + " out of range [0, " +
                          std::to_string(probs.size()) + ")");
  return -std::log(std::max(probs[label], 1e-12));
}

double nearest_prototype_sq(std::span<const double> x, const Matrix& prototypes,
                            std::size_t* nearest) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t k = 0; k < prototypes.rows(); ++k) {
    const double d = squared_distance(x, prototypes.row(k));
    if (d < best) best = d, arg = k;
  }
  if (nearest) *nearest = arg;
  return best;
}

double clustering_loss(const Matrix& batch, const Matrix& prototypes) {
  if (batch.rows() == 0) throw ValidationError("clustering_loss: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.rows(); ++i) sum += nearest_prototype_sq(batch.row(i), prototypes);
  return sum / static_cast<double>(batch.rows());
}

void clustering_grad(std::span<const double> x, const Matrix& prototypes, double scale,
                     Matrix& dprototypes) {
  std::size_t k = 0;
  nearest_prototype_sq(x, prototypes, &k);
  auto p = prototypes.row(k);
  auto dp = dprototypes.row(k);
  for (std::size_t j = 0; j < p.size(); ++j) dp[j] += scale * 2.0 * (p[j] - x[j]);
}

double separation_loss(const Matrix& prototypes, double d_min) {
  double sum = 0.0;
  for (std::size_t j = 0; j < prototypes.rows(); ++j)
    for (std::size_t k = j + 1; k < prototypes.rows(); ++k) {
      const double d = std::sqrt(squared_distance(prototypes.row(j), prototypes.row(k)));
      const double gap = d_min - d;
      if (gap > 0.0) sum += gap * gap;
    }
  return sum;
}

void separation_grad(const Matrix& prototypes, double d_min, double scale, Matrix& dprototypes) {
  const std::size_t dim = prototypes.cols();
  for (std::size_t j = 0; j < prototypes.rows(); ++j)
    for (std::size_t k = j + 1; k < prototypes.rows(); ++k) {
      const double d = std::sqrt(squared_distance(prototypes.row(j), prototypes.row(k)));
      const double gap = d_min - d;
      if (!(gap > 0.0) || d == 0.0) continue;
      // d/dp_j (d_min - d)^2 = -2 (d_min - d) (p_j - p_k) / d
      const double coeff = -2.0 * gap / d * scale;
      auto pj = prototypes.row(j);
      auto pk = prototypes.row(k);
      auto dj = dprototypes.row(j);
      auto dk = dprototypes.row(k);
      for (std::size_t i = 0; i < dim; ++i) {
        const double diff = pj[i] - pk[i];
        dj[i] += coeff * diff;
        dk[i] -= coeff * diff;
      }
    }
}

double polarity_score(std::span<const double> v, const PrototypeSet& sentiment) {
  const auto best = polarity_argmax(v, sentiment);
  return best.positive_sim - best.negative_sim;
}

void polarity_score_grad(std::span<const double> v, const PrototypeSet& sentiment, double scale,
                         Matrix& dsentiment) {
  if (scale == 0.0) return;
  const auto best = polarity_argmax(v, sentiment);
  accumulate_cosine_grad(v, sentiment[best.positive], scale, dsentiment.row(best.positive));
  accumulate_cosine_grad(v, sentiment[best.negative], -scale, dsentiment.row(best.negative));
}

IncongruityFeatures incongruity_features(std::span<const double> semantic,
                                         std::span<const double> sentiment_view,
                                         const PrototypeSet& sentiment) {
  IncongruityFeatures f;
  f.explicit_polarity = polarity_score(sentiment_view, sentiment);
  f.implicit_polarity = polarity_score(semantic, sentiment);
  f.gap = std::abs(f.explicit_polarity - f.implicit_polarity);
  return f;
}

double incongruity_term(double gap, std::uint32_t label, double tau, double tau_prime) {
  if (label > 1) throw ValidationError("incongruity loss needs binary labels, got " + std::to_string(label));
  return label == 1 ? std::max(0.0, tau - gap) : std::max(0.0, gap - tau_prime);
}

double incongruity_term_grad(double gap, std::uint32_t label, double tau, double tau_prime) {
  if (label > 1) throw ValidationError("incongruity loss needs binary labels, got " + std::to_string(label));
  if (label == 1) return tau - gap > 0.0 ? -1.0 : 0.0;
  return gap - tau_prime > 0.0 ? 1.0 : 0.0;
}

double incongruity_loss(std::span<const IncongruityItem> batch, const PrototypeSet& sentiment,
                        double tau, double tau_prime) {
  if (batch.empty()) throw ValidationError("incongruity_loss: empty batch");
  double sum = 0.0;
  for (const auto& item : batch) {
    if (item.sentiment_view.empty())
      throw ValidationError("incongruity_loss needs a two-view dataset; use single-view mode "
                            "(two_view = false) for one-view data");
    const auto f = incongruity_features(item.semantic, item.sentiment_view, sentiment);
    sum += incongruity_term(f.gap, item.label, tau, tau_prime);
  }
  return sum / static_cast<double>(batch.size());
}

void incongruity_features_grad(std::span<const double> semantic,
                               std::span<const double> sentiment_view,
                               const PrototypeSet& sentiment, std::array<double, 3> upstream,
                               Matrix& dsentiment) {
  const double pe = polarity_score(sentiment_view, sentiment);
  const double pi = polarity_score(semantic, sentiment);
  const double s = sign(pe - pi);
  const double d_explicit = upstream[0] + upstream[2] * s;
  const double d_implicit = upstream[1] - upstream[2] * s;
  polarity_score_grad(sentiment_view, sentiment, d_explicit, dsentiment);
  polarity_score_grad(semantic, sentiment, d_implicit, dsentiment);
}

double total_loss(double ce, double clu, double sep, double inc, const LossWeights& w) {
  return ce + w.clustering * clu + w.separation * sep + w.incongruity * inc;
}

}  // namespace protohead
