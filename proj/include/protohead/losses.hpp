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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "protohead/matrix.hpp"
#include "protohead/proto_head.hpp"

namespace protohead {

struct LossWeights {
  double clustering = 0.1;
  double separation = 0.1;
  double incongruity = 0.5;
  double d_min = 1.0;
  double tau = 0.5;        // margin for incongruous (label 1) records
  double tau_prime = 0.1;  // margin for congruous (label 0) records

  void validate() const;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

// -ln max(probs[label], 1e-12)
double cross_entropy(std::span<const double> probs, std::size_t label);

// Squared distance from x to its nearest prototype; nearest index written to
// *nearest (lowest index on ties).
double nearest_prototype_sq(std::span<const double> x, const Matrix& prototypes,
                            std::size_t* nearest = nullptr);

// Mean over rows of batch of min_k |x - p_k|^2.
double clustering_loss(const Matrix& batch, const Matrix& prototypes);

// Adds scale * d(min_k |x - p_k|^2)/dP for one embedding into dprototypes.
void clustering_grad(std::span<const double> x, const Matrix& prototypes, double scale,
                     Matrix& dprototypes);

// sum_{j<k} max(0, d_min - |p_j - p_k|)^2
double separation_loss(const Matrix& prototypes, double d_min);

// Adds scale * d separation / dP. Coincident pairs contribute no gradient.
void separation_grad(const Matrix& prototypes, double d_min, double scale, Matrix& dprototypes);

// max over positive-tagged q of cos(v, q) minus max over negative-tagged q.
// Throws ValidationError when either polarity is missing.
double polarity_score(std::span<const double> v, const PrototypeSet& sentiment);

// Adds scale * d polarity_score / dQ, routing through the two arg-max
// prototypes (lowest index on ties).
void polarity_score_grad(std::span<const double> v, const PrototypeSet& sentiment, double scale,
                         Matrix& dsentiment);

// (explicit, implicit, gap): polarity of the sentiment view, polarity of the
// semantic view, and their absolute difference.
struct IncongruityFeatures {
  double explicit_polarity = 0.0;
  double implicit_polarity = 0.0;
  double gap = 0.0;

  std::array<double, 3> as_array() const { return {explicit_polarity, implicit_polarity, gap}; }
};

IncongruityFeatures incongruity_features(std::span<const double> semantic,
                                         std::span<const double> sentiment_view,
                                         const PrototypeSet& sentiment);

// y * max(0, tau - gap) + (1 - y) * max(0, gap - tau_prime) for one record.
double incongruity_term(double gap, std::uint32_t label, double tau, double tau_prime);

// d incongruity_term / d gap (0 at the hinge).
double incongruity_term_grad(double gap, std::uint32_t label, double tau, double tau_prime);

struct IncongruityItem {
  std::span<const double> semantic;
  std::span<const double> sentiment_view;
  std::uint32_t label;
};

// Mean of incongruity_term over the batch. Labels must be 0 or 1.
double incongruity_loss(std::span<const IncongruityItem> batch, const PrototypeSet& sentiment,
                        double tau, double tau_prime);

// Gradient of the three features with respect to the sentiment prototypes,
// given upstream dL/d(explicit, implicit, gap).
void incongruity_features_grad(std::span<const double> semantic,
                               std::span<const double> sentiment_view,
                               const PrototypeSet& sentiment, std::array<double, 3> upstream,
                               Matrix& dsentiment);

double total_loss(double ce, double clu, double sep, double inc, const LossWeights& w);

}  // namespace protohead
