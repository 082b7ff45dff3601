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

// Reference implementations written as plain loops, sharing no code with the
// library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "protohead/embedding_io.hpp"
#include "protohead/proto_head.hpp"
#include "protohead/rng.hpp"

namespace oracle {

using protohead::Matrix;
using protohead::PrototypeSet;

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double cos_sim(const double* a, const double* b, std::size_t n) {
  const double na = std::sqrt(dot(a, a, n)), nb = std::sqrt(dot(b, b, n));
  if (na == 0.0 || nb == 0.0) return 0.0;
  double c = dot(a, b, n) / (na * nb);
  return std::max(-1.0, std::min(1.0, c));
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : z) mx = std::max(mx, v);
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += out[i] = std::exp(z[i] - mx);
  for (double& v : out) v /= sum;
  return out;
}

// Top-n by cosine with ties to the lower index, by repeated selection.
inline std::vector<std::size_t> top_n(const std::vector<double>& x, const PrototypeSet& p,
                                      std::size_t n) {
  const std::size_t k = p.size();
  std::vector<double> sims(k);
  for (std::size_t j = 0; j < k; ++j) sims[j] = cos_sim(x.data(), p.vectors.row(j).data(), x.size());
  std::vector<bool> taken(k, false);
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t best = k;
    for (std::size_t j = 0; j < k; ++j)
      if (!taken[j] && (best == k || sims[j] > sims[best])) best = j;
    taken[best] = true;
    out.push_back(best);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct GAResult {
  std::vector<double> probs;
  std::vector<std::vector<double>> alpha;  // H x K
};

inline GAResult ga_forward(const protohead::GAHeadModel& m, const std::vector<double>& x,
                           const std::vector<double>& features) {
  const std::size_t k = m.prototypes.size(), d = x.size(), H = m.heads.size();
  const std::size_t dh = m.heads[0].projection.rows();
  const auto sel = top_n(x, m.prototypes, m.neighbors);
  GAResult r;
  std::vector<double> u;
  for (std::size_t h = 0; h < H; ++h) {
    const auto& W = m.heads[h].projection;
    const auto& a = m.heads[h].attention;
    std::vector<double> zx(dh, 0.0);
    for (std::size_t i = 0; i < dh; ++i)
      for (std::size_t j = 0; j < d; ++j) zx[i] += W(i, j) * x[j];
    std::vector<double> e;
    for (std::size_t s : sel) {
      double logit = 0.0;
      for (std::size_t i = 0; i < dh; ++i) logit += a[i] * zx[i];
      for (std::size_t i = 0; i < dh; ++i) {
        double zk = 0.0;
        for (std::size_t j = 0; j < d; ++j) zk += W(i, j) * m.prototypes.vectors(s, j);
        logit += a[dh + i] * zk;
      }
      e.push_back(logit >= 0.0 ? logit : 0.2 * logit);
    }
    const auto w = softmax(e);
    std::vector<double> alpha(k, 0.0);
    for (std::size_t t = 0; t < sel.size(); ++t) alpha[sel[t]] = w[t];
    u.insert(u.end(), alpha.begin(), alpha.end());
    r.alpha.push_back(alpha);
  }
  u.insert(u.end(), features.begin(), features.end());
  std::vector<double> logits(m.classifier.rows());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    logits[c] = m.bias[c];
    for (std::size_t i = 0; i < u.size(); ++i) logits[c] += m.classifier(c, i) * u[i];
  }
  r.probs = softmax(logits);
  return r;
}

inline std::vector<double> cosine_forward(const protohead::CosineHeadModel& m,
                                          const std::vector<double>& x,
                                          const std::vector<double>& features) {
  std::vector<double> u;
  for (std::size_t k = 0; k < m.prototypes.size(); ++k)
    u.push_back(cos_sim(x.data(), m.prototypes.vectors.row(k).data(), x.size()));
  u.insert(u.end(), features.begin(), features.end());
  std::vector<double> logits(m.classifier.rows());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    logits[c] = m.bias[c];
    for (std::size_t i = 0; i < u.size(); ++i) logits[c] += m.classifier(c, i) * u[i];
  }
  return softmax(logits);
}

inline double clustering(const std::vector<std::vector<double>>& batch, const Matrix& p) {
  double total = 0.0;
  for (const auto& x : batch) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < p.rows(); ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - p(k, j)) * (x[j] - p(k, j));
      best = std::min(best, s);
    }
    total += best;
  }
  return total / static_cast<double>(batch.size());
}

inline double separation(const Matrix& p, double d_min) {
  double total = 0.0;
  for (std::size_t a = 0; a < p.rows(); ++a)
    for (std::size_t b = a + 1; b < p.rows(); ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < p.cols(); ++j) s += (p(a, j) - p(b, j)) * (p(a, j) - p(b, j));
      const double gap = std::max(0.0, d_min - std::sqrt(s));
      total += gap * gap;
    }
  return total;
}

inline double polarity(const std::vector<double>& v, const PrototypeSet& q) {
  double pos = -2.0, neg = -2.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double c = cos_sim(v.data(), q.vectors.row(k).data(), v.size());
    if (*q.polarity[k] == protohead::Polarity::Positive) pos = std::max(pos, c);
    else neg = std::max(neg, c);
  }
  return pos - neg;
}

// Index of the row with highest cosine to p; first index wins ties. Exact
// copies count as similarity 1.
inline std::size_t nearest_exemplar(const std::vector<double>& p, const Matrix& rows) {
  std::size_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    bool same = true;
    for (std::size_t j = 0; j < p.size(); ++j) same = same && rows(i, j) == p[j];
    const double s = same ? 1.0 : cos_sim(p.data(), rows.row(i).data(), p.size());
    if (s > best_sim) best_sim = s, best = i;
  }
  return best;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix; returns
// (eigenvalues, eigenvectors as columns of V).
inline std::pair<std::vector<double>, std::vector<std::vector<double>>> jacobi(
    std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = a[i][i];
  return {w, v};
}

// Random tiny dataset used by several suites.
inline protohead::EmbeddingDataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t d,
                                                  std::size_t c, std::size_t views = 1) {
  protohead::Rng rng(seed);
  std::vector<protohead::EmbeddingRecord> rows;
  for (std::size_t i = 0; i < n; ++i) {
    protohead::EmbeddingRecord r;
    r.id = i * 3 + 1;
    r.label = static_cast<std::uint32_t>(i % c);
    for (std::size_t v = 0; v < views; ++v) {
      std::vector<double> x(d);
      for (double& e : x) e = rng.normal();
      r.views.push_back(x);
    }
    r.text = "row " + std::to_string(i);
    rows.push_back(std::move(r));
  }
  return protohead::EmbeddingDataset(std::move(rows), c);
}

}  // namespace oracle
