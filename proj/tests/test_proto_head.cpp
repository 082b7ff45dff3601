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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "protohead/error.hpp"
#include "protohead/numerics.hpp"
#include "protohead/proto_head.hpp"

using namespace protohead;

namespace {

std::vector<double> randvec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

GAHeadModel random_ga(Rng& rng, std::size_t k, std::size_t h, std::size_t d, std::size_t dh,
                      std::size_t c, std::size_t n, std::size_t f = 0) {
  GAHeadModel m;
  Matrix p(k, d);
  for (double& v : p.flat()) v = rng.normal();
  m.prototypes = PrototypeSet(std::move(p));
  m.neighbors = n;
  m.num_features = f;
  for (std::size_t i = 0; i < h; ++i) {
    AttentionHead head{Matrix(dh, d), randvec(rng, 2 * dh)};
    for (double& v : head.projection.flat()) v = rng.normal();
    m.heads.push_back(std::move(head));
  }
  m.classifier = Matrix(c, h * k + f);
  for (double& v : m.classifier.flat()) v = rng.normal();
  m.bias = randvec(rng, c);
  m.validate();
  return m;
}

CosineHeadModel random_cosine(Rng& rng, std::size_t k, std::size_t d, std::size_t c,
                              std::size_t f = 0) {
  CosineHeadModel m;
  Matrix p(k, d);
  for (double& v : p.flat()) v = rng.normal();
  m.prototypes = PrototypeSet(std::move(p));
  m.num_features = f;
  m.classifier = Matrix(c, k + f);
  for (double& v : m.classifier.flat()) v = rng.normal();
  m.bias = randvec(rng, c);
  m.validate();
  return m;
}

PrototypeSet from_rows(std::vector<std::vector<double>> rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return PrototypeSet(std::move(m));
}

}  // namespace

TEST_CASE("init_ga_head") {
  const auto train = oracle::random_dataset(4, 40, 6, 4);
  HeadConfig cfg;
  cfg.num_prototypes = 8;
  cfg.num_heads = 3;
  cfg.head_dim = 2;
  SUBCASE("same seed, same model") {
    CHECK(init_ga_head(cfg, train, 9) == init_ga_head(cfg, train, 9));
    CHECK_FALSE(init_ga_head(cfg, train, 9) == init_ga_head(cfg, train, 10));
  }
  SUBCASE("zero jitter copies training embeddings; round-robin gives 2 per class") {
    cfg.jitter = 0.0;
    const auto m = init_ga_head(cfg, train, 3);
    std::vector<int> per_class(4, 0);
    for (std::size_t k = 0; k < 8; ++k) {
      auto it = std::find_if(train.records().begin(), train.records().end(), [&](const auto& r) {
        return std::equal(r.views[0].begin(), r.views[0].end(), m.prototypes[k].begin());
      });
      REQUIRE(it != train.records().end());
      per_class[it->label]++;
    }
    CHECK(per_class == std::vector<int>{2, 2, 2, 2});
  }
  SUBCASE("weights within 1/sqrt(fan-in), zero bias, default n") {
    const auto m = init_ga_head(cfg, train, 3);
    CHECK(m.neighbors == 4);
    for (double v : m.heads[0].projection.flat()) CHECK(std::abs(v) <= 1.0 / std::sqrt(6.0));
    for (double v : m.classifier.flat()) CHECK(std::abs(v) <= 1.0 / std::sqrt(24.0));
    for (double v : m.bias) CHECK(v == 0.0);
  }
  SUBCASE("K larger than the training set") {
    cfg.num_prototypes = 41;
    CHECK_THROWS_AS(init_ga_head(cfg, train, 1), ValidationError);
  }
  SUBCASE("exhausted classes are skipped") {
    std::vector<EmbeddingRecord> rows;
    for (std::size_t i = 0; i < 6; ++i) {
      EmbeddingRecord r;
      r.id = i;
      r.label = i == 0 ? 1 : 0;
      r.views = {{static_cast<double>(i) + 1.0, 1.0}};
      rows.push_back(r);
    }
    EmbeddingDataset skewed(std::move(rows), 2);
    cfg.num_prototypes = 5;
    cfg.jitter = 0.0;
    CHECK_NOTHROW(init_ga_head(cfg, skewed, 2));
  }
}

TEST_CASE("select_neighbors") {
  // Unit vectors at chosen angles from x = e_0 give the listed cosines.
  auto at = [](double c) { return std::vector<double>{c, std::sqrt(1 - c * c)}; };
  const std::vector<double> x{1, 0};
  CHECK(select_neighbors(x, from_rows({at(0.9), at(0.1), at(0.5)}), 2) == std::vector<std::size_t>{0, 2});
  CHECK(select_neighbors(x, from_rows({at(0.9), at(0.1), at(0.5)}), 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(select_neighbors(x, from_rows({at(0.5), at(0.5), at(0.1)}), 1) == std::vector<std::size_t>{0});
  CHECK(rank_neighbors(x, from_rows({at(0.1), at(0.9), at(0.5)}), 3) == std::vector<std::size_t>{1, 2, 0});
  CHECK_THROWS(select_neighbors(x, from_rows({at(0.9), at(0.1)}), 0));
  CHECK_THROWS(select_neighbors(x, from_rows({at(0.9), at(0.1)}), 3));
}

TEST_CASE("top-n nesting property") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const std::size_t k = 2 + rng.below(10), d = 1 + rng.below(5);
    Matrix p(k, d);
    // Coarse values make ties common.
    for (double& v : p.flat()) v = static_cast<double>(static_cast<int>(rng.below(5)) - 2);
    for (std::size_t i = 0; i < k; ++i)
      if (l2_norm(p.row(i)) == 0.0) p(i, 0) = 1.0;
    PrototypeSet ps(std::move(p));
    auto x = randvec(rng, d);
    std::vector<std::size_t> prev;
    for (std::size_t n = 1; n <= k; ++n) {
      auto cur = select_neighbors(x, ps, n);
      CHECK(cur.size() == n);
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      CHECK(cur == oracle::top_n(x, ps, n));
      prev = cur;
    }
  }
}

TEST_CASE("ga_forward examples") {
  Rng rng(2);
  SUBCASE("n = 1 gives a unit weight in every head") {
    auto m = random_ga(rng, 4, 3, 5, 2, 3, 1);
    auto out = ga_forward(m, randvec(rng, 5));
    REQUIRE(out.edges.neighbors.size() == 1);
    for (const auto& a : out.edges.per_head) CHECK(a[out.edges.neighbors[0]] == 1.0);
  }
  SUBCASE("zero classifier gives uniform probabilities") {
    auto m = random_ga(rng, 4, 2, 5, 2, 4, 2);
    m.classifier.fill(0.0);
    std::fill(m.bias.begin(), m.bias.end(), 0.0);
    for (int t = 0; t < 5; ++t)
      for (double p : ga_forward(m, randvec(rng, 5)).probs) CHECK(p == 0.25);
  }
  SUBCASE("dimension mismatch names the shape") {
    auto m = random_ga(rng, 3, 2, 4, 2, 2, 2);
    CHECK_THROWS_WITH_AS(ga_forward(m, randvec(rng, 5)), doctest::Contains("dimension 5"), ShapeError);
    CHECK_THROWS_AS(ga_forward(m, randvec(rng, 4), std::vector<double>{1, 2, 3}), ShapeError);
  }
  SUBCASE("tiny instance matches the scalar-loop oracle") {
    auto m = random_ga(rng, 3, 2, 4, 2, 2, 2);
    for (int t = 0; t < 50; ++t) {
      auto x = randvec(rng, 4);
      auto got = ga_forward(m, x);
      auto want = oracle::ga_forward(m, x, {});
      for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(got.probs[c] - want.probs[c]) <= 1e-12);
    }
  }
}

TEST_CASE("edge weight invariants and head-count consistency") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const std::size_t k = 2 + rng.below(6), h = 1 + rng.below(3), d = 1 + rng.below(7);
    const std::size_t n = 1 + rng.below(k);
    auto m = random_ga(rng, k, h, d, 1 + rng.below(3), 2 + rng.below(3), n);
    auto out = ga_forward(m, randvec(rng, d));
    CHECK(out.edges.neighbors == select_neighbors(out.cache.x, m.prototypes, n));
    std::vector<bool> mask(k, false);
    for (auto s : out.edges.neighbors) mask[s] = true;
    for (const auto& a : out.edges.per_head) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (mask[j]) CHECK(a[j] > 0.0);
        else CHECK(a[j] == 0.0);
        sum += a[j];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
    for (std::size_t i = 1; i < h; ++i) m.heads[i] = m.heads[0];
    auto same = ga_forward(m, out.cache.x);
    for (std::size_t i = 1; i < h; ++i) CHECK(same.edges.per_head[i] == same.edges.per_head[0]);
  }
}

TEST_CASE("permutation equivariance is bit-exact") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const std::size_t k = 2 + rng.below(6), h = 1 + rng.below(3), d = 2 + rng.below(6);
    const std::size_t f = rng.below(2) ? 3 : 0;
    auto m = random_ga(rng, k, h, d, 1 + rng.below(3), 2 + rng.below(3), 1 + rng.below(k), f);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    auto pm = m;
    for (std::size_t j = 0; j < k; ++j) {
      std::copy(m.prototypes[perm[j]].begin(), m.prototypes[perm[j]].end(), pm.prototypes.vectors.row(j).begin());
      for (std::size_t c = 0; c < m.classifier.rows(); ++c)
        for (std::size_t i = 0; i < h; ++i) pm.classifier(c, i * k + j) = m.classifier(c, i * k + perm[j]);
    }
    for (int t = 0; t < 3; ++t) {
      auto x = randvec(rng, d);
      auto feats = randvec(rng, f);
      auto a = ga_forward(m, x, feats), b = ga_forward(pm, x, feats);
      CHECK(a.probs == b.probs);
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < k; ++j) CHECK(b.edges.per_head[i][j] == a.edges.per_head[i][perm[j]]);
    }
  }
}

TEST_CASE("ga_backward") {
  Rng rng(8);
  auto m = random_ga(rng, 5, 2, 4, 3, 3, 2, 3);
  auto x = randvec(rng, 4);
  auto feats = randvec(rng, 3);
  SUBCASE("zero upstream gives zero gradients") {
    auto out = ga_forward(m, x, feats);
    auto g = GAGradients::zeros_like(m);
    auto df = ga_backward(m, out.cache, std::vector<double>(3, 0.0), g);
    for (const auto& w : g.projection) for (double v : w.flat()) CHECK(v == 0.0);
    for (const auto& a : g.attention) for (double v : a) CHECK(v == 0.0);
    for (double v : g.classifier.flat()) CHECK(v == 0.0);
    for (double v : g.prototypes.flat()) CHECK(v == 0.0);
    for (double v : df) CHECK(v == 0.0);
  }
  SUBCASE("unselected prototypes receive no attention-path gradient") {
    auto out = ga_forward(m, x, feats);
    auto g = GAGradients::zeros_like(m);
    ga_backward(m, out.cache, randvec(rng, 3), g);
    for (std::size_t k = 0; k < 5; ++k) {
      const bool selected = std::find(out.edges.neighbors.begin(), out.edges.neighbors.end(), k) !=
                            out.edges.neighbors.end();
      if (!selected) for (double v : g.prototypes.row(k)) CHECK(v == 0.0);
    }
  }
  SUBCASE("stale cache is rejected") {
    auto out = ga_forward(m, x, feats);
    auto g = GAGradients::zeros_like(m);
    m.revision++;
    CHECK_THROWS(ga_backward(m, out.cache, randvec(rng, 3), g));
    auto copy = m;
    auto fresh = ga_forward(m, x, feats);
    CHECK_THROWS(ga_backward(copy, fresh.cache, randvec(rng, 3), g));
  }
  SUBCASE("logit gradients match finite differences") {
    const auto up = randvec(rng, 3);
    auto loss = [&](const GAHeadModel& mm) {
      auto o = ga_forward(mm, x, feats);
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += up[c] * o.logits[c];
      return s;
    };
    auto out = ga_forward(m, x, feats);
    auto g = GAGradients::zeros_like(m);
    auto df = ga_backward(m, out.cache, up, g);
    auto check_block = [&](std::span<double> params, std::span<const double> analytic) {
      auto fd = finite_diff_grad([&](std::span<const double>) { return loss(m); }, params);
      for (std::size_t i = 0; i < fd.size(); ++i) CHECK(relative_error(analytic[i], fd[i]) <= 1e-6);
    };
    check_block(m.heads[1].projection.flat(), g.projection[1].flat());
    check_block(m.heads[0].attention, g.attention[0]);
    check_block(m.classifier.flat(), g.classifier.flat());
    check_block(m.prototypes.vectors.flat(), g.prototypes.flat());
    check_block(m.bias, g.bias);
    auto fdf = finite_diff_grad(
        [&](std::span<const double> f) {
          auto o = ga_forward(m, x, f);
          double s = 0.0;
          for (int c = 0; c < 3; ++c) s += up[c] * o.logits[c];
          return s;
        },
        std::span<double>(feats));
    for (int i = 0; i < 3; ++i) CHECK(relative_error(df[i], fdf[i]) <= 1e-6);
  }
}

TEST_CASE("cosine head") {
  Rng rng(5);
  SUBCASE("x equal to one prototype and orthogonal to the rest") {
    CosineHeadModel m = random_cosine(rng, 3, 3, 2);
    m.prototypes = from_rows({{0, 2, 0}, {1, 0, 0}, {0, 0, -3}});
    auto out = cosine_forward(m, std::vector<double>{2, 0, 0});
    CHECK(out.similarities == std::vector<double>{0, 1, 0});
  }
  SUBCASE("zero classifier gives uniform probabilities") {
    auto m = random_cosine(rng, 4, 3, 5);
    m.classifier.fill(0.0);
    std::fill(m.bias.begin(), m.bias.end(), 0.0);
    for (double p : cosine_forward(m, randvec(rng, 3)).probs) CHECK(p == 0.2);
  }
  SUBCASE("oracle agreement") {
    auto m = random_cosine(rng, 4, 5, 3, 3);
    for (int t = 0; t < 50; ++t) {
      auto x = randvec(rng, 5);
      auto f = randvec(rng, 3);
      auto got = cosine_forward(m, x, f).probs;
      auto want = oracle::cosine_forward(m, x, f);
      for (int c = 0; c < 3; ++c) CHECK(std::abs(got[c] - want[c]) <= 1e-12);
    }
  }
  SUBCASE("orthogonal input: ds_k/dp_k = x / (|x| |p_k|)") {
    auto m = random_cosine(rng, 2, 3, 2);
    m.prototypes = from_rows({{0, 2, 0}, {1, 1, 1}});
    m.classifier.fill(0.0);
    m.classifier(0, 0) = 1.0;  // logit 0 = s_0
    const std::vector<double> x{3, 0, 4};
    auto out = cosine_forward(m, x);
    auto g = CosineGradients::zeros_like(m);
    cosine_backward(m, out.cache, std::vector<double>{1.0, 0.0}, g);
    CHECK(g.prototypes(0, 0) == doctest::Approx(3.0 / 10.0));
    CHECK(g.prototypes(0, 1) == doctest::Approx(0.0));
    CHECK(g.prototypes(0, 2) == doctest::Approx(4.0 / 10.0));
  }
  SUBCASE("zero upstream and stale cache") {
    auto m = random_cosine(rng, 3, 4, 2);
    auto out = cosine_forward(m, randvec(rng, 4));
    auto g = CosineGradients::zeros_like(m);
    cosine_backward(m, out.cache, std::vector<double>{0, 0}, g);
    for (double v : g.prototypes.flat()) CHECK(v == 0.0);
    for (double v : g.classifier.flat()) CHECK(v == 0.0);
    m.revision++;
    CHECK_THROWS(cosine_backward(m, out.cache, std::vector<double>{1, 0}, g));
  }
  SUBCASE("dimension mismatch") {
    auto m = random_cosine(rng, 3, 4, 2);
    CHECK_THROWS_AS(cosine_forward(m, randvec(rng, 2)), ShapeError);
  }
}

TEST_CASE("softmax_cross_entropy_grad") {
  auto g = softmax_cross_entropy_grad(std::vector<double>{0.25, 0.75}, 1, 2.0);
  CHECK(g == std::vector<double>{0.5, -0.5});
  CHECK_THROWS(softmax_cross_entropy_grad(std::vector<double>{0.5, 0.5}, 2));
}
