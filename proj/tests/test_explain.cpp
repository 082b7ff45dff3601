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
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "protohead/error.hpp"
#include "protohead/explain.hpp"
#include "protohead/trainer.hpp"

using namespace protohead;

namespace {

Model projected_model(const EmbeddingDataset& data, std::size_t k, std::size_t n, std::uint64_t seed,
                      HeadKind head = HeadKind::GA) {
  TrainConfig cfg;
  cfg.head = head;
  cfg.num_prototypes = k;
  cfg.neighbors = n;
  cfg.num_heads = 3;
  cfg.head_dim = 2;
  cfg.seed = seed;
  cfg.init_jitter = 0.3;
  Model m = init_model(cfg, data);
  // Randomize the attention vectors so head weights are not near-uniform.
  Rng rng(seed + 100);
  for (auto& h : std::get<GAHeadModel>(m.head).heads)
    for (double& a : h.attention) a = 3.0 * rng.normal();
  project_prototypes(m, data);
  return m;
}

PrototypeSet with_ids(std::vector<std::uint64_t> ids) {
  PrototypeSet p(Matrix(ids.size(), 2, 1.0));
  for (std::size_t k = 0; k < ids.size(); ++k) p.exemplar_id[k] = ids[k];
  return p;
}

}  // namespace

TEST_CASE("explain_instance") {
  const auto data = oracle::random_dataset(2, 40, 5, 3);
  SUBCASE("n = 1 lists one unit-weight prototype per head") {
    auto m = projected_model(data, 6, 1, 1);
    auto ex = explain_instance(m, data[0], 3);
    REQUIRE(ex.heads.size() == 3);
    for (const auto& h : ex.heads) {
      REQUIRE(h.size() == 1);
      CHECK(h[0].weight == 1.0);
    }
  }
  SUBCASE("listing matches a brute-force sort of the edge weights") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto m = projected_model(data, 8, 4, seed);
      const auto& ga = std::get<GAHeadModel>(m.head);
      for (std::size_t top_k : {1u, 2u, 4u, 9u}) {
        const auto& rec = data[seed];
        auto ex = explain_instance(m, rec, top_k, &data);
        auto want = oracle::ga_forward(ga, rec.views[0], {});
        CHECK(ex.predicted == argmax(want.probs));
        for (std::size_t h = 0; h < 3; ++h) {
          std::vector<std::size_t> order;
          for (std::size_t k = 0; k < 8; ++k)
            if (want.alpha[h][k] > 0.0) order.push_back(k);
          // Selection sort: heaviest first, lower index on ties.
          for (std::size_t i = 0; i < order.size(); ++i)
            for (std::size_t j = i + 1; j < order.size(); ++j)
              if (want.alpha[h][order[j]] > want.alpha[h][order[i]]) std::swap(order[i], order[j]);
          order.resize(std::min(top_k, order.size()));
          REQUIRE(ex.heads[h].size() == order.size());
          double sum = 0.0;
          for (std::size_t i = 0; i < order.size(); ++i) {
            const auto& e = ex.heads[h][i];
            CHECK(e.prototype == order[i]);
            CHECK(std::abs(e.weight - want.alpha[h][order[i]]) <= 1e-12);
            if (i) CHECK(e.weight <= ex.heads[h][i - 1].weight);
            CHECK(e.exemplar_id == *ga.prototypes.exemplar_id[e.prototype]);
            CHECK(e.exemplar_text == data[*data.find(e.exemplar_id)].text);
            sum += e.weight;
          }
          CHECK(sum <= 1.0 + 1e-9);
          if (top_k >= 4) CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
      }
    }
  }
  SUBCASE("permutation consistency") {
    auto m = projected_model(data, 6, 3, 4);
    auto pm = m;
    auto& a = std::get<GAHeadModel>(m.head);
    auto& b = std::get<GAHeadModel>(pm.head);
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    for (std::size_t j = 0; j < 6; ++j) {
      std::copy(a.prototypes[perm[j]].begin(), a.prototypes[perm[j]].end(), b.prototypes.vectors.row(j).begin());
      b.prototypes.exemplar_id[j] = a.prototypes.exemplar_id[perm[j]];
      for (std::size_t c = 0; c < a.classifier.rows(); ++c)
        for (std::size_t h = 0; h < 3; ++h) b.classifier(c, h * 6 + j) = a.classifier(c, h * 6 + perm[j]);
    }
    for (std::size_t i = 0; i < 10; ++i) {
      auto ea = explain_instance(m, data[i], 6), eb = explain_instance(pm, data[i], 6);
      CHECK(ea.probs == eb.probs);
      for (std::size_t h = 0; h < 3; ++h)
        for (std::size_t r = 0; r < ea.heads[h].size(); ++r) {
          CHECK(ea.heads[h][r].weight == eb.heads[h][r].weight);
          // Tied weights may list in a different order under relabeling.
          if (r + 1 < ea.heads[h].size() && ea.heads[h][r].weight == ea.heads[h][r + 1].weight) continue;
          if (r > 0 && ea.heads[h][r].weight == ea.heads[h][r - 1].weight) continue;
          CHECK(ea.heads[h][r].prototype == perm[eb.heads[h][r].prototype]);
        }
    }
  }
  SUBCASE("errors") {
    TrainConfig cfg;
    cfg.num_prototypes = 4;
    Model raw = init_model(cfg, data);
    CHECK_THROWS_WITH(explain_instance(raw, data[0], 2), doctest::Contains("project"));
    auto m = projected_model(data, 4, 2, 1);
    CHECK_THROWS(explain_instance(m, data[0], 0));
    auto cos = projected_model(data, 4, 2, 1);
    cos.head = CosineHeadModel{};
    CHECK_THROWS(explain_instance(cos, data[0], 2));
  }
  SUBCASE("json shape") {
    auto m = projected_model(data, 4, 2, 1);
    auto j = to_json(explain_instance(m, data[5], 2, &data));
    CHECK(j["id"] == data[5].id);
    CHECK(j["heads"].size() == 3);
    CHECK(j["heads"][0][0].contains("exemplar_text"));
    CHECK(j["incongruity"].is_null());
  }
}

TEST_CASE("distinguished_percentage") {
  CHECK(distinguished_percentage(with_ids({3, 3, 7, 9})) == 0.5);
  CHECK(distinguished_percentage(with_ids({1, 2, 3, 4})) == 1.0);
  CHECK(distinguished_percentage(with_ids({5, 5, 5})) == 0.0);
  CHECK_THROWS(distinguished_percentage(PrototypeSet(Matrix(3, 2, 1.0))));
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    std::vector<std::uint64_t> ids(2 + rng.below(10));
    for (auto& id : ids) id = rng.below(12);
    auto sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    const bool unique = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    const double d = distinguished_percentage(with_ids(ids));
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK((d == 1.0) == unique);
  }
}

TEST_CASE("spread_stats") {
  auto two = spread_stats(PrototypeSet(Matrix(2, 2, std::vector<double>{1, 0, -2, 0})));
  CHECK(two.min_distance == 2.0);
  CHECK(two.mean_distance == 2.0);
  CHECK(two.nn_ratio == 1.0);
  auto dup = spread_stats(PrototypeSet(Matrix(3, 2, std::vector<double>{1, 0, 1, 0, 0, 1})));
  CHECK(dup.min_distance == 0.0);
  CHECK_THROWS(spread_stats(PrototypeSet(Matrix(1, 2, 1.0))));
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const std::size_t k = seed < 20 ? 10 : 2 + rng.below(9), d = 2 + rng.below(4);
    Matrix p(k, d);
    for (double& v : p.flat()) v = rng.normal();
    std::vector<double> nn(k, 1e300);
    double sum = 0.0, mn = 1e300;
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b) {
        const double dist = 1.0 - oracle::cos_sim(p.row(a).data(), p.row(b).data(), d);
        sum += dist;
        mn = std::min(mn, dist);
        nn[a] = std::min(nn[a], dist);
        nn[b] = std::min(nn[b], dist);
      }
    const double mean_nn = std::accumulate(nn.begin(), nn.end(), 0.0) / k;
    auto s = spread_stats(PrototypeSet(p));
    CHECK(std::abs(s.mean_distance - sum / (k * (k - 1) / 2.0)) <= 1e-12);
    CHECK(std::abs(s.min_distance - mn) <= 1e-12);
    CHECK(std::abs(s.nn_ratio - *std::min_element(nn.begin(), nn.end()) / mean_nn) <= 1e-12);
    CHECK(s.min_distance >= 0.0);

    // Order invariance.
    Matrix r(k, d);
    for (std::size_t i = 0; i < k; ++i) std::copy(p.row(k - 1 - i).begin(), p.row(k - 1 - i).end(), r.row(i).begin());
    auto t = spread_stats(PrototypeSet(r));
    CHECK(std::abs(t.mean_distance - s.mean_distance) <= 1e-12);
    CHECK(t.min_distance == s.min_distance);
  }
}

TEST_CASE("export_viz") {
  const auto data = oracle::random_dataset(6, 30, 5, 3);
  auto m = projected_model(data, 5, 2, 2);
  auto j = viz_json(m, data, 30, 11);
  CHECK(j["points"].size() == 35);
  CHECK(j["explained_variance"][0].get<double>() >= j["explained_variance"][1].get<double>());
  // With every row sampled, each prototype sits exactly on its exemplar.
  for (const auto& p : j["points"]) {
    if (p["kind"] != "prototype") continue;
    bool found = false;
    for (const auto& q : j["points"])
      if (q["kind"] == "data" && q["id"] == p["exemplar_id"]) {
        CHECK(q["x"].get<double>() == p["x"].get<double>());
        CHECK(q["y"].get<double>() == p["y"].get<double>());
        CHECK(q["label"] == p["label"]);
        found = true;
      }
    CHECK(found);
  }
  fixtures::TempDir tmp("viz");
  export_viz(m, data, 10, 4, tmp.path() / "a.json");
  export_viz(m, data, 10, 4, tmp.path() / "b.json");
  CHECK(fixtures::slurp(tmp.path() / "a.json") == fixtures::slurp(tmp.path() / "b.json"));
  CHECK(viz_json(m, data, 10, 5) != viz_json(m, data, 10, 4));
  CHECK_THROWS(viz_json(m, data, 2, 1));
  CHECK_THROWS(viz_json(m, data, 31, 1));
  CHECK_THROWS_AS(export_viz(m, data, 10, 4, "/proc/nonexistent/dir/v.json"), Error);
}
