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

#include "protohead/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "protohead/error.hpp"

namespace protohead {
namespace {

using nlohmann::json;

const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> m{
      {"K", "num_prototypes"}, {"H", "num_heads"}, {"D_h", "head_dim"},
      {"n", "neighbors"},      {"M", "sentiment_prototypes"},
  };
  return m;
}

std::string canonical(const std::string& key) {
  auto it = aliases().find(key);
  return it == aliases().end() ? key : it->second;
}

template <class T>
void read(const json& j, const std::string& prefix, const std::string& key, T& out) {
  const std::string name = prefix + key;
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() &&
                                     j.get<long long>() < 0))
        throw ConfigError(name + ": expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!j.is_number_integer()) throw ConfigError(name + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError(name + ": expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError(name + ": expected true or false");
    }
    out = j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

void require_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
}

[[noreturn]] void unknown(const std::string& key) {
  throw ConfigError("unknown config key \"" + key + "\"");
}

void set_path(json& root, const std::string& dotted, json value) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? dotted.npos : dot - start);
    if (part.empty()) throw ConfigError("override key \"" + dotted + "\" is malformed");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override \"" + text + "\" must have the form key=value");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["head"] = std::string(head_kind_name(c.head));
  j["num_prototypes"] = c.num_prototypes;
  j["num_heads"] = c.num_heads;
  j["head_dim"] = c.head_dim;
  j["neighbors"] = c.neighbors;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_eps"] = c.adam_eps;
  j["loss"] = {{"clustering", c.loss.clustering}, {"separation", c.loss.separation},
               {"incongruity", c.loss.incongruity}, {"d_min", c.loss.d_min},
               {"tau", c.loss.tau}, {"tau_prime", c.loss.tau_prime}};
  j["projection_period"] = c.projection_period;
  j["projection_start"] = c.projection_start;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["two_view"] = c.two_view;
  j["sentiment_prototypes"] = c.sentiment_prototypes;
  j["init_jitter"] = c.init_jitter;
  j["split"] = {{"train", c.split.train_fraction}, {"val", c.split.val_fraction},
                {"test", c.split.test_fraction}, {"seed", c.split.seed}};
  j["parallel"] = c.parallel;
  j["threads"] = c.threads;
  return j;
}

nlohmann::ordered_json to_json(const SyntheticConfig& c) {
  nlohmann::ordered_json j;
  j["num_classes"] = c.num_classes;
  j["dim"] = c.dim;
  j["per_class"] = c.per_class;
  j["separation"] = c.separation;
  j["noise"] = c.noise;
  j["views"] = c.views;
  j["incongruity_rate"] = c.incongruity_rate;
  j["polarity_scale"] = c.polarity_scale;
  j["seed"] = c.seed;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  require_object(j, "config");
  TrainConfig c;
  for (const auto& [raw, v] : j.items()) {
    const std::string key = canonical(raw);
    if (key == "head") {
      if (!v.is_string()) throw ConfigError("head: expected \"ga\" or \"cosine\"");
      c.head = parse_head_kind(v.get<std::string>());
    } else if (key == "num_prototypes") read(v, "", key, c.num_prototypes);
    else if (key == "num_heads") read(v, "", key, c.num_heads);
    else if (key == "head_dim") read(v, "", key, c.head_dim);
    else if (key == "neighbors") read(v, "", key, c.neighbors);
    else if (key == "epochs") read(v, "", key, c.epochs);
    else if (key == "batch_size") read(v, "", key, c.batch_size);
    else if (key == "learning_rate") read(v, "", key, c.learning_rate);
    else if (key == "beta1") read(v, "", key, c.beta1);
    else if (key == "beta2") read(v, "", key, c.beta2);
    else if (key == "adam_eps") read(v, "", key, c.adam_eps);
    else if (key == "projection_period") read(v, "", key, c.projection_period);
    else if (key == "projection_start") read(v, "", key, c.projection_start);
    else if (key == "patience") read(v, "", key, c.patience);
    else if (key == "seed") read(v, "", key, c.seed);
    else if (key == "two_view") read(v, "", key, c.two_view);
    else if (key == "sentiment_prototypes") read(v, "", key, c.sentiment_prototypes);
    else if (key == "init_jitter") read(v, "", key, c.init_jitter);
    else if (key == "parallel") read(v, "", key, c.parallel);
    else if (key == "threads") read(v, "", key, c.threads);
    else if (key == "loss") {
      require_object(v, "loss");
      for (const auto& [k, x] : v.items()) {
        if (k == "clustering") read(x, "loss.", k, c.loss.clustering);
        else if (k == "separation") read(x, "loss.", k, c.loss.separation);
        else if (k == "incongruity") read(x, "loss.", k, c.loss.incongruity);
        else if (k == "d_min") read(x, "loss.", k, c.loss.d_min);
        else if (k == "tau") read(x, "loss.", k, c.loss.tau);
        else if (k == "tau_prime") read(x, "loss.", k, c.loss.tau_prime);
        else unknown("loss." + k);
      }
    } else if (key == "split") {
      require_object(v, "split");
      for (const auto& [k, x] : v.items()) {
        if (k == "train") read(x, "split.", k, c.split.train_fraction);
        else if (k == "val") read(x, "split.", k, c.split.val_fraction);
        else if (k == "test") read(x, "split.", k, c.split.test_fraction);
        else if (k == "seed") read(x, "split.", k, c.split.seed);
        else unknown("split." + k);
      }
    } else {
      unknown(raw);
    }
  }
  return c;
}

SyntheticConfig synthetic_config_from_json(const json& j) {
  require_object(j, "config");
  SyntheticConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "num_classes") read(v, "", key, c.num_classes);
    else if (key == "dim") read(v, "", key, c.dim);
    else if (key == "per_class") read(v, "", key, c.per_class);
    else if (key == "separation") read(v, "", key, c.separation);
    else if (key == "noise") read(v, "", key, c.noise);
    else if (key == "views") read(v, "", key, c.views);
    else if (key == "incongruity_rate") read(v, "", key, c.incongruity_rate);
    else if (key == "polarity_scale") read(v, "", key, c.polarity_scale);
    else if (key == "seed") read(v, "", key, c.seed);
    else unknown(key);
  }
  return c;
}

json layered_config(const std::optional<std::filesystem::path>& path,
                    const std::vector<Override>& overrides) {
  json j = (path && !path->empty()) ? read_file(*path) : json::object();
  require_object(j, "config file");
  if (const char* env = std::getenv("PROTO_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') throw ConfigError("PROTO_SEED: expected a non-negative integer");
    j["seed"] = seed;
  }
  for (const auto& [key, value] : overrides) {
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::parse_error&) {
      parsed = value;
    }
    set_path(j, canonical(key), std::move(parsed));
  }
  return j;
}

TrainConfig load_config(const std::optional<std::filesystem::path>& path,
                        const std::vector<Override>& overrides) {
  TrainConfig c = train_config_from_json(layered_config(path, overrides));
  c.validate();
  return c;
}

SyntheticConfig load_synthetic_config(const std::optional<std::filesystem::path>& path,
                                      const std::vector<Override>& overrides) {
  SyntheticConfig c = synthetic_config_from_json(layered_config(path, overrides));
  c.validate();
  return c;
}

}  // namespace protohead
