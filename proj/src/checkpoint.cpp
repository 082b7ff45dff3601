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

#include "protohead/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "protohead/config.hpp"
#include "protohead/error.hpp"

namespace protohead {
namespace {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

ojson tensor(const Matrix& m) {
  ojson j;
  j["shape"] = {m.rows(), m.cols()};
  j["data"] = m.data();
  return j;
}

ojson tensor(const std::vector<double>& v) {
  ojson j;
  j["shape"] = {v.size()};
  j["data"] = v;
  return j;
}

ojson prototype_set(const PrototypeSet& p) {
  ojson j;
  j["vectors"] = tensor(p.vectors);
  ojson ids = ojson::array();
  for (const auto& id : p.exemplar_id) ids.push_back(id ? ojson(*id) : ojson(nullptr));
  j["exemplar_id"] = ids;
  ojson pol = ojson::array();
  for (const auto& t : p.polarity)
    pol.push_back(t ? ojson(*t == Polarity::Positive ? "positive" : "negative") : ojson(nullptr));
  j["polarity"] = pol;
  return j;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw FormatError(std::string("checkpoint: missing field \"") + key + "\"");
  return j.at(key);
}

std::vector<double> read_data(const json& t, std::size_t expected, const std::string& name) {
  const auto& data = field(t, "data");
  if (!data.is_array() || data.size() != expected)
    throw FormatError("checkpoint: tensor " + name + " has " + std::to_string(data.size()) +
                      " values, shape implies " + std::to_string(expected));
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& v : data) {
    if (!v.is_number()) throw FormatError("checkpoint: tensor " + name + " holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

Matrix read_matrix(const json& t, const std::string& name) {
  const auto& shape = field(t, "shape");
  if (!shape.is_array() || shape.size() != 2)
    throw FormatError("checkpoint: tensor " + name + " must have a 2-d shape");
  const auto r = shape[0].get<std::size_t>(), c = shape[1].get<std::size_t>();
  return Matrix(r, c, read_data(t, r * c, name));
}

std::vector<double> read_vector(const json& t, const std::string& name) {
  const auto& shape = field(t, "shape");
  if (!shape.is_array() || shape.size() != 1)
    throw FormatError("checkpoint: tensor " + name + " must have a 1-d shape");
  return read_data(t, shape[0].get<std::size_t>(), name);
}

PrototypeSet read_prototypes(const json& j, const std::string& name) {
  PrototypeSet p(read_matrix(field(j, "vectors"), name + ".vectors"));
  const auto& ids = field(j, "exemplar_id");
  const auto& pol = field(j, "polarity");
  if (ids.size() != p.size() || pol.size() != p.size())
    throw FormatError("checkpoint: " + name + " metadata length does not match prototype count");
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!ids[k].is_null()) p.exemplar_id[k] = ids[k].get<std::uint64_t>();
    if (!pol[k].is_null()) {
      const auto s = pol[k].get<std::string>();
      if (s == "positive") p.polarity[k] = Polarity::Positive;
      else if (s == "negative") p.polarity[k] = Polarity::Negative;
      else throw FormatError("checkpoint: unknown polarity tag \"" + s + "\"");
    }
  }
  return p;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  ojson j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["artifact_version"] = kArtifactVersion;
  j["seed"] = ck.seed;
  // Execution mode is not part of the trained state: serial and parallel runs
  // produce the same bits, so they also produce the same checkpoint bytes.
  auto config = to_json(ck.config);
  config.erase("parallel");
  config.erase("threads");
  j["config"] = std::move(config);
  j["head"] = std::string(head_kind_name(ck.model.kind()));
  if (const auto* ga = std::get_if<GAHeadModel>(&ck.model.head)) {
    j["neighbors"] = ga->neighbors;
    j["num_features"] = ga->num_features;
    ojson heads = ojson::array();
    for (const auto& h : ga->heads) {
      ojson e;
      e["projection"] = tensor(h.projection);
      e["attention"] = tensor(h.attention);
      heads.push_back(e);
    }
    j["heads"] = heads;
    j["classifier"] = tensor(ga->classifier);
    j["bias"] = tensor(ga->bias);
    j["prototypes"] = prototype_set(ga->prototypes);
  } else {
    const auto& cos = std::get<CosineHeadModel>(ck.model.head);
    j["num_features"] = cos.num_features;
    j["classifier"] = tensor(cos.classifier);
    j["bias"] = tensor(cos.bias);
    j["prototypes"] = prototype_set(cos.prototypes);
  }
  j["sentiment_prototypes"] = ck.model.sentiment ? prototype_set(*ck.model.sentiment) : ojson(nullptr);
  return j.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (field(j, "format") != kCheckpointFormat) throw FormatError("checkpoint: unknown format tag");
    if (field(j, "version") != kCheckpointVersion)
      throw FormatError("checkpoint: unsupported version " + field(j, "version").dump());
    Checkpoint ck;
    ck.seed = field(j, "seed").get<std::uint64_t>();
    ck.config = train_config_from_json(field(j, "config"));
    const auto kind = parse_head_kind(field(j, "head").get<std::string>());
    if (kind == HeadKind::GA) {
      GAHeadModel ga;
      ga.neighbors = field(j, "neighbors").get<std::size_t>();
      ga.num_features = field(j, "num_features").get<std::size_t>();
      const auto& heads = field(j, "heads");
      for (std::size_t h = 0; h < heads.size(); ++h) {
        const auto tag = "heads[" + std::to_string(h) + "]";
        ga.heads.push_back({read_matrix(field(heads[h], "projection"), tag + ".projection"),
                            read_vector(field(heads[h], "attention"), tag + ".attention")});
      }
      ga.classifier = read_matrix(field(j, "classifier"), "classifier");
      ga.bias = read_vector(field(j, "bias"), "bias");
      ga.prototypes = read_prototypes(field(j, "prototypes"), "prototypes");
      ga.validate();
      ck.model.head = std::move(ga);
    } else {
      CosineHeadModel cos;
      cos.num_features = field(j, "num_features").get<std::size_t>();
      cos.classifier = read_matrix(field(j, "classifier"), "classifier");
      cos.bias = read_vector(field(j, "bias"), "bias");
      cos.prototypes = read_prototypes(field(j, "prototypes"), "prototypes");
      cos.validate();
      ck.model.head = std::move(cos);
    }
    const auto& sent = field(j, "sentiment_prototypes");
    if (!sent.is_null()) {
      ck.model.sentiment = read_prototypes(sent, "sentiment_prototypes");
      ck.model.sentiment->validate();
      if (ck.model.sentiment->dim() != ck.model.dim())
        throw FormatError("checkpoint: sentiment prototypes have the wrong dimension");
    }
    const std::size_t features = ck.model.sentiment ? 3 : 0;
    const std::size_t declared = std::visit([](const auto& h) { return h.num_features; }, ck.model.head);
    if (declared != features)
      throw FormatError("checkpoint: num_features " + std::to_string(declared) +
                        " disagrees with the sentiment prototype block");
    return ck;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  out.close();
  if (!out) throw IoError(path.string(), "write failed");
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_text(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open checkpoint");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

ojson report_to_json(const TrainReport& r, bool include_timing) {
  ojson j;
  j["seed"] = r.seed;
  j["best_epoch"] = r.best_epoch;
  j["best_val_accuracy"] = r.best_val_accuracy;
  j["test_accuracy"] = r.test_accuracy;
  j["test_loss"] = r.test_loss;
  j["early_stopped"] = r.early_stopped;
  ojson epochs = ojson::array();
  for (const auto& e : r.epochs) {
    ojson x;
    x["epoch"] = e.epoch;
    x["train_loss"] = e.train_loss;
    x["train_accuracy"] = e.train_accuracy;
    x["val_loss"] = e.val_loss;
    x["val_accuracy"] = e.val_accuracy;
    x["projected"] = e.projected;
    epochs.push_back(x);
  }
  j["epochs"] = epochs;
  ojson proj = ojson::array();
  for (const auto& p : r.projections) {
    ojson x;
    x["epoch"] = p.epoch;
    x["final"] = p.final;
    x["exemplar_ids"] = p.exemplar_ids;
    x["sentiment_exemplar_ids"] = p.sentiment_exemplar_ids;
    x["mean_shift"] = p.mean_shift;
    proj.push_back(x);
  }
  j["projections"] = proj;
  if (include_timing) j["wall_clock_seconds"] = r.wall_clock_seconds;
  return j;
}

ojson evaluation_to_json(const Evaluation& e) {
  ojson j;
  j["accuracy"] = e.accuracy;
  j["mean_loss"] = e.mean_loss;
  j["confusion"] = e.confusion;
  return j;
}

}  // namespace protohead
