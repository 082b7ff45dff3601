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

#include "protohead/cli.hpp"

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "protohead/checkpoint.hpp"
#include "protohead/config.hpp"
#include "protohead/error.hpp"
#include "protohead/explain.hpp"
#include "protohead/simd/kernels.hpp"

namespace protohead {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct VerificationFailure : Error {
  using Error::Error;
};

std::optional<Manifest> try_manifest(const fs::path& pemb) {
  const auto m = manifest_path(pemb);
  if (!fs::exists(m)) return std::nullopt;
  return read_manifest(m);
}

EmbeddingDataset merge(const std::vector<const EmbeddingDataset*>& parts) {
  std::vector<EmbeddingRecord> rows;
  for (const auto* p : parts) rows.insert(rows.end(), p->records().begin(), p->records().end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].id == rows[i - 1].id)
      throw ValidationError("record id " + std::to_string(rows[i].id) + " occurs in two splits");
  return EmbeddingDataset(std::move(rows), parts.front()->num_classes());
}

ojson provenance(const std::string& command, const ojson& config, std::uint64_t seed) {
  ojson j;
  j["artifact"] = "protohead";
  j["artifact_version"] = kArtifactVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["simd"] = std::string(simd::level_name(simd::active_level()));
  j["config"] = config;
  return j;
}

std::string dump(const ojson& j) { return j.dump(1) + "\n"; }

const EmbeddingDataset& pick_split(const DataBundle& data, const std::string& which) {
  if (which == "train") return data.parts.train;
  if (which == "val") return data.parts.val;
  if (which == "test") return data.parts.test;
  if (which == "all") return data.all;
  throw ConfigError("--split: expected train, val, test or all");
}

void require_compatible(const Checkpoint& ck, const DataBundle& data) {
  if (data.all.dim() != ck.model.dim())
    throw ShapeError("dataset dimension " + std::to_string(data.all.dim()) +
                     " does not match checkpoint dimension " + std::to_string(ck.model.dim()));
  if (data.all.num_classes() != ck.model.num_classes())
    throw ShapeError("dataset has " + std::to_string(data.all.num_classes()) +
                     " classes, checkpoint expects " + std::to_string(ck.model.num_classes()));
}

}  // namespace

DataBundle load_data(const fs::path& dir, const SplitSpec& spec) {
  DataBundle b;
  const bool is_file = dir.extension() == ".pemb";
  if (!is_file && !fs::is_directory(dir)) throw IoError(dir.string(), "data directory not found");
  const fs::path single = is_file ? dir : dir / "data.pemb";
  if (!is_file && fs::exists(dir / "train.pemb")) {
    auto manifest = try_manifest(dir / "data.pemb");
    if (!manifest) manifest = try_manifest(dir / "train.pemb");
    std::optional<std::size_t> c = manifest ? manifest->num_classes : std::nullopt;
    // Without a manifest the class count must agree across parts, so read
    // them all first and use the largest label seen.
    auto train = read_pemb(dir / "train.pemb", c);
    auto val = read_pemb(dir / "val.pemb", c);
    auto test = read_pemb(dir / "test.pemb", c);
    if (!c) {
      const std::size_t cc = std::max({train.num_classes(), val.num_classes(), test.num_classes()});
      train = EmbeddingDataset(train.records(), cc);
      val = EmbeddingDataset(val.records(), cc);
      test = EmbeddingDataset(test.records(), cc);
    }
    b.parts = {std::move(train), std::move(val), std::move(test)};
    b.all = merge({&b.parts.train, &b.parts.val, &b.parts.test});
    if (manifest) b.hints = manifest->hints;
    return b;
  }
  if (!fs::exists(single)) throw IoError(single.string(), "dataset file not found");
  const auto manifest = try_manifest(single);
  b.all = read_pemb(single, manifest ? manifest->num_classes : std::nullopt);
  if (manifest) b.hints = manifest->hints;
  b.parts = split(b.all, spec);
  return b;
}

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string data;
  std::string out;
  std::string checkpoint;
  std::string head = "ga";
  std::string split = "test";
  bool two_view = false;
  bool timing = false;
  std::uint64_t id = 0;
  std::size_t top_k = 3;
  std::size_t sample = 200;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double tolerance = 1e-4;
};

std::vector<Override> overrides(const Options& o) {
  std::vector<Override> v;
  for (const auto& s : o.sets) v.push_back(parse_override(s));
  return v;
}

std::optional<fs::path> config_path(const Options& o) {
  if (o.config.empty()) return std::nullopt;
  return fs::path(o.config);
}

int cmd_gen_synth(const Options& o, std::ostream& out) {
  const auto cfg = load_synthetic_config(config_path(o), overrides(o));
  const fs::path dir = o.out;
  write_text(dir / "config.json", dump(to_json(cfg)));
  write_text(dir / "provenance.json", dump(provenance("gen-synth", to_json(cfg), cfg.seed)));
  const auto data = gen_synthetic(cfg);
  write_pemb(data.dataset, dir / "data.pemb");
  write_manifest(data, manifest_path(dir / "data.pemb"));
  out << "wrote " << data.dataset.size() << " records (D=" << data.dataset.dim()
      << ", C=" << data.dataset.num_classes() << ", views=" << data.dataset.num_views() << ") to "
      << (dir / "data.pemb").string() << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto cfg = load_config(config_path(o), overrides(o));
  const fs::path dir = o.out;
  write_text(dir / "config.json", dump(to_json(cfg)));
  write_text(dir / "provenance.json", dump(provenance("train", to_json(cfg), cfg.seed)));
  const auto data = load_data(o.data, cfg.split);
  auto result = train(cfg, data.parts.train, data.parts.val, data.parts.test, data.hints);
  save_checkpoint({std::move(result.model), cfg, cfg.seed}, dir / "checkpoint.json");
  write_text(dir / "report.json", dump(report_to_json(result.report, o.timing)));
  out << "best epoch " << result.report.best_epoch << ", val accuracy "
      << result.report.best_val_accuracy << ", test accuracy " << result.report.test_accuracy
      << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto ck = load_checkpoint(o.checkpoint);
  const auto data = load_data(o.data, ck.config.split);
  require_compatible(ck, data);
  const auto ev = evaluate(ck.model, pick_split(data, o.split));
  auto j = evaluation_to_json(ev);
  j["split"] = o.split;
  out << dump(j);
  return kExitOk;
}

int cmd_project(const Options& o, std::ostream& out) {
  auto ck = load_checkpoint(o.checkpoint);
  const fs::path target = o.out;
  write_text(fs::path(target.string() + ".provenance.json"),
             dump(provenance("project", to_json(ck.config), ck.seed)));
  const auto data = load_data(o.data, ck.config.split);
  require_compatible(ck, data);
  const auto map = project_prototypes(ck.model, data.parts.train, data.hints);
  save_checkpoint(ck, target);
  ojson j;
  j["exemplar_ids"] = map.exemplar_ids;
  j["sentiment_exemplar_ids"] = map.sentiment_exemplar_ids;
  j["mean_shift"] = map.mean_shift;
  j["distinguished_percentage"] = distinguished_percentage(ck.model.prototypes());
  out << dump(j);
  return kExitOk;
}

int cmd_explain(const Options& o, std::ostream& out) {
  const auto ck = load_checkpoint(o.checkpoint);
  const auto data = load_data(o.data, ck.config.split);
  require_compatible(ck, data);
  const auto pos = data.all.find(o.id);
  if (!pos) throw ValidationError("explain: no record with id " + std::to_string(o.id));
  const auto ex = explain_instance(ck.model, data.all[*pos], o.top_k, &data.all);
  out << dump(to_json(ex));
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  GradcheckConfig gc;
  gc.head = parse_head_kind(o.head);
  gc.two_view = o.two_view;
  gc.tolerance = o.tolerance;
  const std::uint64_t seed = o.seed_given ? o.seed : 7;
  const auto report = gradcheck(gc, seed);
  ojson j;
  j["head"] = o.head;
  j["two_view"] = o.two_view;
  j["seed"] = seed;
  j["tolerance"] = report.tolerance;
  ojson blocks = ojson::array();
  for (const auto& b : report.blocks)
    blocks.push_back({{"block", b.name}, {"size", b.size}, {"max_relative_error", b.max_relative_error}});
  j["blocks"] = blocks;
  j["passed"] = report.passed;
  out << dump(j);
  if (!report.passed) {
    std::string names;
    for (const auto& n : report.failing()) names += (names.empty() ? "" : ", ") + n;
    throw VerificationFailure("gradcheck: blocks exceed tolerance: " + names);
  }
  return kExitOk;
}

int cmd_export_viz(const Options& o, std::ostream& out) {
  const auto ck = load_checkpoint(o.checkpoint);
  const fs::path target = o.out;
  const std::uint64_t seed = o.seed_given ? o.seed : ck.seed;
  write_text(fs::path(target.string() + ".provenance.json"),
             dump(provenance("export-viz", to_json(ck.config), seed)));
  const auto data = load_data(o.data, ck.config.split);
  require_compatible(ck, data);
  export_viz(ck.model, data.parts.train, o.sample, seed, target);
  out << "wrote " << o.sample + ck.model.prototypes().size() << " points to " << target.string()
      << "\n";
  return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  const auto ck = load_checkpoint(o.checkpoint);
  const auto& m = ck.model;
  const auto& p = m.prototypes();
  out << "head        " << head_kind_name(m.kind()) << "\n";
  out << "seed        " << ck.seed << "\n";
  out << "dim         " << m.dim() << "\n";
  out << "classes     " << m.num_classes() << "\n";
  out << "prototypes  " << p.size() << "\n";
  if (const auto* ga = std::get_if<GAHeadModel>(&m.head)) {
    out << "heads       " << ga->num_heads() << " x D_h=" << ga->head_dim() << "\n";
    out << "neighbors   " << ga->neighbors << "\n";
    for (std::size_t h = 0; h < ga->heads.size(); ++h)
      out << "W_h[" << h << "]      " << ga->heads[h].projection.shape_string() << "  a_h[" << h
          << "] (" << ga->heads[h].attention.size() << ")\n";
  }
  std::visit([&](const auto& head) {
    out << "W_c         " << head.classifier.shape_string() << "\n";
    out << "b_c         (" << head.bias.size() << ")\n";
  }, m.head);
  out << "sentiment   " << (m.sentiment ? std::to_string(m.sentiment->size()) : std::string("none"))
      << "\n";
  out << "projected   " << (p.projected() ? "yes" : "no") << "\n";
  if (p.projected())
    out << "distinct    " << distinguished_percentage(p) << "\n";
  out << "\nprototype  exemplar_id\n";
  for (std::size_t k = 0; k < p.size(); ++k)
    out << std::setw(9) << k << "  "
        << (p.exemplar_id[k] ? std::to_string(*p.exemplar_id[k]) : std::string("-")) << "\n";
  if (m.sentiment) {
    out << "\nsentiment  polarity  exemplar_id\n";
    const auto& q = *m.sentiment;
    for (std::size_t k = 0; k < q.size(); ++k)
      out << std::setw(9) << k << "  "
          << std::setw(8) << (q.polarity[k] == Polarity::Positive ? "+" : "-") << "  "
          << (q.exemplar_id[k] ? std::to_string(*q.exemplar_id[k]) : std::string("-")) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prototype classification heads over precomputed embeddings", "protohead"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);
  Options o;

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "JSON config file");
    c->add_option("--set", o.sets, "Override a config key (key=value, dotted paths allowed)");
  };

  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic dataset");
  add_config(gen);
  gen->add_option("--out", o.out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Train a prototype head");
  add_config(tr);
  tr->add_option("--data", o.data, "Dataset directory or .pemb file")->required();
  tr->add_option("--out", o.out, "Output directory")->required();
  tr->add_flag("--timing", o.timing, "Record wall-clock time in the report");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  ev->add_option("--data", o.data, "Dataset directory or .pemb file")->required();
  ev->add_option("--split", o.split, "train, val, test or all")->capture_default_str();

  auto* pr = app.add_subcommand("project", "Project prototypes onto training exemplars");
  pr->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  pr->add_option("--data", o.data, "Dataset directory or .pemb file")->required();
  pr->add_option("--out", o.out, "Output checkpoint")->required();

  auto* ex = app.add_subcommand("explain", "Explain one prediction");
  ex->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  ex->add_option("--data", o.data, "Dataset directory or .pemb file")->required();
  ex->add_option("--id", o.id, "Record id")->required();
  ex->add_option("--top-k", o.top_k, "Edges listed per head")->capture_default_str();

  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and numeric gradients");
  gc->add_option("--head", o.head, "ga or cosine")->capture_default_str();
  gc->add_flag("--two-view", o.two_view, "Enable sentiment prototypes and incongruity");
  gc->add_option("--seed", o.seed, "Instance seed")->each([&](const std::string&) { o.seed_given = true; });
  gc->add_option("--tolerance", o.tolerance, "Max relative error")->capture_default_str();

  auto* vz = app.add_subcommand("export-viz", "Write PCA coordinates of data and prototypes");
  vz->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  vz->add_option("--data", o.data, "Dataset directory or .pemb file")->required();
  vz->add_option("--sample", o.sample, "Training rows sampled")->capture_default_str();
  vz->add_option("--out", o.out, "Output JSON")->required();
  vz->add_option("--seed", o.seed, "Sampling seed (default: checkpoint seed)")
      ->each([&](const std::string&) { o.seed_given = true; });

  auto* in = app.add_subcommand("inspect", "Print checkpoint shapes and exemplars");
  in->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kArtifactVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(o, out);
    if (tr->parsed()) return cmd_train(o, out);
    if (ev->parsed()) return cmd_eval(o, out);
    if (pr->parsed()) return cmd_project(o, out);
    if (ex->parsed()) return cmd_explain(o, out);
    if (gc->parsed()) return cmd_gradcheck(o, out);
    if (vz->parsed()) return cmd_export_viz(o, out);
    if (in->parsed()) return cmd_inspect(o, out);
  } catch (const VerificationFailure& e) {
    err << "verification failed: " << e.what() << "\n";
    return kExitVerification;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace protohead
