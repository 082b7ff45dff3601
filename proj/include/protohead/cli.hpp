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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "protohead/embedding_io.hpp"
#include "protohead/trainer.hpp"

namespace protohead {

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,
  kExitUsage = 2,
  kExitVerification = 3,
};

struct DataBundle {
  EmbeddingDataset all;  // every record, for id lookup
  DatasetSplit parts;
  PolarityHints hints;
};

// `dir` holds either train/val/test .pemb files or a single data.pemb that is
// split with `spec`; an optional data.manifest.json supplies C and polarity
// hints. A path to a .pemb file is treated like data.pemb.
DataBundle load_data(const std::filesystem::path& dir, const SplitSpec& spec);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace protohead
