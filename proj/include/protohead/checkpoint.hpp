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

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "protohead/model.hpp"
#include "protohead/trainer.hpp"

namespace protohead {

inline constexpr const char* kCheckpointFormat = "protohead-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  TrainConfig config;
  std::uint64_t seed = 0;
};

// Keys are written in a fixed order and doubles in shortest round-trip form,
// so equal states give equal bytes. Layout is described in docs/formats.md.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Wall-clock time is omitted unless include_timing is set, keeping reports
// of identical runs byte-identical.
nlohmann::ordered_json report_to_json(const TrainReport& report, bool include_timing = false);
nlohmann::ordered_json evaluation_to_json(const Evaluation& evaluation);

// Writes text to path, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace protohead
