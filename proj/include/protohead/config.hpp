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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "protohead/embedding_io.hpp"
#include "protohead/trainer.hpp"

namespace protohead {

inline constexpr const char* kArtifactVersion = "0.1.0";

// "key=value"; key is a dotted path such as loss.incongruity. The value is
// parsed as JSON when possible and taken as a string otherwise.
using Override = std::pair<std::string, std::string>;
Override parse_override(const std::string& text);

nlohmann::ordered_json to_json(const TrainConfig& config);
nlohmann::ordered_json to_json(const SyntheticConfig& config);

// Strict readers: unknown keys and wrong types raise ConfigError naming the key.
TrainConfig train_config_from_json(const nlohmann::json& j);
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

// Raw layered document: file values, then PROTO_SEED (when set), then
// overrides. An absent or empty path contributes nothing.
nlohmann::json layered_config(const std::optional<std::filesystem::path>& path,
                              const std::vector<Override>& overrides);

// defaults <- file <- PROTO_SEED <- overrides, validated.
TrainConfig load_config(const std::optional<std::filesystem::path>& path,
                        const std::vector<Override>& overrides = {});
SyntheticConfig load_synthetic_config(const std::optional<std::filesystem::path>& path,
                                      const std::vector<Override>& overrides = {});

}  // namespace protohead
