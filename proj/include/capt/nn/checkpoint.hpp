// Copyright 2026 The synthcapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Model checkpoints: a parameter blob next to a JSON metadata file.

#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <utility>

#include "capt/nn/tape.hpp"

namespace capt::nn {

/// Writes `stem`.bin and `stem`.json. The metadata gains a "format" field.
void save_checkpoint(const std::string& stem, const ParameterSet& params,
                     nlohmann::json metadata);

/// Reads a checkpoint; throws InvalidInput when either file is missing or
/// the metadata names another `kind`.
std::pair<ParameterSet, nlohmann::json> load_checkpoint(const std::string& stem,
                                                        const std::string& kind);

}  // namespace capt::nn
