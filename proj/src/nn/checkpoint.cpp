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

#include "capt/nn/checkpoint.hpp"

#include <fstream>

#include "capt/core/error.hpp"

namespace capt::nn {

void save_checkpoint(const std::string& stem, const ParameterSet& params,
                     nlohmann::json metadata) {
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw Error("cannot write '" + stem + ".bin'");
  params.save(bin);
  metadata["format"] = "capt-checkpoint";
  metadata["format_version"] = 1;
  std::ofstream meta(stem + ".json");
  if (!meta) throw Error("cannot write '" + stem + ".json'");
  meta << metadata.dump(2) << '\n';
}

std::pair<ParameterSet, nlohmann::json> load_checkpoint(const std::string& stem,
                                                        const std::string& kind) {
  std::ifstream meta(stem + ".json");
  if (!meta) throw InvalidInput("cannot open checkpoint metadata '" + stem + ".json'");
  nlohmann::json j = nlohmann::json::parse(meta);
  require(j.value("format", "") == "capt-checkpoint" && j.value("format_version", 0) == 1,
          "'" + stem + ".json' is not a checkpoint");
  require(j.value("kind", "") == kind, "checkpoint '" + stem + "' is not a " + kind);
  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw InvalidInput("cannot open checkpoint blob '" + stem + ".bin'");
  return {ParameterSet::load(bin), std::move(j)};
}

}  // namespace capt::nn
