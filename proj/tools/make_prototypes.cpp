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

// Writes the band prototype table for the standard inventory to stdout.
// The committed asset was produced with the default seed.

#include <CLI11.hpp>
#include <iostream>

#include "capt/speech_sim.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the phoneme prototype asset"};
  std::uint64_t seed = capt::PrototypeTable::kDefaultSeed;
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);
  capt::PrototypeTable::generate(capt::PhonemeInventory::standard(), seed).save(std::cout);
  return 0;
}
