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

// Data carried by a synthesized utterance of the toy speech domain.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "capt/phoneme_core.hpp"

namespace capt {

/// Frame layout: 8 mel-like bands, then an f0 track, then an energy track.
inline constexpr int kBandCount = 8;
inline constexpr int kF0Column = 8;
inline constexpr int kEnergyColumn = 9;
inline constexpr int kFeatureDim = 10;
/// Each timbre component offsets two adjacent bands.
inline constexpr int kTimbreDim = 4;

using FrameMatrix = Eigen::MatrixXd;  // T x kFeatureDim

struct SpeakerProfile {
  int speaker_id = 0;
  std::array<double, kTimbreDim> timbre{};
  double base_f0 = 1.0;
  double rate = 1.0;  // duration multiplier

  double timbre_norm() const;
  /// Band offset vector (kBandCount) implied by the timbre.
  Eigen::VectorXd band_offsets() const;
  /// Throws InvalidInput unless rate is in [0.5, 2] and the timbre norm is
  /// at most `max_timbre_norm`.
  void validate(double max_timbre_norm) const;
  bool operator==(const SpeakerProfile&) const = default;
};

/// Realized per-phoneme prosody. The f0 and energy scales include the stress
/// factor of the phoneme and any per-phoneme jitter.
struct Prosody {
  std::vector<int> durations;
  std::vector<double> f0_scale;
  std::vector<double> energy_scale;

  int total_frames() const;
  /// Frame spans [start, end) implied by the durations.
  std::vector<std::pair<int, int>> spans() const;
  bool operator==(const Prosody&) const = default;
};

struct Utterance {
  FrameMatrix speech;
  PhonemeSeq canonical;  // the sequence the frames were generated from
  SpeakerProfile speaker;
  Prosody prosody;
  std::uint64_t prosody_seed = 0;
  std::uint64_t noise_seed = 0;

  int frames() const { return static_cast<int>(speech.rows()); }
};

}  // namespace capt
