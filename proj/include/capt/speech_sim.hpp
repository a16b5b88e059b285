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

// The toy speech domain: a parametric frame synthesizer (T2S), duration and
// timbre preserving conversion (S2S), forced alignment and the four-way
// example generator built on both.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "capt/error_injector.hpp"
#include "capt/phoneme_core.hpp"
#include "capt/utterance.hpp"

namespace capt {

/// Directory holding versioned assets: $CAPT_ASSET_DIR if set, otherwise the
/// directory configured at build time.
std::string asset_dir();

/// Per-phoneme band prototypes.
class PrototypeTable {
 public:
  static constexpr int kVersion = 1;
  static constexpr std::uint64_t kDefaultSeed = 20210601;
  static constexpr const char* kFileName = "phoneme_prototypes.v1.tsv";

  /// Vowel bases and consonants are Gaussian draws; each stress variant adds
  /// its own 0.35-norm offset to its vowel base.
  static PrototypeTable generate(const PhonemeInventory& inventory, std::uint64_t seed);
  static PrototypeTable load(std::istream& in, const PhonemeInventory& inventory);
  static PrototypeTable load_file(const std::string& path, const PhonemeInventory& inventory);
  /// The frozen table for the standard inventory, loaded once from asset_dir().
  static const PrototypeTable& standard();
  void save(std::ostream& out) const;

  const Eigen::VectorXd& band(PhonemeId id) const;
  int size() const { return static_cast<int>(bands_.size()); }
  std::uint64_t seed() const { return seed_; }
  bool operator==(const PrototypeTable&) const = default;

 private:
  std::vector<Eigen::VectorXd> bands_;
  std::uint64_t seed_ = 0;
};

struct SynthConfig {
  double noise_sigma = 0.1;
  double max_timbre_norm = 1.5;
  double f0_jitter = 0.04;      // relative, per phoneme
  double energy_jitter = 0.04;  // relative, per phoneme
  double tempo_jitter = 0.1;    // relative, per utterance
  /// Scales how far stressed vowels depart from unstressed prosody; 0 gives
  /// flat prosody, 1 the nominal targets.
  double stress_contrast = 1.0;
};

/// Nominal prosody of a phoneme before speaker rate and jitter.
struct ProsodyTargets {
  int duration;
  double f0_scale;
  double energy_scale;
};
ProsodyTargets prosody_targets(const PhonemeInventory& inventory, PhonemeId id);

struct SynthSeeds {
  std::uint64_t prosody = 0;
  std::uint64_t noise = 0;
  /// Splits one seed into independent prosody and noise streams.
  static SynthSeeds from(std::uint64_t seed);
};

/// Speaker with timbre drawn uniformly in direction and norm up to
/// `max_timbre_norm`, base f0 in [0.85, 1.15] and rate in [0.85, 1.15].
SpeakerProfile random_speaker(int id, double max_timbre_norm, Rng& rng);
/// The voice used for text-to-speech generation: zero timbre, unit rate.
SpeakerProfile tts_speaker();

enum class AlignMode { kAuto, kOracle, kDynamic };

enum class GenerationMode { kT2S, kS2S };

struct QuadrupleConfig {
  GenerationMode mode = GenerationMode::kT2S;
  PerturbationConfig perturbation;
  std::uint64_t seed = 0;
};

class Synthesizer {
 public:
  Synthesizer(const PhonemeInventory& inventory, const PrototypeTable& prototypes,
              SynthConfig config = {});
  /// Standard inventory and frozen prototypes.
  static const Synthesizer& standard();

  const PhonemeInventory& inventory() const { return *inventory_; }
  const PrototypeTable& prototypes() const { return *prototypes_; }
  const SynthConfig& config() const { return config_; }
  /// Copy with different settings (shares inventory and prototypes).
  Synthesizer with_config(SynthConfig config) const;

  /// Each phoneme emits `duration` frames of prototype + timbre offset, with
  /// stress-scaled f0 and energy, plus N(0, sigma^2) noise on every column.
  Utterance synthesize(const PhonemeSeq& r, const SpeakerProfile& speaker, SynthSeeds seeds) const;
  Utterance synthesize(const PhonemeSeq& r, const SpeakerProfile& speaker,
                       std::uint64_t seed) const;
  /// Synthesis without any prosodic jitter (the TTS voice).
  Utterance synthesize_neutral(const PhonemeSeq& r, std::uint64_t noise_seed) const;

  /// Re-renders `u` with the phonemes of r_prime. Matched and substituted
  /// positions keep their durations, insertions get the nominal duration,
  /// deletions drop their frames. Speaker and the noise-free f0/energy
  /// contours of `u` carry over, resampled linearly when the frame count
  /// changes. Noise uses `noise_seed` (default: u's own).
  Utterance s2s_convert(const Utterance& u, const PhonemeSeq& r, const PhonemeSeq& r_prime,
                        std::optional<std::uint64_t> noise_seed = std::nullopt) const;

  /// Per-phoneme [start, end) frame spans. Oracle mode returns the recorded
  /// prosody (requires r to be u's canonical); dynamic mode minimizes squared
  /// band distance to the timbre-shifted prototypes. Auto picks oracle
  /// whenever it applies.
  std::vector<std::pair<int, int>> forced_align(const Utterance& u, const PhonemeSeq& r,
                                                AlignMode mode = AlignMode::kAuto) const;

  /// {e_noerr, s, r}, {e_err, s, r'}, {e_noerr, s', r'}, {e_err, s', r}.
  std::array<TrainingExample, 4> make_quadruple(std::shared_ptr<const Utterance> u,
                                                const PhonemeSeq& r,
                                                const QuadrupleConfig& cfg) const;

  /// Generated speech s' for r' (the third and fourth quadruple members).
  Utterance generate(const Utterance& u, const PhonemeSeq& r, const PhonemeSeq& r_prime,
                     GenerationMode mode, std::uint64_t seed) const;

 private:
  FrameMatrix render(const PhonemeSeq& seq, const std::vector<int>& durations,
                     const Eigen::VectorXd& f0, const Eigen::VectorXd& energy,
                     const SpeakerProfile& speaker, std::uint64_t noise_seed) const;
  Prosody sample_prosody(const PhonemeSeq& r, const SpeakerProfile& speaker,
                         std::uint64_t seed, bool jitter) const;
  Utterance synthesize_impl(const PhonemeSeq& r, const SpeakerProfile& speaker,
                            SynthSeeds seeds, bool jitter) const;

  const PhonemeInventory* inventory_;
  const PrototypeTable* prototypes_;
  SynthConfig config_;
};

/// Per-frame f0 or energy contour implied by a prosody (noise free).
Eigen::VectorXd prosody_contour(const Prosody& prosody, const std::vector<double>& scales,
                                double base);

/// Linear resampling of a contour to `frames` samples; identity when the
/// length is unchanged.
Eigen::VectorXd resample_linear(const Eigen::VectorXd& x, int frames);

/// Utterance persistence: raw little-endian frame matrix plus JSON sidecar.
void save_utterance(const Utterance& u, const std::string& stem, const PhonemeInventory& inventory);
Utterance load_utterance(const std::string& stem, const PhonemeInventory& inventory);

}  // namespace capt
