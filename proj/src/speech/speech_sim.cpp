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

#include "capt/speech_sim.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "capt/core/error.hpp"
#include "capt/core/rng.hpp"

#ifndef CAPT_ASSET_DIR_DEFAULT
#define CAPT_ASSET_DIR_DEFAULT "assets"
#endif

namespace capt {

namespace {

constexpr double kStressOffset = 0.35;
constexpr double kPrototypeScale = 0.6;
constexpr char kUtteranceMagic[8] = {'C', 'A', 'P', 'T', 'U', 'T', 'T', '1'};

}  // namespace

std::string asset_dir() {
  if (const char* env = std::getenv("CAPT_ASSET_DIR"); env != nullptr && *env != '\0') return env;
  return CAPT_ASSET_DIR_DEFAULT;
}

// ---- SpeakerProfile / Prosody ---------------------------------------------

double SpeakerProfile::timbre_norm() const {
  double s = 0.0;
  for (double t : timbre) s += t * t;
  return std::sqrt(s);
}

Eigen::VectorXd SpeakerProfile::band_offsets() const {
  Eigen::VectorXd out(kBandCount);
  for (int b = 0; b < kBandCount; ++b) out[b] = timbre[b / 2];
  return out;
}

void SpeakerProfile::validate(double max_timbre_norm) const {
  require(rate >= 0.5 && rate <= 2.0, "speaker rate must lie in [0.5, 2]");
  require(timbre_norm() <= max_timbre_norm + 1e-12, "speaker timbre norm exceeds the bound");
  require(std::isfinite(base_f0) && base_f0 > 0.0, "speaker base f0 must be positive");
}

int Prosody::total_frames() const {
  int t = 0;
  for (int d : durations) t += d;
  return t;
}

std::vector<std::pair<int, int>> Prosody::spans() const {
  std::vector<std::pair<int, int>> out;
  int t = 0;
  for (int d : durations) {
    out.emplace_back(t, t + d);
    t += d;
  }
  return out;
}

// ---- PrototypeTable -------------------------------------------------------

PrototypeTable PrototypeTable::generate(const PhonemeInventory& inventory, std::uint64_t seed) {
  Rng rng(seed);
  auto draw = [&rng](double scale) {
    Eigen::VectorXd v(kBandCount);
    for (int b = 0; b < kBandCount; ++b) v[b] = scale * rng.normal();
    return v;
  };
  PrototypeTable table;
  table.seed_ = seed;
  table.bands_.resize(inventory.size());
  std::vector<Eigen::VectorXd> bases;
  for (int v = 0; v < inventory.vowel_count(); ++v) bases.push_back(draw(kPrototypeScale));
  for (PhonemeId id = 0; id < inventory.size(); ++id) {
    if (inventory.is_vowel(id)) {
      const Eigen::VectorXd dir = draw(1.0);
      table.bands_[id] = bases[id / 3] + kStressOffset * dir / dir.norm();
    } else {
      table.bands_[id] = draw(kPrototypeScale);
    }
  }
  return table;
}

PrototypeTable PrototypeTable::load(std::istream& in, const PhonemeInventory& inventory) {
  PrototypeTable table;
  table.bands_.assign(inventory.size(), Eigen::VectorXd());
  std::string line;
  int version = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "version") {
      fields >> version;
    } else if (key == "seed") {
      fields >> table.seed_;
    } else {
      const PhonemeId id = inventory.id(key);
      require(table.bands_[id].size() == 0, "prototype listed twice: " + key);
      Eigen::VectorXd v(kBandCount);
      for (int b = 0; b < kBandCount; ++b)
        if (!(fields >> v[b])) throw InvalidInput("prototype row too short: " + key);
      table.bands_[id] = v;
    }
  }
  require(version == kVersion, "unsupported prototype table version");
  for (PhonemeId id = 0; id < inventory.size(); ++id)
    require(table.bands_[id].size() == kBandCount,
            "prototype missing for " + inventory.symbol(id));
  return table;
}

PrototypeTable PrototypeTable::load_file(const std::string& path,
                                         const PhonemeInventory& inventory) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open prototype table '" + path + "'");
  return load(in, inventory);
}

const PrototypeTable& PrototypeTable::standard() {
  static const PrototypeTable table =
      load_file(asset_dir() + "/" + kFileName, PhonemeInventory::standard());
  return table;
}

void PrototypeTable::save(std::ostream& out) const {
  const auto& inv = PhonemeInventory::standard();
  require(size() == inv.size(), "only tables over the standard inventory can be saved");
  out << "# phoneme band prototypes: symbol then " << kBandCount << " band values\n";
  out << "version\t" << kVersion << "\nseed\t" << seed_ << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (PhonemeId id = 0; id < size(); ++id) {
    out << inv.symbol(id);
    for (int b = 0; b < kBandCount; ++b) out << '\t' << bands_[id][b];
    out << '\n';
  }
}

const Eigen::VectorXd& PrototypeTable::band(PhonemeId id) const {
  require(id >= 0 && id < size(), "prototype id out of range");
  return bands_[id];
}

// ---- prosody --------------------------------------------------------------

ProsodyTargets prosody_targets(const PhonemeInventory& inventory, PhonemeId id) {
  switch (inventory.stress(id)) {
    case 1: return {9, 1.3, 1.4};
    case 2: return {7, 1.15, 1.2};
    case 0: return {6, 1.0, 1.0};
    default: return {4, 1.0, 0.9};
  }
}

SynthSeeds SynthSeeds::from(std::uint64_t seed) {
  return {derive_seed(seed, 0x70726f73), derive_seed(seed, 0x6e6f6973)};
}

SpeakerProfile random_speaker(int id, double max_timbre_norm, Rng& rng) {
  SpeakerProfile s;
  s.speaker_id = id;
  Eigen::Vector4d dir;
  for (int k = 0; k < kTimbreDim; ++k) dir[k] = rng.normal();
  const double norm = max_timbre_norm * std::sqrt(rng.uniform());
  dir *= norm / dir.norm();
  for (int k = 0; k < kTimbreDim; ++k) s.timbre[k] = dir[k];
  s.base_f0 = rng.uniform(0.85, 1.15);
  s.rate = rng.uniform(0.85, 1.15);
  return s;
}

SpeakerProfile tts_speaker() {
  SpeakerProfile s;
  s.speaker_id = -1;
  return s;
}

Eigen::VectorXd prosody_contour(const Prosody& prosody, const std::vector<double>& scales,
                                double base) {
  require(scales.size() == prosody.durations.size(), "prosody scales do not match durations");
  Eigen::VectorXd out(prosody.total_frames());
  int t = 0;
  for (std::size_t j = 0; j < scales.size(); ++j)
    for (int k = 0; k < prosody.durations[j]; ++k) out[t++] = base * scales[j];
  return out;
}

Eigen::VectorXd resample_linear(const Eigen::VectorXd& x, int frames) {
  require(x.size() >= 1 && frames >= 1, "resample_linear: empty contour");
  if (x.size() == frames) return x;
  Eigen::VectorXd out(frames);
  if (x.size() == 1 || frames == 1) {
    out.setConstant(x.size() == 1 ? x[0] : x.mean());
    return out;
  }
  const double step = static_cast<double>(x.size() - 1) / (frames - 1);
  for (int t = 0; t < frames; ++t) {
    const double pos = t * step;
    const auto lo = std::min(static_cast<Eigen::Index>(pos), x.size() - 2);
    const double frac = pos - static_cast<double>(lo);
    out[t] = (1.0 - frac) * x[lo] + frac * x[lo + 1];
  }
  return out;
}

// ---- Synthesizer ----------------------------------------------------------

Synthesizer::Synthesizer(const PhonemeInventory& inventory, const PrototypeTable& prototypes,
                         SynthConfig config)
    : inventory_(&inventory), prototypes_(&prototypes), config_(config) {
  require(prototypes.size() == inventory.size(), "prototype table does not match inventory");
  require(config.noise_sigma >= 0.0, "noise sigma must be non-negative");
  require(config.stress_contrast >= 0.0 && config.stress_contrast <= 2.0,
          "stress contrast must lie in [0, 2]");
}

const Synthesizer& Synthesizer::standard() {
  static const Synthesizer synth(PhonemeInventory::standard(), PrototypeTable::standard());
  return synth;
}

Synthesizer Synthesizer::with_config(SynthConfig config) const {
  return Synthesizer(*inventory_, *prototypes_, config);
}

Prosody Synthesizer::sample_prosody(const PhonemeSeq& r, const SpeakerProfile& speaker,
                                    std::uint64_t seed, bool jitter) const {
  Rng rng(seed);
  auto jittered = [&](double amount) {
    const double u = rng.uniform(-1.0, 1.0);
    return jitter ? 1.0 + amount * u : 1.0;
  };
  const double tempo = jittered(config_.tempo_jitter);
  Prosody p;
  const double k = config_.stress_contrast;
  for (PhonemeId id : r.phonemes()) {
    const auto t = prosody_targets(*inventory_, id);
    double duration = t.duration, f0 = t.f0_scale, energy = t.energy_scale;
    if (inventory_->is_vowel(id)) {
      const auto flat = prosody_targets(*inventory_, inventory_->with_stress(id, 0));
      duration = flat.duration + k * (t.duration - flat.duration);
      f0 = flat.f0_scale + k * (t.f0_scale - flat.f0_scale);
      energy = flat.energy_scale + k * (t.energy_scale - flat.energy_scale);
    }
    p.durations.push_back(
        std::max(1, static_cast<int>(std::lround(duration * speaker.rate * tempo))));
    p.f0_scale.push_back(f0 * jittered(config_.f0_jitter));
    p.energy_scale.push_back(energy * jittered(config_.energy_jitter));
  }
  return p;
}

FrameMatrix Synthesizer::render(const PhonemeSeq& seq, const std::vector<int>& durations,
                                const Eigen::VectorXd& f0, const Eigen::VectorXd& energy,
                                const SpeakerProfile& speaker, std::uint64_t noise_seed) const {
  const int frames = static_cast<int>(f0.size());
  FrameMatrix out(frames, kFeatureDim);
  const Eigen::VectorXd offsets = speaker.band_offsets();
  int t = 0;
  for (int j = 0; j < seq.size(); ++j) {
    const Eigen::VectorXd bands = prototypes_->band(seq[j]) + offsets;
    for (int k = 0; k < durations[j]; ++k, ++t) {
      out.row(t).head(kBandCount) = bands.transpose();
      out(t, kF0Column) = f0[t];
      out(t, kEnergyColumn) = energy[t];
    }
  }
  if (config_.noise_sigma > 0.0) {
    Rng rng(noise_seed);
    for (int i = 0; i < frames; ++i)
      for (int c = 0; c < kFeatureDim; ++c) out(i, c) += config_.noise_sigma * rng.normal();
  }
  return out;
}

Utterance Synthesizer::synthesize_impl(const PhonemeSeq& r, const SpeakerProfile& speaker,
                                       SynthSeeds seeds, bool jitter) const {
  require(!r.empty(), "synthesize: empty phoneme sequence");
  r.check(*inventory_);
  speaker.validate(config_.max_timbre_norm);
  Utterance u;
  u.canonical = r;
  u.speaker = speaker;
  u.prosody = sample_prosody(r, speaker, seeds.prosody, jitter);
  u.prosody_seed = seeds.prosody;
  u.noise_seed = seeds.noise;
  const Eigen::VectorXd f0 = prosody_contour(u.prosody, u.prosody.f0_scale, speaker.base_f0);
  const Eigen::VectorXd energy = prosody_contour(u.prosody, u.prosody.energy_scale, 1.0);
  u.speech = render(r, u.prosody.durations, f0, energy, speaker, seeds.noise);
  return u;
}

Utterance Synthesizer::synthesize(const PhonemeSeq& r, const SpeakerProfile& speaker,
                                  SynthSeeds seeds) const {
  return synthesize_impl(r, speaker, seeds, true);
}

Utterance Synthesizer::synthesize(const PhonemeSeq& r, const SpeakerProfile& speaker,
                                  std::uint64_t seed) const {
  return synthesize(r, speaker, SynthSeeds::from(seed));
}

Utterance Synthesizer::synthesize_neutral(const PhonemeSeq& r, std::uint64_t noise_seed) const {
  return synthesize_impl(r, tts_speaker(), SynthSeeds{0, noise_seed}, false);
}

namespace {

// Position in `r` each phoneme of `r_prime` corresponds to (-1 for insertions).
std::vector<int> correspondence(const PhonemeSeq& r, const PhonemeSeq& r_prime) {
  std::vector<int> source;
  auto segment = [&](int a0, int a_len, int b0, int b_len) {
    if (a_len == b_len) {
      for (int k = 0; k < b_len; ++k) source.push_back(a0 + k);
      return;
    }
    const auto a = std::span(r.phonemes()).subspan(a0, a_len);
    const auto b = std::span(r_prime.phonemes()).subspan(b0, b_len);
    for (const auto& op : align(a, b).ops)
      if (op.b_pos >= 0) source.push_back(op.a_pos >= 0 ? a0 + op.a_pos : -1);
  };
  if (r.word_count() == r_prime.word_count()) {
    for (int w = 0; w < r.word_count(); ++w) {
      const auto& a = r.spans()[w];
      const auto& b = r_prime.spans()[w];
      segment(a.start, a.length(), b.start, b.length());
    }
  } else {
    segment(0, r.size(), 0, r_prime.size());
  }
  return source;
}

}  // namespace

Utterance Synthesizer::s2s_convert(const Utterance& u, const PhonemeSeq& r,
                                   const PhonemeSeq& r_prime,
                                   std::optional<std::uint64_t> noise_seed) const {
  require(!r_prime.empty(), "s2s_convert: empty target sequence");
  require(r == u.canonical, "s2s_convert: r must be the utterance's canonical sequence");
  r_prime.check(*inventory_);
  require(static_cast<int>(u.prosody.durations.size()) == r.size(),
          "s2s_convert: utterance carries no per-phoneme prosody");

  Utterance out;
  out.canonical = r_prime;
  out.speaker = u.speaker;
  out.prosody_seed = u.prosody_seed;
  out.noise_seed = noise_seed.value_or(u.noise_seed);
  const std::vector<int> source = correspondence(r, r_prime);
  for (int j = 0; j < r_prime.size(); ++j) {
    const int nominal = static_cast<int>(
        std::lround(prosody_targets(*inventory_, r_prime[j]).duration * u.speaker.rate));
    out.prosody.durations.push_back(source[j] >= 0 ? u.prosody.durations[source[j]]
                                                   : std::max(1, nominal));
  }
  const int frames = out.prosody.total_frames();
  const Eigen::VectorXd f0 = resample_linear(
      prosody_contour(u.prosody, u.prosody.f0_scale, u.speaker.base_f0), frames);
  const Eigen::VectorXd energy =
      resample_linear(prosody_contour(u.prosody, u.prosody.energy_scale, 1.0), frames);
  int t = 0;
  for (int d : out.prosody.durations) {
    out.prosody.f0_scale.push_back(f0.segment(t, d).mean() / u.speaker.base_f0);
    out.prosody.energy_scale.push_back(energy.segment(t, d).mean());
    t += d;
  }
  out.speech = render(r_prime, out.prosody.durations, f0, energy, u.speaker, out.noise_seed);
  return out;
}

std::vector<std::pair<int, int>> Synthesizer::forced_align(const Utterance& u,
                                                           const PhonemeSeq& r,
                                                           AlignMode mode) const {
  require(!r.empty(), "forced_align: empty phoneme sequence");
  r.check(*inventory_);
  const bool oracle_ok = r == u.canonical &&
                         static_cast<int>(u.prosody.durations.size()) == r.size() &&
                         u.prosody.total_frames() == u.frames();
  if (mode == AlignMode::kOracle && !oracle_ok)
    throw AlignmentFailure("forced_align: no ground-truth prosody for this sequence");
  if (mode != AlignMode::kDynamic && oracle_ok) return u.prosody.spans();

  const int n = r.size();
  const int frames = u.frames();
  if (frames < n)
    throw AlignmentFailure("forced_align: " + std::to_string(n) + " phonemes cannot fit in " +
                           std::to_string(frames) + " frames");
  const Eigen::VectorXd offsets = u.speaker.band_offsets();
  Eigen::MatrixXd cost(n, frames);
  for (int j = 0; j < n; ++j) {
    const Eigen::RowVectorXd target = (prototypes_->band(r[j]) + offsets).transpose();
    for (int t = 0; t < frames; ++t)
      cost(j, t) = (u.speech.row(t).head(kBandCount) - target).squaredNorm();
  }
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best = Eigen::MatrixXd::Constant(n, frames, inf);
  // from_prev(j, t): frame t-1 belonged to phoneme j-1.
  std::vector<std::vector<char>> from_prev(n, std::vector<char>(frames, 0));
  best(0, 0) = cost(0, 0);
  for (int t = 1; t < frames; ++t)
    for (int j = 0; j < n && j <= t; ++j) {
      const double stay = best(j, t - 1);
      const double advance = j > 0 ? best(j - 1, t - 1) : inf;
      if (advance < stay) {
        best(j, t) = advance + cost(j, t);
        from_prev[j][t] = 1;
      } else {
        best(j, t) = stay + cost(j, t);
      }
    }
  std::vector<std::pair<int, int>> spans(n);
  int j = n - 1, end = frames;
  for (int t = frames - 1; t > 0; --t)
    if (from_prev[j][t]) {
      spans[j] = {t, end};
      end = t;
      --j;
    }
  spans[0] = {0, end};
  return spans;
}

Utterance Synthesizer::generate(const Utterance& u, const PhonemeSeq& r,
                                const PhonemeSeq& r_prime, GenerationMode mode,
                                std::uint64_t seed) const {
  if (mode == GenerationMode::kT2S) return synthesize_neutral(r_prime, seed);
  return s2s_convert(u, r, r_prime, seed);
}

std::array<TrainingExample, 4> Synthesizer::make_quadruple(std::shared_ptr<const Utterance> u,
                                                           const PhonemeSeq& r,
                                                           const QuadrupleConfig& cfg) const {
  require(u != nullptr, "make_quadruple: no utterance");
  PerturbationConfig pc = cfg.perturbation;
  Rng rng(derive_seed(cfg.seed, 1));
  const PhonemeSeq r_prime = perturb_with_retry(r, pc, *inventory_, rng);
  auto s_prime = std::make_shared<const Utterance>(
      generate(*u, r, r_prime, cfg.mode, derive_seed(cfg.seed, 2)));
  const Provenance prov =
      cfg.mode == GenerationMode::kT2S ? Provenance::kT2S : Provenance::kS2S;
  return {TrainingExample{ErrorLabels::no_error(r), u, r, Provenance::kOriginal},
          TrainingExample{project_errors(r, r_prime), u, r_prime, prov},
          TrainingExample{ErrorLabels::no_error(r_prime), s_prime, r_prime, prov},
          TrainingExample{project_errors(r_prime, r), s_prime, r, prov}};
}

// ---- persistence ----------------------------------------------------------

void save_utterance(const Utterance& u, const std::string& stem,
                    const PhonemeInventory& inventory) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw Error("cannot write '" + stem + ".bin'");
  const std::int32_t rows = static_cast<std::int32_t>(u.speech.rows());
  const std::int32_t cols = static_cast<std::int32_t>(u.speech.cols());
  bin.write(kUtteranceMagic, sizeof kUtteranceMagic);
  bin.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  bin.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = u.speech;
  bin.write(reinterpret_cast<const char*>(row_major.data()),
            static_cast<std::streamsize>(sizeof(double) * row_major.size()));

  nlohmann::json words = nlohmann::json::array();
  for (const auto& w : u.canonical.words()) words.push_back(inventory.format(w));
  nlohmann::json j = {
      {"format", "capt-utterance"},
      {"version", 1},
      {"frames", rows},
      {"features", cols},
      {"words", words},
      {"speaker",
       {{"id", u.speaker.speaker_id},
        {"timbre", u.speaker.timbre},
        {"base_f0", u.speaker.base_f0},
        {"rate", u.speaker.rate}}},
      {"prosody",
       {{"durations", u.prosody.durations},
        {"f0_scale", u.prosody.f0_scale},
        {"energy_scale", u.prosody.energy_scale}}},
      {"prosody_seed", u.prosody_seed},
      {"noise_seed", u.noise_seed},
  };
  std::ofstream side(stem + ".json");
  if (!side) throw Error("cannot write '" + stem + ".json'");
  side << j.dump(2) << '\n';
}

Utterance load_utterance(const std::string& stem, const PhonemeInventory& inventory) {
  std::ifstream side(stem + ".json");
  if (!side) throw InvalidInput("cannot open '" + stem + ".json'");
  const nlohmann::json j = nlohmann::json::parse(side);
  require(j.value("format", "") == "capt-utterance" && j.value("version", 0) == 1,
          "unsupported utterance sidecar '" + stem + ".json'");
  Utterance u;
  std::vector<std::vector<PhonemeId>> words;
  for (const auto& w : j.at("words")) words.push_back(inventory.parse(w.get<std::string>()));
  u.canonical = PhonemeSeq::from_words(words);
  const auto& s = j.at("speaker");
  u.speaker.speaker_id = s.at("id").get<int>();
  u.speaker.timbre = s.at("timbre").get<std::array<double, kTimbreDim>>();
  u.speaker.base_f0 = s.at("base_f0").get<double>();
  u.speaker.rate = s.at("rate").get<double>();
  const auto& p = j.at("prosody");
  u.prosody.durations = p.at("durations").get<std::vector<int>>();
  u.prosody.f0_scale = p.at("f0_scale").get<std::vector<double>>();
  u.prosody.energy_scale = p.at("energy_scale").get<std::vector<double>>();
  u.prosody_seed = j.at("prosody_seed").get<std::uint64_t>();
  u.noise_seed = j.at("noise_seed").get<std::uint64_t>();

  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw InvalidInput("cannot open '" + stem + ".bin'");
  char magic[sizeof kUtteranceMagic];
  std::int32_t rows = 0, cols = 0;
  bin.read(magic, sizeof magic);
  bin.read(reinterpret_cast<char*>(&rows), sizeof rows);
  bin.read(reinterpret_cast<char*>(&cols), sizeof cols);
  require(bin && std::equal(magic, magic + sizeof magic, kUtteranceMagic),
          "bad utterance frame file '" + stem + ".bin'");
  require(rows == j.at("frames").get<int>() && cols == kFeatureDim,
          "utterance frame file does not match its sidecar");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major(rows, cols);
  bin.read(reinterpret_cast<char*>(row_major.data()),
           static_cast<std::streamsize>(sizeof(double) * row_major.size()));
  require(static_cast<bool>(bin), "truncated utterance frame file '" + stem + ".bin'");
  u.speech = row_major;
  return u;
}

}  // namespace capt
