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

#include "capt/eval/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "capt/core/error.hpp"
#include "capt/core/rng.hpp"
#include "capt/lexical_stress.hpp"

namespace capt::eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string generated_path(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "generated/g%06d", index);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Phoneme distance of every labelled-erroneous word of `canonical` to the
// realization aligned with it.
std::vector<int> word_distances(const PhonemeSeq& canonical, const ErrorLabels& labels,
                                const std::vector<PhonemeId>& realized) {
  const auto segments =
      segment_by_words(align(canonical.phonemes(), realized), canonical, realized);
  std::vector<int> out(static_cast<std::size_t>(canonical.word_count()), 0);
  for (int w = 0; w < canonical.word_count(); ++w)
    if (labels.word_errors[static_cast<std::size_t>(w)])
      out[static_cast<std::size_t>(w)] =
          std::max(1, phoneme_distance(canonical.word(w), segments[static_cast<std::size_t>(w)]));
  return out;
}

Lexicon load_lexicon(const ExperimentConfig& cfg, const PhonemeInventory& inventory) {
  return Lexicon::load_file(cfg.lexicon_path().string(), inventory);
}

json interval_json(const Interval& i) { return json::array({i.low, i.high}); }

Interval interval_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

std::string bucket_name(int b) {
  return b + 1 < kSeverityBuckets ? std::to_string(b + 1) : std::to_string(b + 1) + "+";
}

MetricsReport report_from_json(const json& j) {
  require(j.at("schema_version").get<int>() == MetricsReport::kSchemaVersion,
          "unsupported metrics schema version");
  MetricsReport r;
  r.name = j.at("name").get<std::string>();
  r.method = method_from_string(j.at("method").get<std::string>());
  r.detector = detector_from_string(j.at("detector").get<std::string>());
  r.seed = j.at("seed").get<std::uint64_t>();
  r.utterances = j.at("counts").at("utterances").get<int>();
  r.words = j.at("counts").at("words").get<int>();
  r.positives = j.at("counts").at("positives").get<int>();
  r.auc = j.at("auc").get<double>();
  r.max_recall = j.at("max_recall").get<double>();
  if (const auto& p = j.at("precision_at_recall"); !p.is_null()) {
    PrecisionAtRecall a;
    a.target = p.at("target").get<double>();
    a.precision = p.at("precision").get<double>();
    a.recall = p.at("recall").get<double>();
    a.threshold = p.at("threshold").get<double>();
    a.precision_ci = interval_from(p.at("precision_ci"));
    a.recall_ci = interval_from(p.at("recall_ci"));
    a.resamples = p.at("resamples").get<int>();
    r.at_recall = a;
  }
  const auto& t = j.at("at_threshold");
  r.at_threshold.threshold = t.at("threshold").get<double>();
  r.at_threshold.recall = t.at("recall").get<double>();
  r.at_threshold.recall_ci = interval_from(t.at("recall_ci"));
  if (!t.at("precision").is_null()) {
    r.at_threshold.precision = t.at("precision").get<double>();
    r.at_threshold.precision_ci = interval_from(t.at("precision_ci"));
  }
  const auto& sev = j.at("severity");
  r.severity.negatives = sev.at("negatives").get<int>();
  for (int b = 0; b < kSeverityBuckets; ++b) {
    const auto& e = sev.at("buckets").at(static_cast<std::size_t>(b));
    r.severity.positives[static_cast<std::size_t>(b)] = e.at("positives").get<int>();
    if (!e.at("auc").is_null()) r.severity.auc[static_cast<std::size_t>(b)] = e.at("auc").get<double>();
  }
  for (const auto& p : j.at("curve"))
    r.curve.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>(),
                       p.at(3).get<int>(), p.at(4).get<int>()});
  r.config = j.at("config");
  return r;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace

// ---- detectors ---------------------------------------------------------------

void TrainedDetector::save(const fs::path& dir, const PhonemeInventory& inventory) const {
  fs::create_directories(dir);
  if (weakly_s) weakly_s->save((dir / "weakly_s").string(), inventory);
  if (recognizer) recognizer->save((dir / "recognizer").string(), inventory);
  if (pm) pm->save((dir / "pm").string(), inventory);
}

TrainedDetector TrainedDetector::load(const fs::path& dir, Detector kind,
                                      const PhonemeInventory& inventory) {
  TrainedDetector d;
  d.kind = kind;
  if (kind == Detector::kWeaklyS) {
    d.weakly_s = MDNModel::load((dir / "weakly_s").string(), inventory);
    return d;
  }
  d.recognizer = RecognizerModel::load((dir / "recognizer").string(), inventory);
  if (kind == Detector::kPrPm) d.pm = PMModel::load((dir / "pm").string(), inventory);
  return d;
}

// ---- pipeline ----------------------------------------------------------------

CorpusManifest prepare_corpus(const ExperimentConfig& cfg, const Synthesizer& synth,
                              const Lexicon& lexicon) {
  if (cfg.manifest.empty()) return generate_toy_corpus(synth, lexicon, cfg.corpus);
  const auto loaded = CorpusManifest::load(cfg.manifest, synth.inventory());
  CorpusManifest m;
  for (std::size_t i = 0; i < loaded.entries.size(); ++i)
    if (loaded.entries[i].provenance == Provenance::kOriginal)
      m.add(loaded.entries[i], loaded.speech[i]);
  for (auto split : {Split::kTrainL1, Split::kTestL2})
    require(!m.indices(split).empty(),
            "corpus has no original " + std::string(to_string(split)) + " utterances");
  return m;
}

TrainingData build_training_data(const ExperimentConfig& cfg, const Synthesizer& synth,
                                 CorpusManifest& manifest) {
  const auto& inv = synth.inventory();
  TrainingData d;
  const auto l1 = manifest.indices(Split::kTrainL1);
  for (auto i : l1)
    d.l1.push_back({manifest.entries[i].labels, manifest.speech[i], manifest.entries[i].canonical,
                    Provenance::kOriginal});
  for (auto i : manifest.indices(Split::kTrainL2))
    d.l2.push_back({manifest.entries[i].labels, manifest.speech[i], manifest.entries[i].canonical,
                    Provenance::kOriginal});
  if (cfg.method == Method::kNone) return d;

  int generated = 0;
  for (std::size_t k = 0; k < l1.size(); ++k) {
    const auto i = l1[k];
    const auto u = manifest.speech[i];
    const std::string source = manifest.entries[i].path;
    PerturbationConfig pc = cfg.perturbation;
    pc.seed = derive_seed(cfg.perturbation.seed, k);

    std::vector<TrainingExample> made;
    if (cfg.method == Method::kP2P) {
      made.push_back(make_p2p_example(u, u->canonical, pc, inv));
    } else {
      const QuadrupleConfig qc{
          cfg.method == Method::kT2S ? GenerationMode::kT2S : GenerationMode::kS2S, pc, pc.seed};
      const auto q = synth.make_quadruple(u, u->canonical, qc);
      made.assign(q.begin() + 1, q.end());
    }
    std::map<const Utterance*, std::string> paths{{u.get(), source}};
    for (auto& ex : made) {
      auto& path = paths[ex.speech.get()];
      if (path.empty()) path = generated_path(generated++);
      CorpusEntry e;
      e.path = path;
      e.canonical = ex.canonical;
      e.labels = ex.labels;
      e.word_distance = word_distances(ex.canonical, ex.labels, ex.speech->canonical.phonemes());
      e.provenance = ex.provenance;
      e.speaker = ex.speech->speaker.speaker_id;
      e.seed = pc.seed;
      e.split = Split::kTrainL1;
      manifest.add(std::move(e), ex.speech);
      d.l1.push_back(std::move(ex));
    }
  }
  return d;
}

TrainedDetector train_detector(const ExperimentConfig& cfg, const TrainingData& data,
                               const PhonemeInventory& inventory) {
  TrainedDetector d;
  d.kind = cfg.detector;
  if (cfg.detector == Detector::kWeaklyS) {
    d.weakly_s = train_weakly_s({data.l1, data.l2}, inventory, cfg.weakly_s);
    return d;
  }
  // Every distinct L1 recording, generated speech included.
  std::vector<UtterancePtr> speech;
  std::set<const Utterance*> seen;
  for (const auto& ex : data.l1)
    if (seen.insert(ex.speech.get()).second) speech.push_back(ex.speech);
  d.recognizer = train_recognizer(speech, inventory, cfg.recognizer);
  if (cfg.detector == Detector::kPrPm) {
    std::vector<TrainingExample> native;
    for (const auto& ex : data.l1)
      if (ex.provenance == Provenance::kOriginal) native.push_back(ex);
    d.pm = train_pm(word_pairs(build_pm_corpus(*d.recognizer, native)), inventory, cfg.pm);
  }
  return d;
}

std::vector<UtteranceScores> score_test_split(const ExperimentConfig& cfg,
                                              const TrainedDetector& detector,
                                              const CorpusManifest& manifest) {
  std::vector<UtteranceScores> out;
  const double t = cfg.metrics.threshold;
  for (auto i : manifest.indices(Split::kTestL2)) {
    const auto& u = *manifest.speech[i];
    const auto& r = manifest.entries[i].canonical;
    UtteranceScores s;
    s.entry = i;
    if (detector.kind == Detector::kWeaklyS) {
      require(detector.weakly_s.has_value(), "weakly-s detector is not trained");
      s.words = detect_weakly_s(*detector.weakly_s, u, r, t);
    } else {
      require(detector.recognizer.has_value(), "recognizer is not trained");
      const auto rec = recognize(*detector.recognizer, u);
      switch (detector.kind) {
        case Detector::kPrNolik: s.words = detect_prnolik(rec, r); break;
        case Detector::kPrLik: s.words = detect_prlik(rec, r, t); break;
        default:
          require(detector.pm.has_value(), "pronunciation model is not trained");
          s.words = detect_prpm(rec, score(*detector.pm, rec, r, cfg.pm_score), r, t);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

MetricsReport make_report(const ExperimentConfig& cfg, const CorpusManifest& manifest,
                          const std::vector<UtteranceScores>& scores) {
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  std::vector<int> groups, distances;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const auto& e = manifest.entries[scores[k].entry];
    require(scores[k].words.probs.size() == e.labels.word_errors.size(),
            "detector output does not match the words of '" + e.path + "'");
    for (std::size_t w = 0; w < e.labels.word_errors.size(); ++w) {
      s.push_back(scores[k].words.probs[w]);
      y.push_back(e.labels.word_errors[w]);
      groups.push_back(static_cast<int>(k));
      distances.push_back(e.word_distance[w]);
    }
  }
  MetricsReport r;
  r.name = cfg.name;
  r.method = cfg.method;
  r.detector = cfg.detector;
  r.seed = cfg.seed;
  r.utterances = static_cast<int>(scores.size());
  r.words = static_cast<int>(s.size());
  r.positives = static_cast<int>(std::count(y.begin(), y.end(), 1));
  r.auc = auc(s, y);
  r.curve = pr_curve(s, y);
  r.max_recall = r.curve.back().recall;
  const BootstrapOptions boot{cfg.metrics.bootstrap, derive_seed(cfg.seed, 7),
                              cfg.metrics.confidence};
  try {
    r.at_recall = precision_at_recall(s, y, cfg.metrics.target_recall, groups, boot);
  } catch (const UnreachableRecall&) {
  }
  r.at_threshold = threshold_metrics(s, y, cfg.metrics.threshold, groups, boot);
  r.severity = severity_report(s, y, distances);
  r.config = cfg.to_json();
  return r;
}

json MetricsReport::to_json() const {
  json at = nullptr;
  if (at_recall)
    at = {{"target", at_recall->target},
          {"precision", at_recall->precision},
          {"recall", at_recall->recall},
          {"threshold", at_recall->threshold},
          {"precision_ci", interval_json(at_recall->precision_ci)},
          {"recall_ci", interval_json(at_recall->recall_ci)},
          {"resamples", at_recall->resamples}};
  json thr = {{"threshold", at_threshold.threshold},
              {"precision", nullptr},
              {"precision_ci", nullptr},
              {"recall", at_threshold.recall},
              {"recall_ci", interval_json(at_threshold.recall_ci)}};
  if (at_threshold.precision) {
    thr["precision"] = *at_threshold.precision;
    thr["precision_ci"] = interval_json(*at_threshold.precision_ci);
  }
  json buckets = json::array();
  for (int b = 0; b < kSeverityBuckets; ++b) {
    const auto& a = severity.auc[static_cast<std::size_t>(b)];
    buckets.push_back({{"distance", bucket_name(b)},
                       {"auc", a ? json(*a) : json(nullptr)},
                       {"positives", severity.positives[static_cast<std::size_t>(b)]}});
  }
  json points = json::array();
  for (const auto& p : curve)
    points.push_back({p.threshold, p.precision, p.recall, p.true_positives, p.false_positives});
  return {{"schema_version", kSchemaVersion},
          {"name", name},
          {"method", to_string(method)},
          {"detector", to_string(detector)},
          {"seed", seed},
          {"counts", {{"utterances", utterances}, {"words", words}, {"positives", positives}}},
          {"auc", auc},
          {"precision_at_recall", at},
          {"max_recall", max_recall},
          {"at_threshold", thr},
          {"severity", {{"negatives", severity.negatives}, {"buckets", buckets}}},
          {"curve", points},
          {"config", config}};
}

// ---- stages ------------------------------------------------------------------

TrainedDetector train_stage(const ExperimentConfig& cfg, const fs::path& out) {
  const RunPaths paths{out};
  const auto& synth = Synthesizer::standard();
  const auto& inv = synth.inventory();
  stage("config", [&] {
    cfg.validate();
    fs::create_directories(out);
    return 0;
  });
  const Lexicon lexicon = stage("corpus", [&] { return load_lexicon(cfg, inv); });
  CorpusManifest manifest = stage("corpus", [&] { return prepare_corpus(cfg, synth, lexicon); });
  const TrainingData data =
      stage("augment", [&] { return build_training_data(cfg, synth, manifest); });
  stage("manifest", [&] {
    manifest.save(paths.corpus(), inv);
    return 0;
  });
  TrainedDetector detector = stage("train", [&] { return train_detector(cfg, data, inv); });
  stage("checkpoint", [&] {
    detector.save(paths.checkpoints(), inv);
    return 0;
  });
  return detector;
}

MetricsReport evaluate_stage(const ExperimentConfig& cfg, const fs::path& out) {
  const RunPaths paths{out};
  const auto& inv = Synthesizer::standard().inventory();
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  const auto manifest = stage("load", [&] { return CorpusManifest::load(paths.corpus(), inv); });
  const auto detector = stage("load", [&] {
    return TrainedDetector::load(paths.checkpoints(), cfg.detector, inv);
  });
  const auto scores = stage("evaluate", [&] { return score_test_split(cfg, detector, manifest); });
  return stage("report", [&] {
    auto report = make_report(cfg, manifest, scores);
    write_json(paths.metrics(), report.to_json());
    std::ofstream jl(paths.scores());
    if (!jl) throw Error("cannot write '" + paths.scores().string() + "'");
    for (const auto& s : scores) {
      const auto& e = manifest.entries[s.entry];
      json words = json::array();
      for (int w = 0; w < e.canonical.word_count(); ++w)
        words.push_back({{"word", inv.format(e.canonical.word(w))},
                         {"prob", s.words.probs[static_cast<std::size_t>(w)]},
                         {"decision", s.words.decisions[static_cast<std::size_t>(w)]},
                         {"label", e.labels.word_errors[static_cast<std::size_t>(w)]}});
      jl << json{{"path", e.path},
                 {"speaker", e.speaker},
                 {"provenance", to_string(e.provenance)},
                 {"words", words}}
                .dump()
         << '\n';
    }
    write_curve_csv(paths.curve_csv(), report.curve);
    write_curve_svg(paths.curve_svg(), report.curve,
                    cfg.name + " (" + std::string(to_string(cfg.detector)) + ", " +
                        std::string(to_string(cfg.method)) + ")");
    return report;
  });
}

MetricsReport run_experiment(const ExperimentConfig& cfg, const fs::path& out) {
  train_stage(cfg, out);
  return evaluate_stage(cfg, out);
}

// ---- files -------------------------------------------------------------------

void write_curve_csv(const fs::path& path, const std::vector<PRPoint>& curve) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "threshold,precision,recall,true_positives,false_positives\n";
  for (const auto& p : curve)
    out << fmt(p.threshold) << ',' << fmt(p.precision) << ',' << fmt(p.recall) << ','
        << p.true_positives << ',' << p.false_positives << '\n';
}

void write_curve_svg(const fs::path& path, const std::vector<PRPoint>& curve,
                     const std::string& title) {
  constexpr double kW = 480, kH = 360, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto x = [&](double recall) { return kLeft + recall * pw; };
  auto y = [&](double precision) { return kTop + (1.0 - precision) * ph; };
  std::string escaped;
  for (char c : title) {
    if (c == '&') escaped += "&amp;";
    else if (c == '<') escaped += "&lt;";
    else if (c == '>') escaped += "&gt;";
    else escaped += c;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\">" << escaped << "</text>\n"
      << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double v : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    out << "<text x=\"" << x(v) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
        << fmt(v) << "</text>\n"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\">"
        << fmt(v) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">recall</text>\n"
      << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">precision</text>\n";
  out << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
  for (const auto& p : curve) out << fmt(x(p.recall)) << ',' << fmt(y(p.precision)) << ' ';
  out << "\"/>\n</svg>\n";
}

void write_table_csv(const fs::path& path, const std::vector<TableRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "label,method,detector,auc,precision,recall,precision_ci_low,precision_ci_high\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out << row.label << ',' << to_string(r.method) << ',' << to_string(r.detector) << ','
        << fmt(r.auc) << ',';
    if (r.at_recall)
      out << fmt(r.at_recall->precision) << ',' << fmt(r.at_recall->recall) << ','
          << fmt(r.at_recall->precision_ci.low) << ',' << fmt(r.at_recall->precision_ci.high);
    else
      out << ",,,";
    out << '\n';
  }
}

std::vector<TableRow> compare_methods(const ExperimentConfig& cfg, const fs::path& out) {
  std::vector<TableRow> rows;
  for (auto m : {Method::kP2P, Method::kT2S, Method::kS2S}) {
    ExperimentConfig c = cfg;
    c.method = m;
    c.detector = Detector::kWeaklyS;
    const std::string label(to_string(m));
    rows.push_back({label, run_experiment(c, out / label)});
  }
  write_table_csv(out / "methods.csv", rows);
  return rows;
}

std::vector<TableRow> ablate(const ExperimentConfig& cfg, const fs::path& out) {
  struct Variant {
    const char* label;
    Detector detector;
    void (*apply)(WeaklySConfig&);
  };
  const Variant variants[] = {
      {"full", Detector::kWeaklyS, [](WeaklySConfig&) {}},
      {"no_synth_err", Detector::kWeaklyS, [](WeaklySConfig& w) { w.synthetic_errors = false; }},
      {"no_l2_adapt", Detector::kWeaklyS, [](WeaklySConfig& w) { w.l2_adapt = false; }},
      {"no_l1l2_train", Detector::kWeaklyS, [](WeaklySConfig& w) { w.l1l2_train = false; }},
      {"pr_nolik", Detector::kPrNolik, [](WeaklySConfig&) {}},
      {"pr_lik", Detector::kPrLik, [](WeaklySConfig&) {}},
      {"pr_pm", Detector::kPrPm, [](WeaklySConfig&) {}},
  };
  std::vector<TableRow> rows;
  for (const auto& v : variants) {
    ExperimentConfig c = cfg;
    c.detector = v.detector;
    v.apply(c.weakly_s);
    rows.push_back({v.label, run_experiment(c, out / v.label)});
  }
  write_table_csv(out / "ablation.csv", rows);
  return rows;
}

std::vector<TableRow> collect_reports(const fs::path& dir) {
  require(fs::is_directory(dir), "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "metrics.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<TableRow> rows;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    try {
      j = json::parse(in);
      auto label = fs::relative(f.parent_path(), dir).generic_string();
      rows.push_back({label == "." ? std::string("root") : label, report_from_json(j)});
    } catch (const json::exception& e) {
      throw InvalidInput("malformed metrics file '" + f.string() + "': " + e.what());
    }
  }
  if (!rows.empty()) write_table_csv(dir / "report.csv", rows);
  return rows;
}

// ---- lexical stress ----------------------------------------------------------

const StressRow& StressReport::row(bool attention, bool augmented) const {
  for (const auto& r : rows)
    if (r.attention == attention && r.augmented == augmented) return r;
  throw InvalidInput("stress report has no such row");
}

json StressReport::to_json() const {
  json list = json::array();
  for (const auto& r : rows)
    list.push_back({{"attention", r.attention},
                    {"augmented", r.augmented},
                    {"word_auc", r.word_auc},
                    {"syllable_auc", r.syllable_auc}});
  return {{"schema_version", kSchemaVersion}, {"rows", list}};
}

StressReport run_stress_experiment(const ExperimentConfig& cfg, const fs::path& out) {
  const auto& synth = Synthesizer::standard();
  const auto& inv = synth.inventory();
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  const Lexicon lexicon = stage("corpus", [&] { return load_lexicon(cfg, inv); });
  const auto& sc = cfg.stress;
  std::vector<StressExample> natural, test, generated;
  stage("corpus", [&] {
    NaturalStressConfig nc;
    nc.count = sc.natural_train;
    nc.error_rate = sc.natural_error_rate;
    nc.seed = derive_seed(cfg.seed, 10);
    natural = natural_stress_corpus(synth, lexicon, nc);
    nc.count = sc.test;
    nc.error_rate = sc.test_error_rate;
    nc.seed = derive_seed(cfg.seed, 11);
    test = natural_stress_corpus(synth, lexicon, nc);
    return 0;
  });
  stage("augment", [&] {
    generated = generate_stress_errors(synth, lexicon, sc.generated_words, derive_seed(cfg.seed, 12));
    return 0;
  });

  StressReport report;
  for (bool attention : {true, false}) {
    for (bool augmented : {false, true}) {
      StressConfig mc = sc.model;
      mc.attention = attention;
      auto train = natural;
      if (augmented) train.insert(train.end(), generated.begin(), generated.end());
      const auto model = stage("train", [&] { return train_stress_model(train, inv, mc); });
      stage("evaluate", [&] {
        std::vector<double> ws, ss;
        std::vector<std::uint8_t> wy, sy;
        for (const auto& ex : test) {
          const auto d = detect_stress_errors(model, ex.features, cfg.metrics.threshold);
          ws.push_back(d.word_score());
          wy.push_back(ex.word_error() ? 1 : 0);
          const auto labels = ex.syllable_errors();
          for (std::size_t s = 0; s < labels.size(); ++s) {
            ss.push_back(d.error_probs[s]);
            sy.push_back(labels[s]);
          }
        }
        report.rows.push_back({attention, augmented, auc(ws, wy), auc(ss, sy)});
        return 0;
      });
    }
  }
  if (!out.empty()) {
    stage("report", [&] {
      fs::create_directories(out);
      write_json(out / "stress.json", report.to_json());
      std::ofstream csv(out / "stress.csv");
      if (!csv) throw Error("cannot write stress.csv");
      csv << "attention,augmented,word_auc,syllable_auc\n";
      for (const auto& r : report.rows)
        csv << r.attention << ',' << r.augmented << ',' << fmt(r.word_auc) << ','
            << fmt(r.syllable_auc) << '\n';
      return 0;
    });
  }
  return report;
}

}  // namespace capt::eval
