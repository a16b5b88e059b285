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

// capt: corpus generation, training, evaluation and reporting from a config.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "capt/core/error.hpp"
#include "capt/eval/experiment.hpp"

namespace fs = std::filesystem;
using namespace capt;
using namespace capt::eval;

namespace {

constexpr int kUsageError = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "results";
};

void add_common(CLI::App* cmd, Options& o, bool needs_config = true) {
  auto* c = cmd->add_option("--config", o.config, "experiment config file");
  if (needs_config) c->required();
  cmd->add_option("--seed", o.seed, "override the master seed");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
}

ExperimentConfig load_config(const Options& o) {
  auto cfg = ExperimentConfig::load(o.config);
  if (o.seed) cfg.set_seed(*o.seed);
  cfg.validate();
  return cfg;
}

void print_report(const MetricsReport& r) {
  std::printf("%s  %s/%s  AUC %.4f", r.name.c_str(), std::string(to_string(r.method)).c_str(),
              std::string(to_string(r.detector)).c_str(), r.auc);
  if (r.at_recall)
    std::printf("  precision %.4f at recall %.4f", r.at_recall->precision, r.at_recall->recall);
  else
    std::printf("  target recall unreachable (max %.4f)", r.max_recall);
  std::printf("\n");
}

void print_rows(const std::vector<TableRow>& rows) {
  for (const auto& row : rows) {
    std::printf("%-16s", row.label.c_str());
    print_report(row.report);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mispronunciation detection experiments on a synthetic speech domain"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-corpus", "generate the toy corpus and its manifest");
  auto* train = app.add_subcommand("train", "generate data and train the configured detector");
  auto* eval = app.add_subcommand("eval", "score the test split with a trained detector");
  auto* abl = app.add_subcommand("ablate", "WEAKLY-S ablations and the recognizer baselines");
  auto* cmp = app.add_subcommand("compare-methods", "compare p2p, t2s and s2s augmentation");
  auto* stress = app.add_subcommand("stress", "lexical stress experiment");
  auto* report = app.add_subcommand("report", "collect metrics.json files under --out");
  for (auto* cmd : {gen, train, eval, abl, cmp, stress}) add_common(cmd, o);
  report->add_option("--out", o.out, "directory to scan")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  ExperimentConfig cfg;
  if (!report->parsed()) {
    try {
      cfg = load_config(o);
    } catch (const std::exception& e) {
      std::cerr << "capt: " << e.what() << '\n';
      return kUsageError;
    }
  }

  try {
    const fs::path out = o.out;
    if (gen->parsed()) {
      const auto& synth = Synthesizer::standard();
      const auto lexicon = Lexicon::load_file(cfg.lexicon_path().string(), synth.inventory());
      const auto manifest = prepare_corpus(cfg, synth, lexicon);
      manifest.save(RunPaths{out}.corpus(), synth.inventory());
      std::printf("wrote %zu utterances to %s\n", manifest.entries.size(),
                  RunPaths{out}.corpus().string().c_str());
    } else if (train->parsed()) {
      train_stage(cfg, out);
      std::printf("checkpoints in %s\n", RunPaths{out}.checkpoints().string().c_str());
    } else if (eval->parsed()) {
      print_report(evaluate_stage(cfg, out));
    } else if (abl->parsed()) {
      print_rows(ablate(cfg, out));
    } else if (cmp->parsed()) {
      print_rows(compare_methods(cfg, out));
    } else if (stress->parsed()) {
      for (const auto& r : run_stress_experiment(cfg, out).rows)
        std::printf("attention=%d augmented=%d  word AUC %.4f  syllable AUC %.4f\n", r.attention,
                    r.augmented, r.word_auc, r.syllable_auc);
    } else if (report->parsed()) {
      const auto rows = collect_reports(out);
      if (rows.empty()) {
        std::cerr << "capt: no metrics.json under " << out << '\n';
        return 1;
      }
      print_rows(rows);
    }
  } catch (const std::exception& e) {
    std::cerr << "capt: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
