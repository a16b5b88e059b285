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

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace capt {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violated an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Model training diverged or could not start. Carries the loss trace so far.
class TrainingFailure : public Error {
 public:
  TrainingFailure(const std::string& what, std::vector<double> trace = {})
      : Error(what), loss_trace_(std::move(trace)) {}
  const std::vector<double>& loss_trace() const { return loss_trace_; }

 private:
  std::vector<double> loss_trace_;
};

/// Forced alignment could not place the phonemes on the frames.
class AlignmentFailure : public Error {
 public:
  using Error::Error;
};

/// A metric is not defined for the given data (e.g. a single label class).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// The requested recall cannot be reached by any threshold.
class UnreachableRecall : public UndefinedMetric {
 public:
  UnreachableRecall(const std::string& what, double max_recall)
      : UndefinedMetric(what), max_recall_(max_recall) {}
  double max_recall() const { return max_recall_; }

 private:
  double max_recall_;
};

/// A pipeline stage of an experiment failed; names the stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

}  // namespace capt
