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

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation of one forward pass. Calling backward() on a
// scalar node walks the record in reverse and accumulates gradients into the
// Parameters that were read through Tape::param(). Tapes are cheap and meant
// to be thrown away after each example.

#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capt/core/rng.hpp"

namespace capt::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Named, address-stable collection of trainable matrices.
class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix init);
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t scalar_count() const;
  void zero_grad();

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  /// Binary blob: magic, version, then (name, rows, cols, values) records.
  void save(std::ostream& out) const;
  static ParameterSet load(std::istream& in);

 private:
  std::deque<Parameter> params_;
};

/// Uniform Glorot initialization.
Matrix glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng);
/// Entries drawn from N(0, scale^2).
Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng);

class Tape;

/// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Var constant(Matrix value);
  Var param(Parameter& p);
  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(const Var& loss);

  // Plumbing for operation implementations.
  Var push(Matrix value, std::vector<int> inputs, Backward fn);
  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  /// Adds `g` into the gradient of node `id` (no-op for constants).
  void accumulate(int id, const Matrix& g);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

// ---- operations -----------------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// x (n x c) + row (1 x c) broadcast over rows.
Var add_row(const Var& x, const Var& row);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
/// x * s where s is a 1x1 node.
Var scale_by(const Var& x, const Var& s);
Var transpose(const Var& x);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var exp(const Var& x);
Var softmax_rows(const Var& x);
Var log_softmax_rows(const Var& x);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(const Var& x, Eigen::Index start, Eigen::Index count);
Var sum(const Var& x);
Var mean(const Var& x);
/// Column means, 1 x c.
Var mean_rows(const Var& x);
/// Same value, gradient blocked.
Var detach(const Var& x);
/// Rows of `table` selected by index (embedding lookup).
Var gather_rows(const Var& table, std::span<const int> rows);
/// out(i, 0) = x(i, cols[i]).
Var pick(const Var& x, std::span<const int> cols);
/// Maximum of a column vector over each [begin, end) segment; m x 1.
Var segment_max(const Var& column, std::span<const std::pair<int, int>> segments);
/// Concatenates rows t-radius..t+radius for every t; rows outside the
/// sequence read as zeros.
Var context_window(const Var& x, int radius);

/// Sum over rows of binary cross-entropy with logits; logits n x 1.
Var bce_with_logits(const Var& logits, std::span<const double> targets);
/// Sum over rows of -log softmax(logits)[target].
Var softmax_cross_entropy(const Var& logits, std::span<const int> targets);

}  // namespace capt::nn
