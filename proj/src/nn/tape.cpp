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

#include "capt/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>

#include "capt/core/error.hpp"

namespace capt::nn {

namespace {

constexpr std::uint32_t kBlobMagic = 0x43415054;  // "CAPT"
constexpr std::uint32_t kBlobVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InvalidInput("parameter blob truncated");
  return v;
}

Matrix row_softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - m).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  return y;
}

}  // namespace

// ---- ParameterSet ---------------------------------------------------------

Parameter& ParameterSet::add(std::string name, Matrix init) {
  require(!contains(name), "duplicate parameter '" + name + "'");
  Matrix grad = Matrix::Zero(init.rows(), init.cols());
  params_.push_back(Parameter{std::move(name), std::move(init), std::move(grad)});
  return params_.back();
}

Parameter& ParameterSet::get(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw InvalidInput("unknown parameter '" + std::string(name) + "'");
}

const Parameter& ParameterSet::get(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->get(name);
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Parameter& p) { return p.name == name; });
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void ParameterSet::save(std::ostream& out) const {
  write_pod(out, kBlobMagic);
  write_pod(out, kBlobVersion);
  write_pod(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& p : params_) {
    write_pod(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_pod(out, static_cast<std::uint32_t>(p.value.rows()));
    write_pod(out, static_cast<std::uint32_t>(p.value.cols()));
    for (Eigen::Index i = 0; i < p.value.rows(); ++i)
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) write_pod(out, p.value(i, j));
  }
}

ParameterSet ParameterSet::load(std::istream& in) {
  if (read_pod<std::uint32_t>(in) != kBlobMagic) throw InvalidInput("not a parameter blob");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kBlobVersion)
    throw InvalidInput("unsupported parameter blob version " + std::to_string(version));
  ParameterSet set;
  const auto count = read_pod<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = read_pod<std::uint32_t>(in);
    const auto cols = read_pod<std::uint32_t>(in);
    Matrix m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = read_pod<double>(in);
    set.add(std::move(name), std::move(m));
  }
  return set;
}

Matrix glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// ---- Tape -----------------------------------------------------------------

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  require(v.rows() == 1 && v.cols() == 1, "Var::scalar on non-scalar node");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, nullptr, false});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, Matrix(), nullptr, &p, true});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push(Matrix value, std::vector<int> inputs, Backward fn) {
  bool needs = false;
  for (int id : inputs) needs = needs || nodes_[id].needs_grad;
  nodes_.push_back(Node{std::move(value), Matrix(), needs ? std::move(fn) : nullptr,
                        nullptr, needs});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::backward(const Var& loss) {
  require(loss.tape() == this, "backward: loss belongs to another tape");
  require(loss.rows() == 1 && loss.cols() == 1, "backward: loss must be scalar");
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.param != nullptr)
      n.param->grad += n.grad;
    else if (n.backward)
      n.backward(*this, id);
  }
}

// ---- operations -----------------------------------------------------------

namespace {

Tape& same_tape(const Var& a, const Var& b) {
  require(a.tape() != nullptr && a.tape() == b.tape(), "operands on different tapes");
  return *a.tape();
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require(a.cols() == b.rows(), "matmul: shape mismatch");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() * b.value(), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, t.grad(self));
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, -t.grad(self));
  });
}

Var add_row(const Var& x, const Var& row) {
  Tape& t = same_tape(x, row);
  require(row.rows() == 1 && row.cols() == x.cols(), "add_row: shape mismatch");
  const int ix = x.id(), ir = row.id();
  Matrix v = x.value();
  v.rowwise() += row.value().row(0);
  return t.push(std::move(v), {ix, ir}, [ix, ir](Tape& t, int self) {
    t.accumulate(ix, t.grad(self));
    if (t.needs_grad(ir)) t.accumulate(ir, t.grad(self).colwise().sum());
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.needs_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var scale(const Var& x, double factor) {
  Tape& t = *x.tape();
  const int ix = x.id();
  return t.push(x.value() * factor, {ix}, [ix, factor](Tape& t, int self) {
    t.accumulate(ix, t.grad(self) * factor);
  });
}

Var scale_by(const Var& x, const Var& s) {
  Tape& t = same_tape(x, s);
  require(s.rows() == 1 && s.cols() == 1, "scale_by: factor must be 1x1");
  const int ix = x.id(), is = s.id();
  return t.push(x.value() * s.value()(0, 0), {ix, is}, [ix, is](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ix)) t.accumulate(ix, g * t.value(is)(0, 0));
    if (t.needs_grad(is))
      t.accumulate(is, Matrix::Constant(1, 1, g.cwiseProduct(t.value(ix)).sum()));
  });
}

Var transpose(const Var& x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  return t.push(x.value().transpose(), {ix}, [ix](Tape& t, int self) {
    t.accumulate(ix, t.grad(self).transpose());
  });
}

Var tanh(const Var& x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  Matrix y = x.value().array().tanh().matrix();
  return t.push(std::move(y), {ix}, [ix](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.accumulate(ix, t.grad(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var sigmoid(const Var& x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  Matrix y = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  return t.push(std::move(y), {ix}, [ix](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.accumulate(ix, t.grad(self).cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

Var exp(const Var& x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  Matrix y = x.value().array().exp().matrix();
  return t.push(std::move(y), {ix}, [ix](Tape& t, int self) {
    t.accumulate(ix, t.grad(self).cwiseProduct(t.value(self)));
  });
}

Var softmax_rows(const Var& x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  return t.push(row_softmax(x.value()), {ix}, [ix](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix dx(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double dot = g.row(i).dot(y.row(i));
      dx.row(i) = y.row(i).cwiseProduct((g.row(i).array() - dot).matrix());
    }
    t.accumulate(ix, dx);
  });
}

Var log_softmax_rows(const Var& x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  const Matrix& v = x.value();
  Matrix y(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double m = v.row(i).maxCoeff();
    const double lse = m + std::log((v.row(i).array() - m).exp().sum());
    y.row(i) = (v.row(i).array() - lse).matrix();
  }
  return t.push(std::move(y), {ix}, [ix](Tape& t, int self) {
    const Matrix p = t.value(self).array().exp().matrix();
    const Matrix& g = t.grad(self);
    Matrix dx = g;
    for (Eigen::Index i = 0; i < g.rows(); ++i) dx.row(i) -= p.row(i) * g.row(i).sum();
    t.accumulate(ix, dx);
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  Tape& t = *parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  for (const Var& p : parts) {
    require(p.tape() == &t && p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return t.push(std::move(v), ids, [ids, widths](Tape& t, int self) {
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.needs_grad(ids[k])) t.accumulate(ids[k], t.grad(self).middleCols(off, widths[k]));
      off += widths[k];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  Tape& t = *parts.front().tape();
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> heights;
  for (const Var& p : parts) {
    require(p.tape() == &t && p.cols() == cols, "concat_rows: column mismatch");
    rows += p.rows();
    ids.push_back(p.id());
    heights.push_back(p.rows());
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    v.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return t.push(std::move(v), ids, [ids, heights](Tape& t, int self) {
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.needs_grad(ids[k])) t.accumulate(ids[k], t.grad(self).middleRows(off, heights[k]));
      off += heights[k];
    }
  });
}

Var slice_rows(const Var& x, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= x.rows(), "slice_rows: out of range");
  Tape& t = *x.tape();
  const int ix = x.id();
  const Eigen::Index rows = x.rows(), cols = x.cols();
  return t.push(x.value().middleRows(start, count), {ix},
                [ix, start, count, rows, cols](Tape& t, int self) {
                  Matrix g = Matrix::Zero(rows, cols);
                  g.middleRows(start, count) = t.grad(self);
                  t.accumulate(ix, g);
                });
}

Var sum(const Var& x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  const Eigen::Index r = x.rows(), c = x.cols();
  return t.push(Matrix::Constant(1, 1, x.value().sum()), {ix}, [ix, r, c](Tape& t, int self) {
    t.accumulate(ix, Matrix::Constant(r, c, t.grad(self)(0, 0)));
  });
}

Var mean(const Var& x) {
  require(x.value().size() > 0, "mean: empty input");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var mean_rows(const Var& x) {
  require(x.rows() > 0, "mean_rows: empty input");
  Tape& t = *x.tape();
  const int ix = x.id();
  const Eigen::Index n = x.rows();
  return t.push(x.value().colwise().mean(), {ix}, [ix, n](Tape& t, int self) {
    t.accumulate(ix, Matrix::Ones(n, 1) * t.grad(self) / static_cast<double>(n));
  });
}

Var detach(const Var& x) { return x.tape()->constant(x.value()); }

Var gather_rows(const Var& table, std::span<const int> rows) {
  Tape& t = *table.tape();
  const int it = table.id();
  const Matrix& v = table.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), v.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < v.rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = v.row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  const Eigen::Index tr = v.rows(), tc = v.cols();
  return t.push(std::move(out), {it}, [it, idx, tr, tc](Tape& t, int self) {
    Matrix g = Matrix::Zero(tr, tc);
    const Matrix& gs = t.grad(self);
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += gs.row(static_cast<Eigen::Index>(i));
    t.accumulate(it, g);
  });
}

Var pick(const Var& x, std::span<const int> cols) {
  require(static_cast<Eigen::Index>(cols.size()) == x.rows(), "pick: one column per row");
  Tape& t = *x.tape();
  const int ix = x.id();
  const Matrix& v = x.value();
  Matrix out(v.rows(), 1);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    require(cols[i] >= 0 && cols[i] < v.cols(), "pick: column out of range");
    out(i, 0) = v(i, cols[i]);
  }
  std::vector<int> idx(cols.begin(), cols.end());
  const Eigen::Index r = v.rows(), c = v.cols();
  return t.push(std::move(out), {ix}, [ix, idx, r, c](Tape& t, int self) {
    Matrix g = Matrix::Zero(r, c);
    for (Eigen::Index i = 0; i < r; ++i) g(i, idx[i]) = t.grad(self)(i, 0);
    t.accumulate(ix, g);
  });
}

Var segment_max(const Var& column, std::span<const std::pair<int, int>> segments) {
  require(column.cols() == 1, "segment_max: expects a column vector");
  Tape& t = *column.tape();
  const int ic = column.id();
  const Matrix& v = column.value();
  Matrix out(static_cast<Eigen::Index>(segments.size()), 1);
  std::vector<int> argmax(segments.size());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto [b, e] = segments[s];
    require(b >= 0 && b < e && e <= v.rows(), "segment_max: bad segment");
    int best = b;
    for (int i = b + 1; i < e; ++i)
      if (v(i, 0) > v(best, 0)) best = i;
    argmax[s] = best;
    out(static_cast<Eigen::Index>(s), 0) = v(best, 0);
  }
  const Eigen::Index n = v.rows();
  return t.push(std::move(out), {ic}, [ic, argmax, n](Tape& t, int self) {
    Matrix g = Matrix::Zero(n, 1);
    for (std::size_t s = 0; s < argmax.size(); ++s)
      g(argmax[s], 0) += t.grad(self)(static_cast<Eigen::Index>(s), 0);
    t.accumulate(ic, g);
  });
}

Var context_window(const Var& x, int radius) {
  require(radius >= 0, "context_window: negative radius");
  Tape& t = *x.tape();
  const int ix = x.id();
  const Matrix& v = x.value();
  const Eigen::Index n = v.rows(), c = v.cols();
  const int width = 2 * radius + 1;
  Matrix out = Matrix::Zero(n, c * width);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < width; ++k) {
      const Eigen::Index src = i + k - radius;
      if (src >= 0 && src < n) out.block(i, k * c, 1, c) = v.row(src);
    }
  return t.push(std::move(out), {ix}, [ix, radius, n, c, width](Tape& t, int self) {
    Matrix g = Matrix::Zero(n, c);
    const Matrix& gs = t.grad(self);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int k = 0; k < width; ++k) {
        const Eigen::Index src = i + k - radius;
        if (src >= 0 && src < n) g.row(src) += gs.block(i, k * c, 1, c);
      }
    t.accumulate(ix, g);
  });
}

Var bce_with_logits(const Var& logits, std::span<const double> targets) {
  require(logits.cols() == 1 && static_cast<Eigen::Index>(targets.size()) == logits.rows(),
          "bce_with_logits: shape mismatch");
  Tape& t = *logits.tape();
  const int il = logits.id();
  const Matrix& z = logits.value();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double zi = z(i, 0);
    loss += std::max(zi, 0.0) - zi * targets[i] + std::log1p(std::exp(-std::abs(zi)));
  }
  std::vector<double> y(targets.begin(), targets.end());
  return t.push(Matrix::Constant(1, 1, loss), {il}, [il, y](Tape& t, int self) {
    const Matrix& z = t.value(il);
    const double g = t.grad(self)(0, 0);
    Matrix dz(z.rows(), 1);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      dz(i, 0) = g * (1.0 / (1.0 + std::exp(-z(i, 0))) - y[i]);
    t.accumulate(il, dz);
  });
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> targets) {
  require(static_cast<Eigen::Index>(targets.size()) == logits.rows(),
          "softmax_cross_entropy: one target per row");
  Tape& t = *logits.tape();
  const int il = logits.id();
  Matrix p = row_softmax(logits.value());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    require(targets[i] >= 0 && targets[i] < p.cols(), "softmax_cross_entropy: bad target");
    loss -= std::log(std::max(p(i, targets[i]), 1e-300));
  }
  std::vector<int> y(targets.begin(), targets.end());
  return t.push(Matrix::Constant(1, 1, loss), {il}, [il, y, p](Tape& t, int self) {
    Matrix d = p;
    for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, y[i]) -= 1.0;
    t.accumulate(il, d * t.grad(self)(0, 0));
  });
}

}  // namespace capt::nn
