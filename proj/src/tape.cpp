// Copyright 2026 The ctmneg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "ctmneg/tape.hpp"

#include <cmath>
#include <string>

namespace ctmneg::numcore {

const Matrix& Var::value() const { return tape_->value(id_); }
Matrix Var::grad() const { return tape_->grad(id_); }

Var Tape::leaf(Parameter& param) {
  Node node;
  node.value = param.value;
  node.requires_grad = true;
  node.param = &param;
  node.op = "leaf";
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  node.op = "constant";
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::string_view op, std::initializer_list<Var> inputs, Backprop backprop) {
  require_finite(value, op);
  Node node;
  node.value = std::move(value);
  node.op = op;
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw UsageError("tape: operands belong to a different tape");
    node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (node.requires_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Matrix Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.has_grad) return n.grad;
  return Matrix::Zero(n.value.rows(), n.value.cols());
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    throw UsageError("tape: gradient shape mismatch at " + std::string(n.op));
  }
  if (!g.allFinite()) throw NumericalError("non-finite gradient flowing into " + std::string(n.op));
  if (n.has_grad) {
    n.grad += g;
  } else {
    n.grad = g;
    n.has_grad = true;
  }
}

void Tape::backward(Var loss) {
  if (loss.rows() != 1 || loss.cols() != 1) throw UsageError("backward: loss must be a scalar");
  if (!nodes_[loss.id()].requires_grad) return;
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.backprop) {
      n.backprop(*this, n.grad);
    } else if (n.param != nullptr) {
      n.param->grad += n.grad;
    }
  }
}

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw UsageError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw UsageError("matmul: inner dimensions differ");
  Matrix out;
  out.noalias() = a.value() * b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), "matmul", {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) {
      Matrix da;
      da.noalias() = g * t.value(ib).transpose();
      t.accumulate(ia, da);
    }
    if (t.requires_grad(ib)) {
      Matrix db;
      db.noalias() = t.value(ia).transpose() * g;
      t.accumulate(ib, db);
    }
  });
}

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(a.value() + b.value(), "add", {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(a.value() - b.value(), "sub", {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  const std::size_t ia = a.id(), ib = b.id();
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape().record(std::move(out), "mul", {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var scale(Var a, double factor) {
  const std::size_t ia = a.id();
  return a.tape().record(a.value() * factor, "scale", {a},
                         [ia, factor](Tape& t, const Matrix& g) { t.accumulate(ia, g * factor); });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw UsageError("add_row: bias shape mismatch");
  Matrix out = a.value().rowwise() + row.value().row(0);
  const std::size_t ia = a.id(), ir = row.id();
  return a.tape().record(std::move(out), "add_row", {a, row}, [ia, ir](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    if (t.requires_grad(ir)) t.accumulate(ir, g.colwise().sum());
  });
}

Var exp(Var a) {
  Matrix out = a.value().array().exp().matrix();
  const std::size_t ia = a.id();
  Tape& tape = a.tape();
  const std::size_t out_id = tape.size();
  return tape.record(std::move(out), "exp", {a}, [ia, out_id](Tape& t, const Matrix& g) {
    t.accumulate(ia, g.cwiseProduct(t.value(out_id)));
  });
}

Var activation(Var a, Activation act) {
  Matrix out = a.value().unaryExpr([act](double x) { return activate(act, x); });
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), "activation", {a}, [ia, act](Tape& t, const Matrix& g) {
    const Matrix d = t.value(ia).unaryExpr([act](double x) { return activate_derivative(act, x); });
    t.accumulate(ia, g.cwiseProduct(d));
  });
}

Var concat_cols(Var a, Var b) {
  if (a.rows() != b.rows()) throw UsageError("concat_cols: row counts differ");
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a.value();
  out.rightCols(b.cols()) = b.value();
  const std::size_t ia = a.id(), ib = b.id();
  const Eigen::Index ca = a.cols(), cb = b.cols();
  return a.tape().record(std::move(out), "concat_cols", {a, b}, [ia, ib, ca, cb](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) t.accumulate(ia, g.leftCols(ca));
    if (t.requires_grad(ib)) t.accumulate(ib, g.rightCols(cb));
  });
}

Var apply_mask(Var a, const Matrix& mask) {
  if (mask.rows() != a.rows() || mask.cols() != a.cols()) throw UsageError("apply_mask: shape mismatch");
  const std::size_t ia = a.id();
  return a.tape().record(a.value().cwiseProduct(mask), "apply_mask", {a},
                         [ia, mask](Tape& t, const Matrix& g) { t.accumulate(ia, g.cwiseProduct(mask)); });
}

Var softmax_rows(Var a) {
  Matrix out = a.value();
  softmax_rows_inplace(out);
  const std::size_t ia = a.id();
  Tape& tape = a.tape();
  const std::size_t out_id = tape.size();
  return tape.record(std::move(out), "softmax_rows", {a}, [ia, out_id](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(out_id);
    const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    Matrix d = (g.colwise() - dots).cwiseProduct(y);
    t.accumulate(ia, d);
  });
}

Var mean(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().mean();
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return a.tape().record(std::move(out), "mean", {a}, [ia, r, c](Tape& t, const Matrix& g) {
    t.accumulate(ia, Matrix::Constant(r, c, g(0, 0) / static_cast<double>(r * c)));
  });
}

Var linear(Var x, Linear& layer) {
  if (x.cols() != layer.in_features()) throw UsageError("linear: input width mismatch for " + layer.weight.name);
  Tape& t = x.tape();
  return add_row(matmul(x, t.leaf(layer.weight)), t.leaf(layer.bias));
}

Var mlp_forward(Var x, std::span<Linear> layers, Activation act) {
  for (Linear& layer : layers) x = activation(linear(x, layer), act);
  return x;
}

Var batch_norm(Var x, BatchNormState& state, NormMode mode, bool update_running) {
  if (x.cols() != state.features()) throw UsageError("batch_norm: feature count mismatch");
  Tape& tape = x.tape();
  Var shift = tape.leaf(state.shift);
  const std::size_t ix = x.id(), is = shift.id();
  const Matrix& in = x.value();
  const Eigen::Index n = in.rows();

  if (mode == NormMode::eval) {
    Matrix inv = (state.running_var.array() + state.eps).rsqrt().matrix();
    Matrix out = batch_norm_eval(in, state);
    return tape.record(std::move(out), "batch_norm_eval", {x, shift}, [ix, is, inv](Tape& t, const Matrix& g) {
      if (t.requires_grad(ix)) t.accumulate(ix, (g.array().rowwise() * inv.row(0).array()).matrix());
      t.accumulate(is, g.colwise().sum());
    });
  }

  if (n < 2) throw UsageError("batch_norm: train mode needs a batch of at least 2");
  const Eigen::RowVectorXd mu = in.colwise().mean();
  const Matrix centered = in.rowwise() - mu;
  const Eigen::RowVectorXd var = centered.cwiseAbs2().colwise().mean();
  const Eigen::RowVectorXd inv = (var.array() + state.eps).rsqrt().matrix();
  Matrix xhat = (centered.array().rowwise() * inv.array()).matrix();
  Matrix out = xhat.rowwise() + state.shift.value.row(0);

  if (update_running) {
    const double m = state.momentum;
    const double unbiased = static_cast<double>(n) / static_cast<double>(n - 1);
    state.running_mean = (1.0 - m) * state.running_mean + m * mu;
    state.running_var = (1.0 - m) * state.running_var + (m * unbiased) * var;
  }

  return tape.record(std::move(out), "batch_norm_train", {x, shift},
                     [ix, is, xhat = std::move(xhat), inv](Tape& t, const Matrix& g) {
                       if (t.requires_grad(ix)) {
                         const Eigen::RowVectorXd g_mean = g.colwise().mean();
                         const Eigen::RowVectorXd gx_mean = g.cwiseProduct(xhat).colwise().mean();
                         Matrix d = g.rowwise() - g_mean;
                         d -= (xhat.array().rowwise() * gx_mean.array()).matrix();
                         d = (d.array().rowwise() * inv.array()).matrix();
                         t.accumulate(ix, d);
                       }
                       t.accumulate(is, g.colwise().sum());
                     });
}

}  // namespace ctmneg::numcore
