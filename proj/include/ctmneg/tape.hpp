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


// Reverse-mode differentiation over dense matrices.
//
// A Tape records every operation of one forward pass. Nodes are appended in
// evaluation order, so walking them backwards is a valid topological order.
// Each node keeps its value and a backward closure that turns the gradient of
// its output into gradient contributions for its inputs. Leaves bound to a
// Parameter flush their gradient into Parameter::grad after backward().
//
// Only the operators the topic model needs are provided; model-specific
// losses record their own nodes through Tape::record().

#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "ctmneg/numcore.hpp"

namespace ctmneg::numcore {

class Tape;

// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Matrix& value() const;
  // Gradient after backward(); zero matrix if the node was not reached.
  Matrix grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Parameter& param);
  Var constant(Matrix value);

  // Appends a node computed from `inputs`. `backprop` is dropped when no
  // input needs a gradient. The value is checked for NaN/Inf.
  Var record(Matrix value, std::string_view op, std::initializer_list<Var> inputs, Backprop backprop);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  Matrix grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Adds `g` into the gradient of node `id` (no-op for constants).
  void accumulate(std::size_t id, const Matrix& g);

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  // Parameter gradients are added to Parameter::grad.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::string_view op;
    Backprop backprop;
  };
  std::vector<Node> nodes_;
};

// Elementary operators.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
// Adds a 1 x cols row to every row of `a`.
Var add_row(Var a, Var row);
Var exp(Var a);
Var activation(Var a, Activation act);
Var concat_cols(Var a, Var b);
// Elementwise product with a constant mask (dropout).
Var apply_mask(Var a, const Matrix& mask);
Var softmax_rows(Var a);
// Mean of all entries, as a 1x1 node.
Var mean(Var a);

Var linear(Var x, Linear& layer);

// Stack of affine + activation layers.
Var mlp_forward(Var x, std::span<Linear> layers, Activation act);

// Train mode normalizes with batch statistics (batch size >= 2) and, when
// `update_running`, folds them into the running estimates. Eval mode uses
// running statistics.
Var batch_norm(Var x, BatchNormState& state, NormMode mode, bool update_running = true);

}  // namespace ctmneg::numcore
