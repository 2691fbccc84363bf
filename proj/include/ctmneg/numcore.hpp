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


// Dense numeric primitives shared by the topic model: row-major matrices,
// softmax, activations, parameters, batch normalization, dropout masks and
// the Adam optimizer. Reverse-mode differentiation lives in tape.hpp.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ctmneg/errors.hpp"

namespace ctmneg::numcore {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

// Throws NumericalError naming `where` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view where);

// Numerically stable softmax (max-subtracted). Throws NumericalError on NaN.
std::vector<double> softmax(std::span<const double> v);
void softmax_rows_inplace(Matrix& m);

double softplus(double x);
double sigmoid(double x);

enum class Activation { softplus, relu, tanh, identity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);
double activate(Activation a, double x);
// Derivative expressed through the pre-activation input.
double activate_derivative(Activation a, double x);

// A learnable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Fills with U(-bound, bound).
void init_uniform(Matrix& m, double bound, Rng& rng);

// Affine layer y = x W + b, with W stored in x out.
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(const std::string& name, Eigen::Index in, Eigen::Index out);

  // Fan-in scaled uniform init, bound 1/sqrt(in); bias gets the same bound.
  void init(Rng& rng);
  Eigen::Index in_features() const { return weight.value.rows(); }
  Eigen::Index out_features() const { return weight.value.cols(); }
};

enum class NormMode { train, eval };

// Per-feature batch normalization with a learnable shift and no scale.
struct BatchNormState {
  Matrix running_mean;  // 1 x features
  Matrix running_var;   // 1 x features
  Parameter shift;      // 1 x features
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNormState() = default;
  BatchNormState(const std::string& name, Eigen::Index features);
  Eigen::Index features() const { return running_mean.cols(); }
};

// Value-only normalization using running statistics.
Matrix batch_norm_eval(const Matrix& x, const BatchNormState& state);

// Inverted dropout mask: entries are 0 with probability `rate`, otherwise
// 1/(1-rate).
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng);

struct AdamConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig config) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return t_; }

  // Bias-corrected Adam update of every parameter from its `grad`.
  void step(std::span<Parameter* const> params);

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

inline void adam_step(std::span<Parameter* const> params, AdamState& state) { state.step(params); }

}  // namespace ctmneg::numcore
