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


#include "ctmneg/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctmneg::numcore {

void require_finite(const Matrix& m, std::string_view where) {
  if (!m.allFinite()) {
    throw NumericalError("non-finite value in " + std::string(where));
  }
}

std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  if (out.empty()) return out;
  for (double x : out) {
    if (std::isnan(x)) throw NumericalError("softmax: NaN input");
  }
  const double hi = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& x : out) {
    x = std::exp(x - hi);
    total += x;
  }
  for (double& x : out) x /= total;
  return out;
}

void softmax_rows_inplace(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    if (row.hasNaN()) throw NumericalError("softmax: NaN input");
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

double softplus(double x) {
  // log(1 + e^x) without overflow for large |x|.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Activation parse_activation(std::string_view name) {
  if (name == "softplus") return Activation::softplus;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw UsageError("unknown activation: " + std::string(name));
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::softplus: return "softplus";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "unknown";
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::softplus: return softplus(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::softplus: return sigmoid(x);
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

void init_uniform(Matrix& m, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

Linear::Linear(const std::string& name, Eigen::Index in, Eigen::Index out)
    : weight(name + ".weight", in, out), bias(name + ".bias", 1, out) {}

void Linear::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features()));
  init_uniform(weight.value, bound, rng);
  init_uniform(bias.value, bound, rng);
}

BatchNormState::BatchNormState(const std::string& name, Eigen::Index features)
    : running_mean(Matrix::Zero(1, features)),
      running_var(Matrix::Ones(1, features)),
      shift(name + ".shift", 1, features) {}

Matrix batch_norm_eval(const Matrix& x, const BatchNormState& state) {
  if (x.cols() != state.features()) throw UsageError("batch_norm: feature count mismatch");
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double inv = 1.0 / std::sqrt(state.running_var(0, c) + state.eps);
    out.col(c) = ((x.col(c).array() - state.running_mean(0, c)) * inv + state.shift.value(0, c)).matrix();
  }
  return out;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw UsageError("dropout rate must be in [0, 1)");
  Matrix mask(rows, cols);
  if (rate == 0.0) {
    mask.setOnes();
    return mask;
  }
  std::bernoulli_distribution keep(1.0 - rate);
  const double kept = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? kept : 0.0;
  return mask;
}

void AdamState::step(std::span<Parameter* const> params) {
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Parameter* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw UsageError("adam: parameter list changed between steps");

  ++t_;
  const auto& c = config_;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (p.grad.rows() != m_[i].rows() || p.grad.cols() != m_[i].cols()) {
      throw UsageError("adam: shape mismatch for " + p.name);
    }
    m_[i] = c.beta1 * m_[i] + (1.0 - c.beta1) * p.grad;
    v_[i] = c.beta2 * v_[i] + (1.0 - c.beta2) * p.grad.cwiseAbs2();
    const auto m_hat = m_[i].array() / correction1;
    const auto v_hat = v_[i].array() / correction2;
    p.value.array() -= c.lr * m_hat / (v_hat.sqrt() + c.epsilon);
  }
}

}  // namespace ctmneg::numcore
