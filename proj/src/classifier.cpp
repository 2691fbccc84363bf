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


#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "ctmneg/errors.hpp"
#include "ctmneg/harness.hpp"

namespace ctmneg::harness {
namespace {

void check_shapes(const std::vector<std::vector<double>>& features, const std::vector<std::string>& labels,
                  std::size_t dim) {
  if (features.size() != labels.size()) throw UsageError("classifier: feature/label count mismatch");
  for (const auto& row : features) {
    if (row.size() != dim) throw UsageError("classifier: ragged feature rows");
  }
}

}  // namespace

LinearClassifier LinearClassifier::train(const std::vector<std::vector<double>>& features,
                                         const std::vector<std::string>& labels, const ClassifierConfig& config) {
  if (features.empty()) throw UsageError("classifier: empty training set");
  const std::size_t dim = features.front().size();
  check_shapes(features, labels, dim);

  LinearClassifier clf;
  const std::set<std::string> unique(labels.begin(), labels.end());
  if (unique.size() < 2) throw UsageError("classifier: training set has a single class");
  clf.classes_.assign(unique.begin(), unique.end());
  const std::size_t k = clf.classes_.size();
  clf.weights_ = model::Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim));
  clf.bias_.assign(k, 0.0);

  const std::size_t n = features.size();
  std::vector<std::size_t> target(n);
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = static_cast<std::size_t>(
        std::lower_bound(clf.classes_.begin(), clf.classes_.end(), labels[i]) - clf.classes_.begin());
  }
  std::vector<Eigen::Map<const Eigen::RowVectorXd>> x;
  x.reserve(n);
  for (const auto& row : features) x.emplace_back(row.data(), static_cast<Eigen::Index>(dim));

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double shrink = 1.0 - config.lr * config.l2;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      for (std::size_t c = 0; c < k; ++c) {
        const double y = target[i] == c ? 1.0 : -1.0;
        auto w = clf.weights_.row(static_cast<Eigen::Index>(c));
        const double score = w.dot(x[i]) + clf.bias_[c];
        w *= shrink;
        if (y * score < 1.0) {
          w += config.lr * y * x[i];
          clf.bias_[c] += config.lr * y;
        }
      }
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        const double y = target[i] == c ? 1.0 : -1.0;
        const double score = clf.weights_.row(static_cast<Eigen::Index>(c)).dot(x[i]) + clf.bias_[c];
        loss += std::max(0.0, 1.0 - y * score);
      }
    }
    loss = loss / static_cast<double>(n) + 0.5 * config.l2 * clf.weights_.squaredNorm();
    clf.loss_trace_.push_back(loss);
  }
  return clf;
}

std::string LinearClassifier::predict(std::span<const double> features) const {
  if (features.size() != static_cast<std::size_t>(weights_.cols())) {
    throw UsageError("classifier: feature dimension mismatch");
  }
  const Eigen::Map<const Eigen::RowVectorXd> x(features.data(), static_cast<Eigen::Index>(features.size()));
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    const double s = weights_.row(static_cast<Eigen::Index>(c)).dot(x) + bias_[c];
    if (c == 0 || s > best_score) {  // lower class index wins ties
      best = c;
      best_score = s;
    }
  }
  return classes_[best];
}

double LinearClassifier::accuracy(const std::vector<std::vector<double>>& features,
                                  const std::vector<std::string>& labels) const {
  if (features.empty()) throw UsageError("classifier: empty evaluation set");
  check_shapes(features, labels, static_cast<std::size_t>(weights_.cols()));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < features.size(); ++i) hits += predict(features[i]) == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(features.size());
}

double classify(const std::vector<std::vector<double>>& train_features, const std::vector<std::string>& train_labels,
                const std::vector<std::vector<double>>& test_features, const std::vector<std::string>& test_labels,
                const ClassifierConfig& config) {
  return LinearClassifier::train(train_features, train_labels, config).accuracy(test_features, test_labels);
}

double majority_baseline(const std::vector<std::string>& train_labels, const std::vector<std::string>& test_labels) {
  if (train_labels.empty() || test_labels.empty()) throw UsageError("majority baseline: empty label set");
  std::map<std::string, std::size_t> counts;
  for (const auto& l : train_labels) ++counts[l];
  // std::map order: the lexicographically smallest label wins ties
  auto top = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > top->second) top = it;
  }
  const auto hits = std::count(test_labels.begin(), test_labels.end(), top->first);
  return static_cast<double>(hits) / static_cast<double>(test_labels.size());
}

}  // namespace ctmneg::harness
