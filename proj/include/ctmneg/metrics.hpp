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


// Topic quality: sliding-window co-occurrence statistics, NPMI and CV
// coherence, rank-biased overlap and the inverted RBO diversity score.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ctmneg/corpus.hpp"

namespace ctmneg::metrics {

using TopicList = std::vector<std::vector<std::string>>;

inline constexpr double kCoherenceEpsilon = 1e-12;
inline constexpr std::size_t kNpmiWindow = 10;
inline constexpr std::size_t kCvWindow = 110;
inline constexpr double kRboPersistence = 0.9;
inline constexpr std::size_t kTopWords = 10;

// Boolean sliding-window counts. Every document contributes
// max(1, len - window + 1) virtual documents; n(w) counts the virtual
// documents containing w and n(a, b) those containing both.
class CooccurrenceStats {
 public:
  CooccurrenceStats(std::size_t window, double epsilon) : window_(window), epsilon_(epsilon) {}

  std::size_t window() const { return window_; }
  double epsilon() const { return epsilon_; }
  std::size_t virtual_documents() const { return virtual_docs_; }

  bool contains(const std::string& word) const { return count(word) > 0; }
  std::size_t count(const std::string& word) const;
  std::size_t pair_count(const std::string& a, const std::string& b) const;
  double probability(const std::string& word) const;
  double joint_probability(const std::string& a, const std::string& b) const;

  // Adds the windows of one document.
  void add_document(std::span<const std::string> tokens, const std::unordered_set<std::string>* restrict_to);
  // Counts are additive, so shards can be merged in any order.
  void merge(const CooccurrenceStats& other);

 private:
  std::optional<std::uint32_t> id_of(const std::string& word) const;
  std::uint32_t intern(const std::string& word);

  std::size_t window_;
  double epsilon_;
  std::size_t virtual_docs_ = 0;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> words_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::uint64_t, std::size_t> pairs_;
  std::vector<std::size_t> stamp_;  // scratch for distinct-word detection
  std::size_t stamp_clock_ = 0;
};

// When `restrict_to` is given only those words are tracked; window
// positions still count every token. Throws DataError on an empty corpus.
CooccurrenceStats cooccurrence_counts(std::span<const corpus::Document> reference, std::size_t window,
                                      const std::unordered_set<std::string>* restrict_to = nullptr,
                                      double epsilon = kCoherenceEpsilon);

// NPMI with the smoothing constant inside both logarithms, clamped to
// [-1, 1]. Throws DataError if a word never occurs in the reference corpus.
double npmi_pair(const CooccurrenceStats& stats, const std::string& a, const std::string& b);

// Mean NPMI over all unordered pairs of the topic's words that occur in the
// reference corpus. Throws DataError if fewer than two such words remain.
double topic_npmi(const CooccurrenceStats& stats, std::span<const std::string> topic);

// One-set indirect cosine coherence over NPMI context vectors (gamma = 1,
// self-pairs count as +1).
double cv_score(const CooccurrenceStats& stats, std::span<const std::string> topic);

double cosine(std::span<const double> a, std::span<const double> b);

// Extrapolated RBO at depth min(k, longer list length). Two empty lists
// score 1, one empty list scores 0.
double rbo(std::span<const std::string> l1, std::span<const std::string> l2, double p = kRboPersistence,
           std::size_t k = kTopWords);

// 1 - mean pairwise RBO. Throws UsageError for fewer than two topics.
double irbo(const TopicList& topics, double p = kRboPersistence, std::size_t k = kTopWords);

struct MetricOptions {
  std::size_t npmi_window = kNpmiWindow;
  std::size_t cv_window = kCvWindow;
  double epsilon = kCoherenceEpsilon;
  double rbo_p = kRboPersistence;
  std::size_t top_k = kTopWords;
  bool npmi = true;
  bool cv = true;
  bool irbo = true;
};

struct MetricReport {
  std::vector<double> topic_npmi;
  std::vector<double> topic_cv;
  std::optional<double> npmi;  // mean over topics
  std::optional<double> cv;
  std::optional<double> irbo;
  std::vector<std::string> missing_words;  // topic words absent from the reference corpus
};

// Topics are truncated to options.top_k words.
MetricReport evaluate_topics(const TopicList& topics, std::span<const corpus::Document> reference,
                             const MetricOptions& options = {});

struct MetricRow {
  std::string model;
  std::size_t topics = 0;
  std::uint64_t seed = 0;
  std::optional<double> npmi;
  std::optional<double> cv;
  std::optional<double> irbo;
};

// Columns model,T,seed,NPMI,CV,IRBO; missing values are left empty in CSV
// and null in JSON.
std::string to_csv(std::span<const MetricRow> rows);
std::string to_json(std::span<const MetricRow> rows);

}  // namespace ctmneg::metrics
