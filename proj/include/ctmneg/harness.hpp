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


// Experiment runner: benchmark sweeps over topic counts and seeds,
// hyperparameter search, extrinsic classification and report emission.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctmneg/corpus.hpp"
#include "ctmneg/metrics.hpp"
#include "ctmneg/model.hpp"

namespace ctmneg::harness {

struct HyperParams {
  std::size_t s = 1;
  double lambda = 0.5;

  bool operator==(const HyperParams&) const = default;
};

// Best (S, lambda) published for the GN, 20NG and M10 datasets at the
// standard topic counts; nullopt for anything else.
std::optional<HyperParams> reference_hyperparameters(std::string_view dataset, std::size_t topics);

inline const std::vector<std::size_t> kDefaultTopicCounts = {10, 20, 30, 40, 50, 60, 90, 120};

struct ExperimentGrid {
  std::vector<std::size_t> topic_counts = kDefaultTopicCounts;
  std::size_t runs = 5;
  std::vector<model::Mode> modes = {model::Mode::ctm_neg, model::Mode::ctm, model::Mode::prodlda};
  // Per topic count; falls back to reference_hyperparameters(), then to
  // HyperParams{}.
  std::map<std::size_t, HyperParams> hyperparams;

  void validate() const;
  HyperParams hyperparams_for(std::string_view dataset, std::size_t topics) const;
};

double median(std::vector<double> values);
double mean(std::span<const double> values);

// Stable per-cell seed from the master seed and the cell coordinates.
std::uint64_t cell_seed(std::uint64_t master, std::string_view dataset, std::size_t topics, model::Mode mode,
                        std::size_t run);

struct DatasetOptions {
  std::size_t vocab_size = corpus::kDefaultVocabularySize;
  // When no embedding file is supplied, fallback embeddings are generated.
  std::optional<std::filesystem::path> embeddings_path;
  // Rows aligned with the corpus; takes precedence over embeddings_path.
  std::optional<std::vector<corpus::ContextEmbedding>> embeddings;
  std::size_t fallback_dim = corpus::kDefaultFallbackDim;
  std::uint64_t fallback_seed = 0;
};

// A corpus ready for training: vocabulary, BoW views, aligned embeddings.
struct Dataset {
  std::string name;
  corpus::Vocabulary vocab;
  corpus::PreparedCorpus data;
  model::EmbeddingSource embedding_source;
  std::uint64_t content_hash = 0;
};

Dataset prepare_dataset(std::string name, const corpus::Corpus& corpus, const DatasetOptions& options);

// Trains one model on `dataset` and scores its top words against the
// dataset's own documents.
struct TrainedCell {
  model::FitResult fit;
  metrics::TopicList topics;
  metrics::MetricReport report;
};

TrainedCell train_and_evaluate(const Dataset& dataset, const model::ModelConfig& config,
                               const metrics::MetricOptions& metric_options);

struct BenchmarkOptions {
  model::ModelConfig base;  // topics, mode, S, lambda and seed are set per cell
  std::uint64_t master_seed = 0;
  metrics::MetricOptions metrics;
  std::optional<std::filesystem::path> cache_dir;
  // CSV of every run; a markdown summary is written next to it (.md).
  std::optional<std::filesystem::path> out_path;
  std::size_t jobs = 1;
};

struct RunResult {
  model::Mode mode = model::Mode::ctm_neg;
  std::size_t topics = 0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  HyperParams hyperparams;
  std::optional<double> npmi, cv, irbo;
  std::string error;  // non-empty when the cell failed
  bool cached = false;

  bool failed() const { return !error.empty(); }
};

struct CellSummary {
  model::Mode mode = model::Mode::ctm_neg;
  std::size_t topics = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::optional<double> npmi, cv, irbo;  // medians over completed runs
};

struct Aggregate {
  std::optional<double> mean;
  std::optional<double> median;
};

struct ModelSummary {
  model::Mode mode = model::Mode::ctm_neg;
  Aggregate npmi, cv, irbo;  // over per-topic-count medians
};

struct BenchmarkReport {
  std::string dataset;
  std::vector<RunResult> runs;
  std::vector<CellSummary> cells;
  std::vector<ModelSummary> models;
};

// Fills cells and models from runs.
void summarize(BenchmarkReport& report);

BenchmarkReport run_benchmark(const ExperimentGrid& grid, const Dataset& dataset, const BenchmarkOptions& options);

enum class ReportFormat { csv, markdown };

std::string render_report(const BenchmarkReport& report, ReportFormat format);
void emit_report(const BenchmarkReport& report, ReportFormat format, const std::filesystem::path& path);

// ---- Hyperparameter search ----------------------------------------------------

struct SearchCandidate {
  HyperParams params;
  std::optional<double> npmi;  // dev-split NPMI; empty if training failed
};

struct SearchResult {
  HyperParams best;
  std::optional<double> best_npmi;
  std::vector<SearchCandidate> candidates;
};

// Highest NPMI wins; the earliest candidate wins ties. Throws UsageError if
// no candidate has a score.
std::size_t select_best(std::span<const SearchCandidate> candidates);

// Candidate list: S grid crossed with seeded U(0, 1) lambda samples,
// truncated to `budget` entries.
std::vector<HyperParams> search_candidates(std::span<const std::size_t> s_grid, std::size_t budget,
                                           std::uint64_t seed);

struct SearchOptions {
  std::vector<std::size_t> s_grid = {1, 2, 3};
  std::size_t budget = 9;
  std::uint64_t seed = 0;
  model::ModelConfig base;
  metrics::MetricOptions metrics;
};

// Trains on `train` and scores NPMI against the documents of `dev`.
SearchResult hyperparam_search(const Dataset& train, const corpus::Corpus& dev, std::size_t topics,
                               const SearchOptions& options);

// ---- Extrinsic classification ---------------------------------------------------

struct ClassifierConfig {
  double lr = 0.05;
  double l2 = 1e-4;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
};

// One-vs-rest linear SVM trained by hinge-loss subgradient descent.
class LinearClassifier {
 public:
  static LinearClassifier train(const std::vector<std::vector<double>>& features,
                                const std::vector<std::string>& labels, const ClassifierConfig& config);

  std::string predict(std::span<const double> features) const;
  double accuracy(const std::vector<std::vector<double>>& features, const std::vector<std::string>& labels) const;

  const std::vector<std::string>& classes() const { return classes_; }
  const model::Matrix& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }
  // Mean regularized hinge loss per epoch.
  const std::vector<double>& loss_trace() const { return loss_trace_; }

 private:
  std::vector<std::string> classes_;
  model::Matrix weights_;  // classes x features
  std::vector<double> bias_;
  std::vector<double> loss_trace_;
};

double classify(const std::vector<std::vector<double>>& train_features, const std::vector<std::string>& train_labels,
                const std::vector<std::vector<double>>& test_features, const std::vector<std::string>& test_labels,
                const ClassifierConfig& config);

// Share of the most frequent training label among test labels.
double majority_baseline(const std::vector<std::string>& train_labels, const std::vector<std::string>& test_labels);

}  // namespace ctmneg::harness
