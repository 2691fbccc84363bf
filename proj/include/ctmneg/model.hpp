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


// Contextualized neural topic model with negative sampling.
//
// The encoder maps the L1-normalized bag of words, concatenated with a
// linear projection of the contextual embedding, to a diagonal Gaussian
// posterior over topic logits. A reparameterized sample is pushed through a
// softmax to get the document-topic vector theta, and the decoder
// reconstructs the word distribution as softmax(theta * beta). In ctm_neg
// mode the top-S topics of theta are zeroed and renormalized, the perturbed
// vector is decoded as well, and a triplet loss pulls the reconstruction
// towards the input and away from the perturbed reconstruction.
//
// Mode ctm is the same model without the triplet branch; prodlda
// additionally drops the contextual input.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctmneg/corpus.hpp"
#include "ctmneg/numcore.hpp"
#include "ctmneg/tape.hpp"

namespace ctmneg::model {

using numcore::Matrix;
using TopicList = std::vector<std::vector<std::string>>;

enum class Mode { ctm_neg, ctm, prodlda };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

struct ModelConfig {
  std::size_t topics = 10;
  std::size_t vocab_size = 0;
  std::size_t context_dim = 0;
  std::vector<std::size_t> hidden = {100, 100};
  std::size_t perturbations = 1;  // S
  double triplet_weight = 0.0;    // lambda
  double margin = 1.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  Mode mode = Mode::ctm_neg;
  double dropout = 0.2;
  bool batch_norm = true;
  numcore::Activation activation = numcore::Activation::softplus;
  // Symmetric Dirichlet concentration of the prior; <= 0 means 1/T.
  double prior_alpha = 0.0;
  numcore::AdamConfig adam;

  // Throws UsageError on inconsistent settings.
  void validate() const;
  bool uses_context() const { return mode != Mode::prodlda; }
  bool uses_triplet() const { return mode == Mode::ctm_neg; }
  double effective_alpha() const;
  std::size_t encoder_input_dim() const { return uses_context() ? 2 * vocab_size : vocab_size; }
};

struct PosteriorParams {
  std::vector<double> mu;
  std::vector<double> log_var;
};

struct PriorParams {
  std::vector<double> mean;
  std::vector<double> var;
};

enum class ThetaSource { sampled, mean };

struct TopicDistribution {
  std::vector<double> theta;
  ThetaSource source = ThetaSource::sampled;
};

struct TopicWordMatrix {
  Matrix beta;  // T x V, unnormalized
};

struct LossBreakdown {
  double reconstruction = 0.0;
  double kl = 0.0;
  double triplet = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

// ---- Value-level building blocks -------------------------------------------

// z = mu + exp(log_var / 2) * noise.
std::vector<double> reparameterize(const PosteriorParams& post, std::span<const double> noise);
std::vector<double> reparameterize(const PosteriorParams& post, numcore::Rng& rng);

TopicDistribution theta_from_z(std::span<const double> z);

// softmax(beta^T theta), without batch normalization.
std::vector<double> decode(const TopicDistribution& theta, const TopicWordMatrix& words);

// Indices of the k largest values, largest first; equal values keep the
// lower index first.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t k);

// Zeroes the S largest entries and renormalizes the rest. Requires 1 <= S < T.
TopicDistribution perturb_theta(const TopicDistribution& theta, std::size_t s);

// Closed-form KL(q || p) between diagonal Gaussians.
double kl_divergence(const PosteriorParams& post, const PriorParams& prior);

// Laplace approximation of a symmetric Dirichlet(alpha) in the softmax basis.
PriorParams laplace_prior(std::size_t topics, double alpha);

inline constexpr double kProbabilityFloor = 1e-10;

// -sum_w count_w * ln(max(xhat_w, 1e-10)).
double reconstruction_loss(std::span<const double> counts, std::span<const double> xhat);
double reconstruction_loss(const corpus::BowVector& bow, std::span<const double> xhat);

// max(|a - p| - |a - n| + margin, 0).
double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin);

double total_loss(const LossBreakdown& parts);
LossBreakdown make_breakdown(double reconstruction, double kl, double triplet, double lambda);

// Top-k words per topic by descending beta, ties to the lower word index.
TopicList get_topics(const TopicWordMatrix& words, const corpus::Vocabulary& vocab, std::size_t k = 10);

// ---- Differentiable loss nodes ---------------------------------------------

namespace ops {
using numcore::Var;

// Row-wise perturb_theta.
Var perturb_rows(Var theta, std::size_t s);
// Same map taken from the logits: softmax over the entries left after
// dropping the S largest. Never degenerate, so training uses this form.
Var perturb_logits(Var z, std::size_t s);
// Per-row reconstruction loss against constant counts (n x 1).
Var reconstruction_rows(Var xhat, const Matrix& counts);
// Per-row KL against the prior (n x 1).
Var kl_rows(Var mu, Var log_var, const PriorParams& prior);
// Per-row triplet loss with a constant positive (n x 1).
Var triplet_rows(Var anchor, const Matrix& positive, Var negative, double margin);
}  // namespace ops

// ---- The model ---------------------------------------------------------------

// Dense views of a minibatch.
struct Batch {
  Matrix counts;   // n x V
  Matrix bow;      // n x V, L1-normalized
  Matrix context;  // n x D, empty in prodlda mode
};

Batch make_batch(const corpus::PreparedCorpus& data, std::span<const std::size_t> rows, bool with_context);

// Stochastic inputs of one training forward pass.
struct ForwardNoise {
  Matrix dropout_mask;  // n x last hidden width
  Matrix epsilon;       // n x T
};

struct TrainingGraph {
  numcore::Var loss;
  numcore::Var reconstruction;
  numcore::Var kl;
  numcore::Var triplet;  // unset outside ctm_neg mode
  LossBreakdown parts;
};

class TopicModel {
 public:
  // Initializes every parameter from `rng`.
  TopicModel(ModelConfig config, numcore::Rng& rng);

  const ModelConfig& config() const { return config_; }
  const PriorParams& prior() const { return prior_; }
  const Matrix& beta() const { return beta_.value; }
  TopicWordMatrix topic_word_matrix() const { return TopicWordMatrix{beta_.value}; }

  // Eval-mode posterior for a batch (rows are documents).
  std::pair<Matrix, Matrix> encode_batch(const Matrix& bow, const Matrix& context) const;
  PosteriorParams encode(const corpus::BowVector& bow, const corpus::ContextEmbedding* context) const;

  // theta = softmax(mu), no sampling.
  TopicDistribution infer_theta(const corpus::BowVector& bow, const corpus::ContextEmbedding* context) const;
  std::vector<TopicDistribution> infer_theta(const corpus::PreparedCorpus& data) const;

  ForwardNoise sample_noise(Eigen::Index rows, numcore::Rng& rng) const;

  // Records the full training objective for one batch on `tape`. Batch norm
  // runs in train mode and updates its running statistics.
  TrainingGraph training_loss(numcore::Tape& tape, const Batch& batch, const ForwardNoise& noise);

  std::vector<numcore::Parameter*> parameters();
  // Learnable tensors followed by batch-norm running statistics, in a fixed
  // order; used by checkpoints and equality checks.
  std::vector<std::pair<std::string, Matrix*>> tensors();
  std::vector<std::pair<std::string, const Matrix*>> tensors() const;

 private:
  ModelConfig config_;
  PriorParams prior_;
  numcore::Linear context_proj_;
  std::vector<numcore::Linear> hidden_;
  numcore::Linear mu_head_;
  numcore::Linear log_var_head_;
  numcore::BatchNormState mu_norm_;
  numcore::BatchNormState log_var_norm_;
  numcore::BatchNormState logit_norm_;
  numcore::Parameter beta_;
};

struct FitResult {
  TopicModel model;
  std::vector<LossBreakdown> trace;  // one entry per epoch
};

// Trains from scratch. Requires non-empty data and, outside prodlda mode,
// one embedding per document. Throws NumericalError if a loss goes
// non-finite.
FitResult fit(const corpus::PreparedCorpus& data, const ModelConfig& config);

void write_loss_trace_csv(const std::filesystem::path& path, std::span<const LossBreakdown> trace);

// ---- Checkpoints ---------------------------------------------------------------

struct EmbeddingSource {
  bool fallback = true;
  std::uint64_t fallback_seed = 0;
  std::size_t dim = 0;
};

struct Checkpoint {
  TopicModel model;
  corpus::Vocabulary vocab;
  EmbeddingSource embeddings;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const TopicModel& model, const corpus::Vocabulary& vocab,
                     const EmbeddingSource& embeddings);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ctmneg::model
