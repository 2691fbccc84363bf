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
#include <cmath>
#include <fstream>
#include <numeric>

#include "ctmneg/model.hpp"

namespace ctmneg::model {

using numcore::NormMode;
using numcore::Tape;
using numcore::Var;

Mode parse_mode(std::string_view name) {
  if (name == "ctm_neg") return Mode::ctm_neg;
  if (name == "ctm") return Mode::ctm;
  if (name == "prodlda") return Mode::prodlda;
  throw UsageError("unknown mode: " + std::string(name) + " (expected ctm_neg, ctm or prodlda)");
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::ctm_neg: return "ctm_neg";
    case Mode::ctm: return "ctm";
    case Mode::prodlda: return "prodlda";
  }
  return "unknown";
}

void ModelConfig::validate() const {
  if (topics < 2) throw UsageError("config: need at least 2 topics");
  if (vocab_size < 1) throw UsageError("config: vocabulary size must be positive");
  if (uses_context() && context_dim < 1) throw UsageError("config: context dimension must be positive");
  if (hidden.empty()) throw UsageError("config: need at least one hidden layer");
  for (std::size_t h : hidden) {
    if (h < 1) throw UsageError("config: hidden layer widths must be positive");
  }
  if (perturbations >= topics) throw UsageError("config: S must be smaller than the topic count");
  if (!(triplet_weight >= 0.0)) throw UsageError("config: lambda must be non-negative");
  if (!(margin > 0.0)) throw UsageError("config: margin must be positive");
  if (mode != Mode::ctm_neg && triplet_weight != 0.0) {
    throw UsageError("config: lambda must be 0 in " + std::string(to_string(mode)) + " mode");
  }
  if (mode == Mode::ctm_neg && perturbations < 1) throw UsageError("config: ctm_neg needs S >= 1");
  if (epochs < 1) throw UsageError("config: epochs must be positive");
  if (batch_size < 1 || (batch_norm && batch_size < 2)) throw UsageError("config: batch size too small");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("config: dropout must be in [0, 1)");
}

double ModelConfig::effective_alpha() const {
  return prior_alpha > 0.0 ? prior_alpha : 1.0 / static_cast<double>(topics);
}

TopicModel::TopicModel(ModelConfig config, numcore::Rng& rng) : config_(std::move(config)) {
  config_.validate();
  const auto t = static_cast<Eigen::Index>(config_.topics);
  const auto v = static_cast<Eigen::Index>(config_.vocab_size);
  prior_ = laplace_prior(config_.topics, config_.effective_alpha());

  if (config_.uses_context()) {
    context_proj_ = numcore::Linear("context_proj", static_cast<Eigen::Index>(config_.context_dim), v);
    context_proj_.init(rng);
  }
  auto width = static_cast<Eigen::Index>(config_.encoder_input_dim());
  for (std::size_t i = 0; i < config_.hidden.size(); ++i) {
    const auto out = static_cast<Eigen::Index>(config_.hidden[i]);
    hidden_.emplace_back("hidden" + std::to_string(i), width, out);
    hidden_.back().init(rng);
    width = out;
  }
  mu_head_ = numcore::Linear("mu_head", width, t);
  mu_head_.init(rng);
  log_var_head_ = numcore::Linear("log_var_head", width, t);
  log_var_head_.init(rng);
  mu_norm_ = numcore::BatchNormState("mu_norm", t);
  log_var_norm_ = numcore::BatchNormState("log_var_norm", t);
  logit_norm_ = numcore::BatchNormState("logit_norm", v);
  beta_ = numcore::Parameter("beta", t, v);
  numcore::init_uniform(beta_.value, 0.07, rng);
}

std::pair<Matrix, Matrix> TopicModel::encode_batch(const Matrix& bow, const Matrix& context) const {
  const auto v = static_cast<Eigen::Index>(config_.vocab_size);
  if (bow.cols() != v) throw UsageError("encode: BoW width does not match the vocabulary");
  Matrix x;
  if (config_.uses_context()) {
    if (context.cols() != static_cast<Eigen::Index>(config_.context_dim) || context.rows() != bow.rows()) {
      throw UsageError("encode: context embedding shape mismatch");
    }
    x.resize(bow.rows(), 2 * v);
    x.leftCols(v) = bow;
    x.rightCols(v).noalias() = context * context_proj_.weight.value;
    x.rightCols(v).rowwise() += context_proj_.bias.value.row(0);
  } else {
    x = bow;
  }
  const auto act = config_.activation;
  for (const numcore::Linear& layer : hidden_) {
    Matrix h;
    h.noalias() = x * layer.weight.value;
    h.rowwise() += layer.bias.value.row(0);
    x = h.unaryExpr([act](double z) { return numcore::activate(act, z); });
  }
  Matrix mu = x * mu_head_.weight.value;
  mu.rowwise() += mu_head_.bias.value.row(0);
  Matrix log_var = x * log_var_head_.weight.value;
  log_var.rowwise() += log_var_head_.bias.value.row(0);
  if (config_.batch_norm) {
    mu = numcore::batch_norm_eval(mu, mu_norm_);
    log_var = numcore::batch_norm_eval(log_var, log_var_norm_);
  }
  numcore::require_finite(mu, "encode");
  numcore::require_finite(log_var, "encode");
  return {std::move(mu), std::move(log_var)};
}

namespace {

Matrix row_of(std::span<const double> values) {
  Matrix m(1, static_cast<Eigen::Index>(values.size()));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

std::vector<double> to_vector(const Matrix& m, Eigen::Index row) {
  return std::vector<double>(m.row(row).data(), m.row(row).data() + m.cols());
}

}  // namespace

PosteriorParams TopicModel::encode(const corpus::BowVector& bow, const corpus::ContextEmbedding* context) const {
  Matrix ctx;
  if (config_.uses_context()) {
    if (context == nullptr) throw UsageError("encode: this mode needs a context embedding");
    ctx.resize(1, static_cast<Eigen::Index>(context->dim()));
    for (std::size_t i = 0; i < context->dim(); ++i) ctx(0, static_cast<Eigen::Index>(i)) = context->vector[i];
  }
  auto [mu, log_var] = encode_batch(row_of(bow.l1_normalized), ctx);
  return PosteriorParams{to_vector(mu, 0), to_vector(log_var, 0)};
}

TopicDistribution TopicModel::infer_theta(const corpus::BowVector& bow, const corpus::ContextEmbedding* context) const {
  return TopicDistribution{numcore::softmax(encode(bow, context).mu), ThetaSource::mean};
}

std::vector<TopicDistribution> TopicModel::infer_theta(const corpus::PreparedCorpus& data) const {
  constexpr std::size_t kChunk = 256;
  std::vector<TopicDistribution> out;
  out.reserve(data.bows.size());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.bows.size(); start += kChunk) {
    rows.resize(std::min(kChunk, data.bows.size() - start));
    std::iota(rows.begin(), rows.end(), start);
    const Batch batch = make_batch(data, rows, config_.uses_context());
    Matrix mu = encode_batch(batch.bow, batch.context).first;
    numcore::softmax_rows_inplace(mu);
    for (Eigen::Index r = 0; r < mu.rows(); ++r) out.push_back({to_vector(mu, r), ThetaSource::mean});
  }
  return out;
}

ForwardNoise TopicModel::sample_noise(Eigen::Index rows, numcore::Rng& rng) const {
  ForwardNoise noise;
  noise.dropout_mask =
      numcore::dropout_mask(rows, static_cast<Eigen::Index>(config_.hidden.back()), config_.dropout, rng);
  noise.epsilon.resize(rows, static_cast<Eigen::Index>(config_.topics));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < noise.epsilon.size(); ++i) noise.epsilon.data()[i] = normal(rng);
  return noise;
}

TrainingGraph TopicModel::training_loss(Tape& tape, const Batch& batch, const ForwardNoise& noise) {
  const bool bn = config_.batch_norm;
  Var x = tape.constant(batch.bow);
  if (config_.uses_context()) {
    Var ctx = numcore::linear(tape.constant(batch.context), context_proj_);
    x = numcore::concat_cols(x, ctx);
  }
  Var h = numcore::mlp_forward(x, hidden_, config_.activation);
  if (config_.dropout > 0.0) h = numcore::apply_mask(h, noise.dropout_mask);

  Var mu = numcore::linear(h, mu_head_);
  Var log_var = numcore::linear(h, log_var_head_);
  if (bn) {
    mu = numcore::batch_norm(mu, mu_norm_, NormMode::train);
    log_var = numcore::batch_norm(log_var, log_var_norm_, NormMode::train);
  }
  Var sigma = numcore::exp(numcore::scale(log_var, 0.5));
  Var z = numcore::add(mu, numcore::mul(sigma, tape.constant(noise.epsilon)));
  Var theta = numcore::softmax_rows(z);

  Var beta = tape.leaf(beta_);
  auto reconstruct = [&](Var topic_mix, bool update_running) {
    Var logits = numcore::matmul(topic_mix, beta);
    if (bn) logits = numcore::batch_norm(logits, logit_norm_, NormMode::train, update_running);
    return numcore::softmax_rows(logits);
  };
  Var xhat = reconstruct(theta, true);

  TrainingGraph g;
  g.reconstruction = numcore::mean(ops::reconstruction_rows(xhat, batch.counts));
  g.kl = numcore::mean(ops::kl_rows(mu, log_var, prior_));
  Var elbo = numcore::add(g.reconstruction, g.kl);
  double triplet_value = 0.0;
  double lambda = 0.0;
  if (config_.uses_triplet()) {
    Var theta_neg = ops::perturb_logits(z, config_.perturbations);
    Var xhat_neg = reconstruct(theta_neg, false);
    g.triplet = numcore::mean(ops::triplet_rows(xhat, batch.bow, xhat_neg, config_.margin));
    lambda = config_.triplet_weight;
    g.loss = numcore::add(elbo, numcore::scale(g.triplet, lambda));
    triplet_value = g.triplet.value()(0, 0);
  } else {
    g.loss = elbo;
  }
  g.parts = make_breakdown(g.reconstruction.value()(0, 0), g.kl.value()(0, 0), triplet_value, lambda);
  return g;
}

std::vector<numcore::Parameter*> TopicModel::parameters() {
  std::vector<numcore::Parameter*> params;
  if (config_.uses_context()) {
    params.push_back(&context_proj_.weight);
    params.push_back(&context_proj_.bias);
  }
  for (numcore::Linear& layer : hidden_) {
    params.push_back(&layer.weight);
    params.push_back(&layer.bias);
  }
  for (numcore::Linear* head : {&mu_head_, &log_var_head_}) {
    params.push_back(&head->weight);
    params.push_back(&head->bias);
  }
  if (config_.batch_norm) {
    for (numcore::BatchNormState* norm : {&mu_norm_, &log_var_norm_, &logit_norm_}) params.push_back(&norm->shift);
  }
  params.push_back(&beta_);
  return params;
}

std::vector<std::pair<std::string, Matrix*>> TopicModel::tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (numcore::Parameter* p : parameters()) out.emplace_back(p->name, &p->value);
  if (config_.batch_norm) {
    for (numcore::BatchNormState* norm : {&mu_norm_, &log_var_norm_, &logit_norm_}) {
      const std::string base = norm->shift.name.substr(0, norm->shift.name.find('.'));
      out.emplace_back(base + ".running_mean", &norm->running_mean);
      out.emplace_back(base + ".running_var", &norm->running_var);
    }
  }
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> TopicModel::tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, m] : const_cast<TopicModel*>(this)->tensors()) out.emplace_back(name, m);
  return out;
}

Batch make_batch(const corpus::PreparedCorpus& data, std::span<const std::size_t> rows, bool with_context) {
  if (data.bows.empty()) throw UsageError("make_batch: no documents");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto v = static_cast<Eigen::Index>(data.bows.front().l1_normalized.size());
  Batch batch;
  batch.counts = Matrix::Zero(n, v);
  batch.bow.resize(n, v);
  for (Eigen::Index r = 0; r < n; ++r) {
    const corpus::BowVector& bow = data.bows.at(rows[static_cast<std::size_t>(r)]);
    for (const auto& [w, c] : bow.counts) batch.counts(r, w) = c;
    std::copy(bow.l1_normalized.begin(), bow.l1_normalized.end(), batch.bow.row(r).data());
  }
  if (with_context) {
    if (data.embeddings.size() != data.bows.size()) throw DataError("embeddings are not aligned with documents");
    const auto d = static_cast<Eigen::Index>(data.embeddings.front().dim());
    batch.context.resize(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& e = data.embeddings[rows[static_cast<std::size_t>(r)]].vector;
      if (static_cast<Eigen::Index>(e.size()) != d) throw DataError("embeddings have inconsistent dimensions");
      for (Eigen::Index c = 0; c < d; ++c) batch.context(r, c) = e[static_cast<std::size_t>(c)];
    }
  }
  return batch;
}

namespace {

// Contiguous slices of `order`; a trailing single-document batch is merged
// into the previous one since batch norm needs two rows.
std::vector<std::span<const std::size_t>> slice_batches(const std::vector<std::size_t>& order, std::size_t size,
                                                        bool merge_singleton) {
  std::vector<std::span<const std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += size) {
    const std::size_t len = std::min(size, order.size() - start);
    if (len == 1 && merge_singleton && !batches.empty()) {
      const auto& last = batches.back();
      batches.back() = std::span<const std::size_t>(last.data(), last.size() + 1);
    } else {
      batches.emplace_back(order.data() + start, len);
    }
  }
  return batches;
}

}  // namespace

FitResult fit(const corpus::PreparedCorpus& data, const ModelConfig& config) {
  config.validate();
  const std::size_t n = data.bows.size();
  if (n == 0) throw DataError("fit: corpus is empty");
  if (data.bows.front().l1_normalized.size() != config.vocab_size) {
    throw DataError("fit: BoW width does not match the configured vocabulary size");
  }
  if (config.uses_context()) {
    if (data.embeddings.size() != n) throw DataError("fit: embeddings are not aligned with documents");
    if (data.embeddings.front().dim() != config.context_dim) {
      throw DataError("fit: embedding dimension does not match the configured context dimension");
    }
  }
  if (config.batch_norm && n < 2) throw DataError("fit: batch norm needs at least 2 documents");

  numcore::Rng rng(config.seed);
  FitResult result{TopicModel(config, rng), {}};
  TopicModel& model = result.model;
  numcore::AdamState adam(config.adam);
  const std::vector<numcore::Parameter*> params = model.parameters();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double rl = 0.0, kl = 0.0, tl = 0.0;
    std::size_t batch_index = 0;
    for (std::span<const std::size_t> rows : slice_batches(order, config.batch_size, config.batch_norm)) {
      ++batch_index;
      const Batch batch = make_batch(data, rows, config.uses_context());
      const ForwardNoise noise = model.sample_noise(static_cast<Eigen::Index>(rows.size()), rng);
      try {
        for (numcore::Parameter* p : params) p->zero_grad();
        Tape tape;
        const TrainingGraph graph = model.training_loss(tape, batch, noise);
        tape.backward(graph.loss);
        adam.step(params);
        const auto w = static_cast<double>(rows.size());
        rl += w * graph.parts.reconstruction;
        kl += w * graph.parts.kl;
        tl += w * graph.parts.triplet;
      } catch (const NumericalError& e) {
        throw NumericalError("training aborted at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index) + ": " + e.what());
      }
    }
    const auto total = static_cast<double>(n);
    const double lambda = config.uses_triplet() ? config.triplet_weight : 0.0;
    result.trace.push_back(make_breakdown(rl / total, kl / total, tl / total, lambda));
  }
  return result;
}

void write_loss_trace_csv(const std::filesystem::path& path, std::span<const LossBreakdown> trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write loss trace: " + path.string());
  out.precision(17);
  out << "epoch,L_RL,L_KL,L_TL,L\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const LossBreakdown& b = trace[i];
    out << (i + 1) << ',' << b.reconstruction << ',' << b.kl << ',' << b.triplet << ',' << b.total << '\n';
  }
}

}  // namespace ctmneg::model
