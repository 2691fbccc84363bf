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
#include <limits>
#include <numeric>

#include "ctmneg/model.hpp"

namespace ctmneg::model {

std::vector<double> reparameterize(const PosteriorParams& post, std::span<const double> noise) {
  if (post.mu.size() != post.log_var.size() || noise.size() != post.mu.size()) {
    throw UsageError("reparameterize: length mismatch");
  }
  std::vector<double> z(post.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = post.mu[i] + std::exp(0.5 * post.log_var[i]) * noise[i];
  return z;
}

std::vector<double> reparameterize(const PosteriorParams& post, numcore::Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(post.mu.size());
  for (double& e : noise) e = normal(rng);
  return reparameterize(post, noise);
}

TopicDistribution theta_from_z(std::span<const double> z) {
  return TopicDistribution{numcore::softmax(z), ThetaSource::sampled};
}

std::vector<double> decode(const TopicDistribution& theta, const TopicWordMatrix& words) {
  const Matrix& beta = words.beta;
  if (static_cast<Eigen::Index>(theta.theta.size()) != beta.rows()) throw UsageError("decode: topic count mismatch");
  std::vector<double> logits(static_cast<std::size_t>(beta.cols()), 0.0);
  for (Eigen::Index t = 0; t < beta.rows(); ++t) {
    const double w = theta.theta[static_cast<std::size_t>(t)];
    for (Eigen::Index v = 0; v < beta.cols(); ++v) logits[static_cast<std::size_t>(v)] += w * beta(t, v);
  }
  return numcore::softmax(logits);
}

std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t k) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&values](std::size_t a, std::size_t b) {
                      return values[a] > values[b] || (values[a] == values[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

namespace {

// Writes the perturbed copy of `theta` into `out`; returns the surviving mass.
double perturb_into(std::span<const double> theta, std::size_t s, std::span<double> out) {
  if (s < 1 || s >= theta.size()) throw UsageError("perturb_theta: need 1 <= S < T");
  std::copy(theta.begin(), theta.end(), out.begin());
  for (std::size_t i : top_indices(theta, s)) out[i] = 0.0;
  const double mass = std::accumulate(out.begin(), out.end(), 0.0);
  if (mass < 1e-12) throw NumericalError("degenerate perturbation: remaining mass below 1e-12");
  for (double& x : out) x /= mass;
  return mass;
}

}  // namespace

TopicDistribution perturb_theta(const TopicDistribution& theta, std::size_t s) {
  TopicDistribution out{std::vector<double>(theta.theta.size()), theta.source};
  perturb_into(theta.theta, s, out.theta);
  return out;
}

double kl_divergence(const PosteriorParams& post, const PriorParams& prior) {
  const std::size_t n = post.mu.size();
  if (post.log_var.size() != n || prior.mean.size() != n || prior.var.size() != n) {
    throw UsageError("kl_divergence: length mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double var = std::exp(post.log_var[i]);
    if (!(var > 0.0) || !(prior.var[i] > 0.0)) throw NumericalError("kl_divergence: non-positive variance");
    const double diff = prior.mean[i] - post.mu[i];
    kl += var / prior.var[i] + diff * diff / prior.var[i] - 1.0 + std::log(prior.var[i]) - post.log_var[i];
  }
  return 0.5 * kl;
}

PriorParams laplace_prior(std::size_t topics, double alpha) {
  if (!(alpha > 0.0)) throw UsageError("laplace_prior: alpha must be positive");
  if (topics < 1) throw UsageError("laplace_prior: need at least one topic");
  const double t = static_cast<double>(topics);
  // Symmetric alpha: log(alpha) minus its mean is zero.
  const double var = (1.0 / alpha) * (1.0 - 2.0 / t) + (1.0 / (t * t)) * (t / alpha);
  return PriorParams{std::vector<double>(topics, 0.0), std::vector<double>(topics, var)};
}

double reconstruction_loss(std::span<const double> counts, std::span<const double> xhat) {
  if (counts.size() != xhat.size()) throw UsageError("reconstruction_loss: length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] != 0.0) loss -= counts[i] * std::log(std::max(xhat[i], kProbabilityFloor));
  }
  return loss;
}

double reconstruction_loss(const corpus::BowVector& bow, std::span<const double> xhat) {
  double loss = 0.0;
  for (const auto& [w, c] : bow.counts) loss -= c * std::log(std::max(xhat[w], kProbabilityFloor));
  return loss;
}

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    throw UsageError("triplet_loss: length mismatch");
  }
  return std::max(distance(anchor, positive) - distance(anchor, negative) + margin, 0.0);
}

double total_loss(const LossBreakdown& parts) {
  return (parts.reconstruction + parts.kl) + parts.lambda * parts.triplet;
}

LossBreakdown make_breakdown(double reconstruction, double kl, double triplet, double lambda) {
  LossBreakdown b{reconstruction, kl, triplet, lambda, 0.0};
  b.total = total_loss(b);
  return b;
}

TopicList get_topics(const TopicWordMatrix& words, const corpus::Vocabulary& vocab, std::size_t k) {
  const Matrix& beta = words.beta;
  if (static_cast<std::size_t>(beta.cols()) != vocab.size()) throw UsageError("get_topics: vocabulary size mismatch");
  if (k > vocab.size()) throw UsageError("get_topics: k exceeds vocabulary size");
  TopicList topics;
  std::vector<double> row(vocab.size());
  for (Eigen::Index t = 0; t < beta.rows(); ++t) {
    for (std::size_t v = 0; v < row.size(); ++v) row[v] = beta(t, static_cast<Eigen::Index>(v));
    std::vector<std::string> topic;
    for (std::size_t i : top_indices(row, k)) topic.push_back(vocab.word(i));
    topics.push_back(std::move(topic));
  }
  return topics;
}

namespace ops {

Var perturb_rows(Var theta, std::size_t s) {
  const Matrix& in = theta.value();
  Matrix out(in.rows(), in.cols());
  Matrix mask = Matrix::Ones(in.rows(), in.cols());
  Eigen::VectorXd mass(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    std::span<const double> row(in.row(r).data(), static_cast<std::size_t>(in.cols()));
    std::span<double> dst(out.row(r).data(), static_cast<std::size_t>(in.cols()));
    mass(r) = perturb_into(row, s, dst);
    for (std::size_t i : top_indices(row, s)) mask(r, static_cast<Eigen::Index>(i)) = 0.0;
  }
  const std::size_t id_in = theta.id();
  numcore::Tape& tape = theta.tape();
  const std::size_t id_out = tape.size();
  return tape.record(std::move(out), "perturb_rows", {theta},
                     [id_in, id_out, mask = std::move(mask), mass](numcore::Tape& t, const Matrix& g) {
                       const Matrix& y = t.value(id_out);
                       const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
                       Matrix d = (g.colwise() - dots).cwiseProduct(mask);
                       d = d.array().colwise() / mass.array();
                       t.accumulate(id_in, d);
                     });
}

Var perturb_logits(Var z, std::size_t s) {
  const Matrix& in = z.value();
  if (s < 1 || s >= static_cast<std::size_t>(in.cols())) throw UsageError("perturb_logits: need 1 <= S < T");
  Matrix out = Matrix::Zero(in.rows(), in.cols());
  Matrix mask = Matrix::Ones(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    std::span<const double> row(in.row(r).data(), static_cast<std::size_t>(in.cols()));
    for (std::size_t i : top_indices(row, s)) mask(r, static_cast<Eigen::Index>(i)) = 0.0;
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      if (mask(r, c) != 0.0) top = std::max(top, in(r, c));
    }
    double sum = 0.0;
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      if (mask(r, c) == 0.0) continue;
      out(r, c) = std::exp(in(r, c) - top);
      sum += out(r, c);
    }
    out.row(r) /= sum;
  }
  const std::size_t id_in = z.id();
  numcore::Tape& tape = z.tape();
  const std::size_t id_out = tape.size();
  return tape.record(std::move(out), "perturb_logits", {z},
                     [id_in, id_out, mask = std::move(mask)](numcore::Tape& t, const Matrix& g) {
                       const Matrix& y = t.value(id_out);
                       const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
                       // y is zero on the masked entries, so they get no gradient
                       Matrix d = (g.colwise() - dots).cwiseProduct(y);
                       t.accumulate(id_in, d);
                     });
}

Var reconstruction_rows(Var xhat, const Matrix& counts) {
  const Matrix& p = xhat.value();
  if (p.rows() != counts.rows() || p.cols() != counts.cols()) throw UsageError("reconstruction_rows: shape mismatch");
  const Matrix clamped = p.cwiseMax(kProbabilityFloor);
  Matrix out = -(counts.cwiseProduct(clamped.array().log().matrix())).rowwise().sum();
  const std::size_t id = xhat.id();
  return xhat.tape().record(std::move(out), "reconstruction_rows", {xhat}, [id, counts](numcore::Tape& t, const Matrix& g) {
    const Matrix& p = t.value(id);
    Matrix d(p.rows(), p.cols());
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        d(r, c) = p(r, c) > kProbabilityFloor ? -g(r, 0) * counts(r, c) / p(r, c) : 0.0;
      }
    }
    t.accumulate(id, d);
  });
}

Var kl_rows(Var mu, Var log_var, const PriorParams& prior) {
  const Matrix& m = mu.value();
  const Matrix& lv = log_var.value();
  const auto t_count = static_cast<Eigen::Index>(prior.mean.size());
  if (m.cols() != t_count || lv.cols() != t_count || m.rows() != lv.rows()) throw UsageError("kl_rows: shape mismatch");
  const Eigen::Map<const Eigen::RowVectorXd> mean0(prior.mean.data(), t_count);
  const Eigen::Map<const Eigen::RowVectorXd> var0(prior.var.data(), t_count);
  const Eigen::RowVectorXd inv_var0 = var0.cwiseInverse();
  const double log_det0 = var0.array().log().sum();

  const Matrix var = lv.array().exp().matrix();
  const Matrix diff = (-m).rowwise() + mean0;
  Matrix terms = (var + diff.cwiseAbs2()).array().rowwise() * inv_var0.array();
  Matrix out = 0.5 * ((terms.rowwise().sum().array() - static_cast<double>(t_count) + log_det0).matrix() -
                      lv.rowwise().sum());

  const std::size_t im = mu.id(), il = log_var.id();
  return mu.tape().record(std::move(out), "kl_rows", {mu, log_var},
                          [im, il, mean0 = Eigen::RowVectorXd(mean0), inv_var0](numcore::Tape& t, const Matrix& g) {
                            if (t.requires_grad(im)) {
                              Matrix d = (t.value(im).rowwise() - mean0).array().rowwise() * inv_var0.array();
                              t.accumulate(im, (d.array().colwise() * g.col(0).array()).matrix());
                            }
                            if (t.requires_grad(il)) {
                              Matrix var_ratio = t.value(il).array().exp().rowwise() * inv_var0.array();
                              Matrix d = 0.5 * (var_ratio.array() - 1.0);
                              t.accumulate(il, (d.array().colwise() * g.col(0).array()).matrix());
                            }
                          });
}

Var triplet_rows(Var anchor, const Matrix& positive, Var negative, double margin) {
  const Matrix& a = anchor.value();
  const Matrix& n = negative.value();
  if (a.rows() != positive.rows() || a.cols() != positive.cols() || a.rows() != n.rows() || a.cols() != n.cols()) {
    throw UsageError("triplet_rows: shape mismatch");
  }
  const Matrix diff_p = a - positive;
  const Matrix diff_n = a - n;
  const Eigen::VectorXd d_ap = diff_p.rowwise().norm();
  const Eigen::VectorXd d_an = diff_n.rowwise().norm();
  Matrix out(a.rows(), 1);
  for (Eigen::Index r = 0; r < a.rows(); ++r) out(r, 0) = std::max(d_ap(r) - d_an(r) + margin, 0.0);

  const std::size_t ia = anchor.id(), in = negative.id();
  const Eigen::VectorXd active = (out.col(0).array() > 0.0).cast<double>();
  return anchor.tape().record(
      std::move(out), "triplet_rows", {anchor, negative},
      [ia, in, diff_p, diff_n, d_ap, d_an, active](numcore::Tape& t, const Matrix& g) {
        Matrix unit_p = Matrix::Zero(diff_p.rows(), diff_p.cols());
        Matrix unit_n = Matrix::Zero(diff_n.rows(), diff_n.cols());
        for (Eigen::Index r = 0; r < diff_p.rows(); ++r) {
          const double w = g(r, 0) * active(r);
          if (w == 0.0) continue;
          if (d_ap(r) > 0.0) unit_p.row(r) = diff_p.row(r) * (w / d_ap(r));
          if (d_an(r) > 0.0) unit_n.row(r) = diff_n.row(r) * (w / d_an(r));
        }
        if (t.requires_grad(ia)) t.accumulate(ia, unit_p - unit_n);
        if (t.requires_grad(in)) t.accumulate(in, unit_n);
      });
}

}  // namespace ops
}  // namespace ctmneg::model
