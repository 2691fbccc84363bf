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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "ctmneg/corpus.hpp"
#include "ctmneg/model.hpp"
#include "ctmneg/tape.hpp"
#include "toy.hpp"

using namespace ctmneg;
using namespace ctmneg::model;
namespace fs = std::filesystem;

namespace {

std::vector<double> dirichlet(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double sum = 0;
  for (double& x : v) sum += (x = e(rng));
  for (double& x : v) x /= sum;
  return v;
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Two disjoint word clusters over V=8.
struct ClusterData {
  corpus::Vocabulary vocab;
  corpus::PreparedCorpus data;
  std::vector<int> cluster;
};

ClusterData cluster_corpus(std::size_t per_cluster, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 3);
  corpus::Corpus c;
  ClusterData out;
  for (std::size_t i = 0; i < 2 * per_cluster; ++i) {
    const int k = static_cast<int>(i % 2);
    corpus::Document d;
    for (int w = 0; w < 10; ++w) d.push_back("w" + std::to_string(4 * k + pick(rng)));
    c.documents.push_back(d);
    out.cluster.push_back(k);
  }
  std::vector<std::string> words;
  for (int i = 0; i < 8; ++i) words.push_back("w" + std::to_string(i));
  out.vocab = corpus::Vocabulary(words);
  out.data = corpus::prepare(c, out.vocab);
  out.data.embeddings = corpus::fallback_embeddings(out.data.corpus, out.vocab, 6, 1);
  return out;
}

ModelConfig cluster_config(Mode mode, std::size_t epochs, std::uint64_t seed) {
  ModelConfig c;
  c.topics = 2;
  c.vocab_size = 8;
  c.context_dim = 6;
  c.mode = mode;
  c.perturbations = 1;
  c.triplet_weight = mode == Mode::ctm_neg ? 0.5 : 0.0;
  c.epochs = epochs;
  c.batch_size = 16;
  c.hidden = {20, 20};
  c.seed = seed;
  return c;
}

bool same_tensors(const TopicModel& a, const TopicModel& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    const Matrix& x = *ta[i].second;
    const Matrix& y = *tb[i].second;
    if (ta[i].first != tb[i].first || x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("reparameterize") {
  const PosteriorParams q{{0.0, 0.0}, {0.0, 0.0}};
  const std::vector<double> eps{1.0, -1.0};
  CHECK(reparameterize(q, eps) == std::vector<double>{1.0, -1.0});
  const PosteriorParams tight{{0.3, -2.0}, {std::log(1e-12), std::log(1e-12)}};
  numcore::Rng rng(1);
  const auto z = reparameterize(tight, rng);
  CHECK(std::abs(z[0] - 0.3) < 1e-5);
  CHECK(std::abs(z[1] + 2.0) < 1e-5);

  // sample mean within 3 sigma / sqrt(N)
  const PosteriorParams wide{{0.5, -1.0, 2.0}, {std::log(4.0), 0.0, std::log(0.25)}};
  const int n = 100000;
  std::vector<double> sum(3, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto s = reparameterize(wide, rng);
    for (int k = 0; k < 3; ++k) sum[static_cast<std::size_t>(k)] += s[static_cast<std::size_t>(k)];
  }
  const double sd[] = {2.0, 1.0, 0.5};
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(sum[k] / n - wide.mu[k]) < 3 * sd[k] / std::sqrt(double(n)));
  }
}

TEST_CASE("decode") {
  const TopicWordMatrix flat{Matrix::Zero(1, 2)};
  const auto a = decode(TopicDistribution{{1.0}}, flat);
  CHECK(a[0] == doctest::Approx(0.5));
  Matrix beta(2, 3);
  beta << 1, 2, 3, -1, 0, 4;
  const auto b = decode(TopicDistribution{{0.0, 1.0}}, TopicWordMatrix{beta});
  const auto expect = numcore::softmax(std::vector<double>{-1, 0, 4});
  for (int i = 0; i < 3; ++i) CHECK(b[static_cast<std::size_t>(i)] == doctest::Approx(expect[static_cast<std::size_t>(i)]));
  Matrix sym(2, 2);
  sym << 2, 0, 0, 2;
  const auto c = decode(TopicDistribution{{0.5, 0.5}}, TopicWordMatrix{sym});
  CHECK(c[0] == doctest::Approx(0.5));
  CHECK(c[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(decode(TopicDistribution{{0.5, 0.5}}, flat), UsageError);
}

TEST_CASE("perturb_theta examples") {
  auto run = [](std::vector<double> t, std::size_t s) { return perturb_theta(TopicDistribution{t}, s).theta; };
  const auto a = run({0.5, 0.3, 0.2}, 1);
  CHECK(a[0] == 0.0);
  CHECK(a[1] == doctest::Approx(0.6));
  CHECK(a[2] == doctest::Approx(0.4));
  CHECK(run({0.25, 0.25, 0.25, 0.25}, 2) == std::vector<double>{0, 0, 0.5, 0.5});
  const auto c = run({0.7, 0.2, 0.1}, 2);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 0.0);
  CHECK(c[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(run({0.5, 0.5}, 2), UsageError);
  CHECK_THROWS_AS(run({0.5, 0.5}, 0), UsageError);
  try {
    run({1.0, 0.0, 0.0}, 1);
    FAIL("expected an error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("degenerate perturbation") != std::string::npos);
  }
}

TEST_CASE("perturbation contract on random simplex vectors") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> len(4, 12);
  for (int trial = 0; trial < 300; ++trial) {
    const auto theta = dirichlet(len(rng), rng);
    for (std::size_t s : {1u, 2u, 3u}) {
      const auto out = perturb_theta(TopicDistribution{theta}, s).theta;
      std::vector<std::size_t> order(theta.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return theta[i] > theta[j]; });
      double sum = 0;
      for (std::size_t r = 0; r < theta.size(); ++r) {
        const std::size_t i = order[r];
        if (r < s) {
          CHECK(out[i] == 0.0);
        } else {
          CHECK(out[i] > 0.0);
        }
        sum += out[i];
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("the logit form of the perturbation matches the simplex form") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 2.0);
  numcore::Tape tape;
  Matrix z(6, 7);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
  Matrix theta = z;
  numcore::softmax_rows_inplace(theta);
  for (std::size_t s : {1u, 2u, 3u}) {
    const Matrix a = ops::perturb_rows(tape.constant(theta), s).value();
    const Matrix b = ops::perturb_logits(tape.constant(z), s).value();
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
  // peaked rows where the simplex form would have no mass left
  Matrix peaked(1, 3);
  peaked << 0.0, -60.0, -61.0;
  const Matrix p = ops::perturb_logits(tape.constant(peaked), 1).value();
  CHECK(p(0, 0) == 0.0);
  CHECK(p(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("kl_divergence") {
  const PriorParams std_normal{{0.0}, {1.0}};
  CHECK(kl_divergence(PosteriorParams{{0.0}, {0.0}}, std_normal) == 0.0);
  CHECK(kl_divergence(PosteriorParams{{1.0}, {0.0}}, std_normal) == doctest::Approx(0.5));
  const double expected = 0.5 * (4.0 - 1.0 - std::log(4.0));
  const PosteriorParams wide{{0.0}, {std::log(4.0)}};
  CHECK(kl_divergence(wide, std_normal) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.80685).epsilon(1e-5));
  // Monte-Carlo E_q[ln q - ln p]
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0.0, 2.0);
  double mc = 0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double x = nd(rng);
    mc += (-0.5 * std::log(2 * M_PI * 4) - x * x / 8) - (-0.5 * std::log(2 * M_PI) - x * x / 2);
  }
  CHECK(std::abs(mc / n - expected) / expected < 0.01);
  CHECK_THROWS_AS(kl_divergence(PosteriorParams{{0.0}, {0.0}}, PriorParams{{0.0}, {0.0}}), NumericalError);

  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    PosteriorParams q{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}};
    const PriorParams p = laplace_prior(3, 0.5);
    CHECK(kl_divergence(q, p) >= 0.0);
    CHECK(kl_divergence(PosteriorParams{p.mean, {std::log(p.var[0]), std::log(p.var[1]), std::log(p.var[2])}}, p) ==
          doctest::Approx(0.0));
  }
}

TEST_CASE("laplace_prior") {
  const auto p2 = laplace_prior(2, 1.0);
  CHECK(p2.mean == std::vector<double>{0.0, 0.0});
  CHECK(p2.var[0] == doctest::Approx(0.5));
  const auto p10 = laplace_prior(10, 1.0);
  for (double v : p10.var) CHECK(v == doctest::Approx(0.9));
  const auto p20 = laplace_prior(20, 1.0 / 20);
  CHECK(p20.var[0] == doctest::Approx(19.0));
  for (double m : p20.mean) CHECK(m == 0.0);
  CHECK_THROWS_AS(laplace_prior(3, 0.0), UsageError);
}

TEST_CASE("reconstruction, triplet and total loss") {
  CHECK(reconstruction_loss(std::vector<double>{1, 1, 1, 1}, std::vector<double>{0.25, 0.25, 0.25, 0.25}) ==
        doctest::Approx(4 * std::log(4.0)));
  CHECK(reconstruction_loss(std::vector<double>{1, 0}, std::vector<double>{1, 0}) == doctest::Approx(0.0));
  CHECK(reconstruction_loss(std::vector<double>{0, 1}, std::vector<double>{1, 0}) ==
        doctest::Approx(-std::log(1e-10)));
  CHECK(reconstruction_loss(std::vector<double>{2, 0}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(2 * std::log(2.0)));

  const std::vector<double> a{0, 0}, far{2, 0}, unit{1, 0}, half{0.5, 0}, fifth{0, 0.2};
  CHECK(triplet_loss(a, a, far, 1.0) == 0.0);
  CHECK(triplet_loss(a, unit, std::vector<double>{0, 1}, 1.0) == doctest::Approx(1.0));
  CHECK(triplet_loss(a, half, fifth, 1.0) == doctest::Approx(1.3));
  std::mt19937_64 rng(40);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = dirichlet(6, rng), y = dirichlet(6, rng), z = dirichlet(6, rng);
    const double m = 0.1 * trial / 10;
    CHECK(triplet_loss(x, y, z, m) == doctest::Approx(std::max(dist(x, y) - dist(x, z) + m, 0.0)).epsilon(1e-12));
  }

  CHECK(total_loss(make_breakdown(1, 2, 4, 0.5)) == 5.0);
  CHECK(total_loss(make_breakdown(1, 2, 4, 0.0)) == 3.0);
  CHECK(total_loss(make_breakdown(1, 2, 0, 0.9)) == 3.0);
}

TEST_CASE("get_topics") {
  const corpus::Vocabulary abc({"a", "b", "c"});
  Matrix beta(1, 3);
  beta << 0.1, 0.9, 0.5;
  CHECK(get_topics(TopicWordMatrix{beta}, abc, 2)[0] == std::vector<std::string>{"b", "c"});
  beta << 0.5, 0.2, 0.5;
  CHECK(get_topics(TopicWordMatrix{beta}, abc, 2)[0] == std::vector<std::string>{"a", "c"});
  auto all = get_topics(TopicWordMatrix{beta}, abc, 3)[0];
  std::sort(all.begin(), all.end());
  CHECK(all == abc.words());
  CHECK_THROWS_AS(get_topics(TopicWordMatrix{beta}, abc, 4), UsageError);
}

TEST_CASE("config validation") {
  ModelConfig c = toy::config(8, 3, 4);
  CHECK_NOTHROW(c.validate());
  auto bad = [&](auto edit) {
    ModelConfig x = c;
    edit(x);
    CHECK_THROWS_AS(x.validate(), UsageError);
  };
  bad([](ModelConfig& x) { x.topics = 1; });
  bad([](ModelConfig& x) { x.perturbations = 3; });
  bad([](ModelConfig& x) { x.perturbations = 0; });
  bad([](ModelConfig& x) { x.triplet_weight = -1; });
  bad([](ModelConfig& x) { x.margin = 0; });
  bad([](ModelConfig& x) { x.mode = Mode::ctm; });  // lambda must be 0
  bad([](ModelConfig& x) { x.batch_size = 1; });
  bad([](ModelConfig& x) { x.dropout = 1.0; });
  bad([](ModelConfig& x) { x.context_dim = 0; });
  CHECK(parse_mode("prodlda") == Mode::prodlda);
  CHECK_THROWS_AS(parse_mode("lda"), UsageError);
  CHECK(c.effective_alpha() == doctest::Approx(1.0 / 3));
  CHECK(c.encoder_input_dim() == 16);
}

TEST_CASE("encoder") {
  ModelConfig c = toy::config(8, 3, 4);
  c.batch_norm = false;
  numcore::Rng rng(2);
  TopicModel m(c, rng);
  const auto b = toy::batch(5, 8, 4, 3);
  auto [mu, lv] = m.encode_batch(b.bow, b.context);
  CHECK(mu.rows() == 5);
  CHECK(mu.cols() == 3);
  CHECK(lv.cols() == 3);
  auto [mu2, lv2] = m.encode_batch(b.bow, b.context);
  CHECK(mu == mu2);
  CHECK_THROWS_AS(m.encode_batch(b.bow.leftCols(7), b.context), UsageError);
  CHECK_THROWS_AS(m.encode_batch(b.bow, b.context.leftCols(3)), UsageError);
  for (auto& [name, t] : m.tensors()) t->setZero();
  CHECK(m.encode_batch(b.bow, b.context).first.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient check of the full objective") {
  const auto b = toy::batch(5, 8, 4, 1);
  const auto r = toy::gradient_check(toy::config(8, 3, 4), b);
  INFO("worst entry " << r.worst);
  CHECK(r.entries > 1000);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("gradient check on random small models") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> v_dist(3, 10), t_dist(2, 4), n_dist(2, 8), d_dist(1, 5);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t v = v_dist(rng), t = t_dist(rng), n = n_dist(rng), d = d_dist(rng);
    ModelConfig c = toy::config(v, t, d);
    c.hidden = {7, 5};
    c.seed = trial;
    c.perturbations = 1 + static_cast<std::size_t>(trial) % (t - 1);
    c.mode = trial % 3 == 0 ? Mode::ctm_neg : (trial % 3 == 1 ? Mode::ctm : Mode::prodlda);
    if (c.mode != Mode::ctm_neg) c.triplet_weight = 0.0;
    const auto r = toy::gradient_check(c, toy::batch(n, v, d, 100 + static_cast<std::uint64_t>(trial)));
    INFO("V=" << v << " T=" << t << " n=" << n << " mode=" << to_string(c.mode) << " worst " << r.worst);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("loss breakdown adds up exactly") {
  ModelConfig c = toy::config(8, 3, 4);
  numcore::Rng rng(4);
  TopicModel m(c, rng);
  const auto b = toy::batch(5, 8, 4, 2);
  numcore::Tape tape;
  const auto g = m.training_loss(tape, b, m.sample_noise(5, rng));
  CHECK(g.parts.total == g.parts.reconstruction + g.parts.kl + c.triplet_weight * g.parts.triplet);
  CHECK(g.loss.value()(0, 0) == doctest::Approx(g.parts.total).epsilon(1e-14));
}

TEST_CASE("fit on two word clusters") {
  const ClusterData d = cluster_corpus(60, 3);
  const FitResult r = fit(d.data, cluster_config(Mode::ctm_neg, 50, 1));
  REQUIRE(r.trace.size() == 50);
  CHECK(r.trace.back().total < r.trace.front().total);
  for (const auto& e : r.trace) {
    CHECK(e.total == e.reconstruction + e.kl + e.lambda * e.triplet);
  }

  SUBCASE("same seed, same parameters") {
    const FitResult again = fit(d.data, cluster_config(Mode::ctm_neg, 50, 1));
    CHECK(same_tensors(r.model, again.model));
  }
  SUBCASE("inferred theta separates the clusters") {
    const auto theta = r.model.infer_theta(d.data);
    std::map<int, std::map<std::size_t, int>> votes;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double sum = 0;
      for (double x : theta[i].theta) {
        CHECK(x >= 0.0);
        sum += x;
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
      const auto& t = theta[i].theta;
      ++votes[d.cluster[i]][static_cast<std::size_t>(std::max_element(t.begin(), t.end()) - t.begin())];
    }
    std::size_t major[2];
    for (int k = 0; k < 2; ++k) {
      int best = 0, total = 0;
      for (auto [topic, count] : votes[k]) {
        total += count;
        if (count > best) {
          best = count;
          major[k] = topic;
        }
      }
      CHECK(static_cast<double>(best) / total >= 0.9);
    }
    CHECK(major[0] != major[1]);
    const auto single = r.model.infer_theta(d.data.bows[0], &d.data.embeddings[0]);
    const auto single2 = r.model.infer_theta(d.data.bows[0], &d.data.embeddings[0]);
    CHECK(single.theta == single2.theta);
    for (std::size_t k = 0; k < 2; ++k) CHECK(single.theta[k] == doctest::Approx(theta[0].theta[k]).epsilon(1e-12));
  }
}

TEST_CASE("lambda = 0 reduces ctm_neg to ctm bitwise") {
  const ClusterData d = cluster_corpus(40, 5);
  ModelConfig neg = cluster_config(Mode::ctm_neg, 8, 9);
  neg.triplet_weight = 0.0;
  neg.perturbations = 1;
  const FitResult a = fit(d.data, neg);
  const FitResult b = fit(d.data, cluster_config(Mode::ctm, 8, 9));
  CHECK(same_tensors(a.model, b.model));
  for (std::size_t e = 0; e < a.trace.size(); ++e) {
    CHECK(a.trace[e].reconstruction == b.trace[e].reconstruction);
    CHECK(a.trace[e].kl == b.trace[e].kl);
  }
  ModelConfig on = neg;
  on.triplet_weight = 0.5;
  CHECK(!same_tensors(fit(d.data, on).model, b.model));
}

TEST_CASE("training edge cases") {
  const ClusterData d = cluster_corpus(40, 6);
  SUBCASE("a singleton tail batch is merged") {
    corpus::PreparedCorpus odd = d.data;
    odd.bows.resize(65);
    odd.embeddings.resize(65);
    ModelConfig c = cluster_config(Mode::ctm_neg, 1, 2);
    c.batch_size = 16;
    CHECK_NOTHROW(fit(odd, c));
  }
  SUBCASE("prodlda ignores embeddings") {
    corpus::PreparedCorpus bare = d.data;
    bare.embeddings.clear();
    ModelConfig c = cluster_config(Mode::prodlda, 2, 2);
    CHECK(fit(bare, c).trace.size() == 2);
  }
  SUBCASE("non-finite training aborts with a diagnostic") {
    ModelConfig c = cluster_config(Mode::ctm, 3, 2);
    c.adam.lr = std::numeric_limits<double>::infinity();
    try {
      fit(d.data, c);
      FAIL("expected an error");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("training aborted at epoch") != std::string::npos);
    }
  }
  SUBCASE("misaligned inputs") {
    corpus::PreparedCorpus bad = d.data;
    bad.embeddings.pop_back();
    CHECK_THROWS_AS(fit(bad, cluster_config(Mode::ctm, 1, 1)), DataError);
    ModelConfig wrong_v = cluster_config(Mode::ctm, 1, 1);
    wrong_v.vocab_size = 9;
    CHECK_THROWS_AS(fit(d.data, wrong_v), DataError);
  }
}

TEST_CASE("checkpoints and loss traces") {
  const fs::path dir = fs::temp_directory_path() / ("ctmneg_model_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const ClusterData d = cluster_corpus(30, 7);
  const FitResult r = fit(d.data, cluster_config(Mode::ctm_neg, 3, 4));
  save_checkpoint(dir / "m.bin", r.model, d.vocab, EmbeddingSource{true, 1, 6});
  const Checkpoint back = load_checkpoint(dir / "m.bin");
  CHECK(same_tensors(back.model, r.model));
  CHECK(back.vocab.words() == d.vocab.words());
  CHECK(back.embeddings.fallback);
  CHECK(back.embeddings.fallback_seed == 1);
  CHECK(back.embeddings.dim == 6);
  CHECK(back.model.config().triplet_weight == 0.5);
  CHECK(back.model.config().mode == Mode::ctm_neg);
  CHECK(back.model.infer_theta(d.data)[3].theta == r.model.infer_theta(d.data)[3].theta);

  std::string bytes;
  {
    std::ifstream in(dir / "m.bin", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  };
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(load_checkpoint(write("a.bin", magic)), DataError);
  CHECK_THROWS_AS(load_checkpoint(write("b.bin", bytes.substr(0, bytes.size() / 2))), DataError);
  CHECK_THROWS_AS(load_checkpoint(write("c.bin", bytes + "x")), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), DataError);

  write_loss_trace_csv(dir / "t.csv", r.trace);
  std::ifstream in(dir / "t.csv");
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "epoch,L_RL,L_KL,L_TL,L");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  fs::remove_all(dir);
}
