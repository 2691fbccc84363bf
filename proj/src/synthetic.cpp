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


#include "ctmneg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace ctmneg::harness {
namespace {

std::string word_name(const char* prefix, std::size_t group, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%02zuw%03zu", prefix, group, index);
  return buf;
}

std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
  return w;
}

}  // namespace

corpus::Corpus synthetic_corpus(const SyntheticCorpusSpec& spec) {
  if (spec.topics < 2 || spec.words_per_topic < 2) throw UsageError("synthetic_corpus: too few topics or words");
  if (spec.min_length < 1 || spec.max_length < spec.min_length) throw UsageError("synthetic_corpus: bad lengths");
  if (spec.min_sentence < 1 || spec.max_sentence < spec.min_sentence) throw UsageError("synthetic_corpus: bad sentences");
  if (spec.classes == 1 || spec.classes > spec.topics) throw UsageError("synthetic_corpus: bad class count");

  std::mt19937_64 rng(spec.seed);

  // Topic word lists: own words, with a slice borrowed from the next topic.
  const auto shared = static_cast<std::size_t>(spec.shared_fraction * static_cast<double>(spec.words_per_topic));
  std::vector<std::vector<std::string>> topic_words(spec.topics);
  for (std::size_t t = 0; t < spec.topics; ++t) {
    for (std::size_t i = 0; i < spec.words_per_topic; ++i) topic_words[t].push_back(word_name("t", t, i));
  }
  for (std::size_t t = 0; t < spec.topics; ++t) {
    const auto& next = topic_words[(t + 1) % spec.topics];
    // Borrowed words sit mid-rank so topics stay distinguishable at the top.
    for (std::size_t i = 0; i < shared; ++i) {
      const std::size_t pos = std::min(topic_words[t].size(), 10 + 3 * i);
      topic_words[t].insert(topic_words[t].begin() + static_cast<std::ptrdiff_t>(pos), next[i]);
    }
  }
  std::vector<std::string> background;
  for (std::size_t i = 0; i < spec.background_words; ++i) background.push_back(word_name("bg", i / 1000, i % 1000));

  std::vector<std::discrete_distribution<std::size_t>> topic_dist;
  for (const auto& words : topic_words) {
    const auto w = zipf_weights(words.size(), 1.0);
    topic_dist.emplace_back(w.begin(), w.end());
  }
  const auto bg_w = zipf_weights(std::max<std::size_t>(background.size(), 1), 1.1);
  std::discrete_distribution<std::size_t> bg_dist(bg_w.begin(), bg_w.end());

  const std::size_t groups = spec.classes;
  const std::size_t per_group = groups > 0 ? spec.topics / groups : spec.topics;
  std::gamma_distribution<double> gamma(spec.doc_topic_alpha, 1.0);
  std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);
  std::uniform_int_distribution<std::size_t> sentence(spec.min_sentence, spec.max_sentence);
  std::uniform_int_distribution<std::size_t> pick_group(0, groups > 0 ? groups - 1 : 0);
  std::bernoulli_distribution from_background(spec.background_rate);

  corpus::Corpus out;
  out.labels.emplace();
  for (std::size_t d = 0; d < spec.documents; ++d) {
    const std::size_t group = groups > 0 ? pick_group(rng) : 0;
    const std::size_t first = group * per_group;
    const std::size_t count = groups > 0 ? (group + 1 == groups ? spec.topics - first : per_group) : spec.topics;

    std::vector<double> theta(count);
    double sum = 0.0;
    for (double& x : theta) {
      x = gamma(rng);
      sum += x;
    }
    if (sum <= 0.0) {
      std::fill(theta.begin(), theta.end(), 0.0);
      theta[0] = 1.0;
    }
    std::discrete_distribution<std::size_t> mix(theta.begin(), theta.end());

    corpus::Document doc;
    const std::size_t len = length(rng);
    while (doc.size() < len) {
      const std::size_t topic = first + mix(rng);
      const std::size_t n = std::min(sentence(rng), len - doc.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (!background.empty() && from_background(rng)) {
          doc.push_back(background[bg_dist(rng)]);
        } else {
          doc.push_back(topic_words[topic][topic_dist[topic](rng)]);
        }
      }
    }
    out.documents.push_back(std::move(doc));

    if (groups > 0) {
      out.labels->push_back("class" + std::to_string(group));
    } else {
      const auto top = static_cast<std::size_t>(std::max_element(theta.begin(), theta.end()) - theta.begin());
      out.labels->push_back("group" + std::to_string(first + top));
    }
  }
  return out;
}

}  // namespace ctmneg::harness
