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


// Seeded generator for newsgroup-style corpora with known latent topics,
// used for desk-scale experiments when no real dataset is at hand.

#pragma once

#include <cstddef>
#include <cstdint>

#include "ctmneg/corpus.hpp"

namespace ctmneg::harness {

struct SyntheticCorpusSpec {
  std::size_t documents = 4000;
  std::size_t topics = 20;
  std::size_t words_per_topic = 90;
  // Fraction of a topic's word list borrowed from the next topic.
  double shared_fraction = 0.1;
  std::size_t background_words = 400;
  // Probability that a token comes from the background distribution.
  double background_rate = 0.25;
  double doc_topic_alpha = 0.1;
  std::size_t min_length = 30;
  std::size_t max_length = 120;
  std::size_t min_sentence = 6;
  std::size_t max_sentence = 14;
  // 0: each document is labelled with its dominant topic. Otherwise topics
  // are split into this many contiguous groups, every document draws only
  // from its group's topics and is labelled with the group.
  std::size_t classes = 0;
  std::uint64_t seed = 0;
};

corpus::Corpus synthetic_corpus(const SyntheticCorpusSpec& spec);

}  // namespace ctmneg::harness
