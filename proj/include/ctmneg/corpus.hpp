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


// Corpus ingestion: pre-tokenized documents, vocabulary, bag-of-words views,
// train/dev/test splits and contextual embedding files.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctmneg/errors.hpp"

namespace ctmneg::corpus {

using Document = std::vector<std::string>;

struct Corpus {
  std::vector<Document> documents;
  // One class name per document when present.
  std::optional<std::vector<std::string>> labels;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
};

// One document per line, whitespace-separated tokens. Labels, when given,
// are one per line and must match the document count.
Corpus load_corpus(const std::filesystem::path& path,
                   const std::optional<std::filesystem::path>& labels_path = std::nullopt);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
void write_labels(const std::filesystem::path& path, const std::vector<std::string>& labels);

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  std::optional<std::size_t> index_of(const std::string& word) const;
  const std::string& word(std::size_t i) const { return words_.at(i); }

  // FNV-1a over the ordered word list; identifies the vocabulary in
  // checkpoints.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::size_t kDefaultVocabularySize = 2000;

// The `max_size` most frequent tokens, ordered by descending count with
// ties broken lexicographically. Throws DataError when the corpus has no
// tokens.
Vocabulary build_vocabulary(const Corpus& corpus, std::size_t max_size = kDefaultVocabularySize);

struct BowVector {
  // (word index, count) pairs sorted by index; zero counts omitted.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;
  // Dense length-V vector counts / total.
  std::vector<double> l1_normalized;

  double total() const;
  std::vector<double> dense_counts(std::size_t vocab_size) const;
};

// Out-of-vocabulary tokens are ignored. Throws DataError("empty after
// filtering") when nothing is left.
BowVector to_bow(std::span<const std::string> document, const Vocabulary& vocab);

struct SplitSpec {
  double train = 0.7;
  double dev = 0.15;
  double test = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorpusSplit {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// Seeded shuffle, then contiguous slices of floor(ratio * N) documents for
// dev and test; the remainder goes to train.
CorpusSplit split(const Corpus& corpus, const SplitSpec& spec);
// The index permutation behind split(): train, dev, test index lists.
std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, const SplitSpec& spec);

struct ContextEmbedding {
  std::vector<float> vector;

  std::size_t dim() const { return vector.size(); }
};

// CTXE binary layout, little-endian: "CTXE", u32 version, u64 n_docs,
// u32 dim, then n_docs * dim float32 row-major.
inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

void write_embeddings(const std::filesystem::path& path, std::span<const ContextEmbedding> rows);
std::vector<ContextEmbedding> load_embeddings(const std::filesystem::path& path, std::size_t expected_docs);

inline constexpr std::size_t kDefaultFallbackDim = 128;

// Deterministic stand-in for transformer embeddings: a seeded random
// projection of the L1-normalized bag of words.
std::vector<ContextEmbedding> fallback_embeddings(const Corpus& corpus, const Vocabulary& vocab,
                                                  std::size_t dim, std::uint64_t seed);

// Corpus after dropping documents with no in-vocabulary tokens, together
// with their BoW views and (optionally) aligned embeddings.
struct PreparedCorpus {
  Corpus corpus;
  std::vector<BowVector> bows;
  std::vector<ContextEmbedding> embeddings;
  std::vector<std::size_t> kept_indices;  // positions in the original corpus
  std::size_t dropped = 0;
};

PreparedCorpus prepare(const Corpus& corpus, const Vocabulary& vocab,
                       std::vector<ContextEmbedding> embeddings = {});

}  // namespace ctmneg::corpus
