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


#include "ctmneg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace ctmneg::corpus {
namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open ") + what + " file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

Document tokenize(const std::string& line) {
  Document tokens;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) tokens.push_back(std::move(tok));
  return tokens;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, const std::optional<std::filesystem::path>& labels_path) {
  Corpus corpus;
  for (const std::string& line : read_lines(path, "corpus")) corpus.documents.push_back(tokenize(line));
  if (labels_path) {
    std::vector<std::string> labels = read_lines(*labels_path, "labels");
    if (labels.size() != corpus.documents.size()) {
      throw DataError("label/document count mismatch: " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(corpus.documents.size()) + " documents");
    }
    corpus.labels = std::move(labels);
  }
  return corpus;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path.string());
  for (const Document& doc : corpus.documents) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i > 0) out << ' ';
      out << doc[i];
    }
    out << '\n';
  }
}

void write_labels(const std::filesystem::path& path, const std::vector<std::string>& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write labels file: " + path.string());
  for (const std::string& l : labels) out << l << '\n';
}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) throw UsageError("vocabulary: duplicate word " + words_[i]);
  }
}

std::optional<std::size_t> Vocabulary::index_of(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const std::string& w : words_) {
    for (unsigned char c : w) mix(c);
    mix(0);
  }
  return h;
}

Vocabulary build_vocabulary(const Corpus& corpus, std::size_t max_size) {
  if (max_size < 1) throw UsageError("build_vocabulary: max_size must be >= 1");
  std::map<std::string, std::size_t> freq;
  for (const Document& doc : corpus.documents) {
    for (const std::string& tok : doc) ++freq[tok];
  }
  if (freq.empty()) throw DataError("build_vocabulary: corpus has no tokens");

  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  // std::map iteration is already lexicographic; a stable sort on count keeps it
  // as the tie-break.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);

  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, _] : ranked) words.push_back(std::move(w));
  return Vocabulary(std::move(words));
}

double BowVector::total() const {
  double t = 0.0;
  for (const auto& [_, c] : counts) t += c;
  return t;
}

std::vector<double> BowVector::dense_counts(std::size_t vocab_size) const {
  std::vector<double> dense(vocab_size, 0.0);
  for (const auto& [i, c] : counts) dense.at(i) = c;
  return dense;
}

BowVector to_bow(std::span<const std::string> document, const Vocabulary& vocab) {
  std::map<std::uint32_t, std::uint32_t> counts;
  for (const std::string& tok : document) {
    if (auto idx = vocab.index_of(tok)) ++counts[static_cast<std::uint32_t>(*idx)];
  }
  if (counts.empty()) throw DataError("document empty after filtering");

  BowVector bow;
  bow.counts.assign(counts.begin(), counts.end());
  bow.l1_normalized.assign(vocab.size(), 0.0);
  const double total = bow.total();
  for (const auto& [i, c] : bow.counts) bow.l1_normalized[i] = c / total;
  return bow;
}

void SplitSpec::validate() const {
  if (!(train > 0.0 && dev > 0.0 && test > 0.0)) throw UsageError("split ratios must be positive");
  if (std::abs(train + dev + test - 1.0) > 1e-9) throw UsageError("split ratios must sum to 1");
}

std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  // The small epsilon keeps e.g. 0.15 * 100 from flooring to 14.
  auto portion = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_dev = portion(spec.dev);
  const std::size_t n_test = portion(spec.test);
  const std::size_t n_train = n - n_dev - n_test;
  if (n_train == 0 || n_dev == 0 || n_test == 0) {
    throw DataError("split: " + std::to_string(n) + " documents are too few for three non-empty splits");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::array<std::vector<std::size_t>, 3> parts;
  parts[0].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  parts[1].assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                  order.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  parts[2].assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), order.end());
  return parts;
}

CorpusSplit split(const Corpus& corpus, const SplitSpec& spec) {
  const auto parts = split_indices(corpus.size(), spec);
  auto take = [&corpus](const std::vector<std::size_t>& idx) {
    Corpus out;
    out.documents.reserve(idx.size());
    if (corpus.labels) out.labels.emplace();
    for (std::size_t i : idx) {
      out.documents.push_back(corpus.documents[i]);
      if (corpus.labels) out.labels->push_back((*corpus.labels)[i]);
    }
    return out;
  };
  return CorpusSplit{take(parts[0]), take(parts[1]), take(parts[2])};
}

PreparedCorpus prepare(const Corpus& corpus, const Vocabulary& vocab, std::vector<ContextEmbedding> embeddings) {
  if (!embeddings.empty() && embeddings.size() != corpus.size()) {
    throw DataError("embedding/document count mismatch: " + std::to_string(embeddings.size()) + " rows for " +
                    std::to_string(corpus.size()) + " documents");
  }
  PreparedCorpus out;
  if (corpus.labels) out.corpus.labels.emplace();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    BowVector bow;
    try {
      bow = to_bow(corpus.documents[i], vocab);
    } catch (const DataError&) {
      ++out.dropped;
      continue;
    }
    out.corpus.documents.push_back(corpus.documents[i]);
    if (corpus.labels) out.corpus.labels->push_back((*corpus.labels)[i]);
    if (!embeddings.empty()) out.embeddings.push_back(std::move(embeddings[i]));
    out.bows.push_back(std::move(bow));
    out.kept_indices.push_back(i);
  }
  return out;
}

}  // namespace ctmneg::corpus
