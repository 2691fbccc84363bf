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


#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "binary_io.hpp"
#include "ctmneg/corpus.hpp"

namespace ctmneg::corpus {
namespace {

constexpr std::string_view kMagic = "CTXE";

}  // namespace

void write_embeddings(const std::filesystem::path& path, std::span<const ContextEmbedding> rows) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().dim();
  detail::ByteWriter w;
  w.reserve(20 + rows.size() * dim * 4);
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kEmbeddingFormatVersion);
  w.put<std::uint64_t>(rows.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dim));
  for (const ContextEmbedding& row : rows) {
    if (row.dim() != dim) throw UsageError("write_embeddings: rows have different dimensions");
    for (float f : row.vector) w.put_f32(f);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embedding file: " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw DataError("short write to embedding file: " + path.string());
}

std::vector<ContextEmbedding> load_embeddings(const std::filesystem::path& path, std::size_t expected_docs) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r(bytes.data(), bytes.size(), "embedding file");
  if (r.get_bytes(kMagic.size()) != kMagic) throw DataError("embedding file has bad magic bytes (expected CTXE)");
  const auto version = r.get<std::uint32_t>();
  if (version != kEmbeddingFormatVersion) {
    throw DataError("unsupported embedding file version " + std::to_string(version));
  }
  const auto n_docs = r.get<std::uint64_t>();
  const auto dim = r.get<std::uint32_t>();
  if (n_docs != expected_docs) {
    throw DataError("embedding/document count mismatch: file has " + std::to_string(n_docs) + " rows, corpus has " +
                    std::to_string(expected_docs) + " documents");
  }
  if (dim != 0 && n_docs > r.remaining() / (std::size_t{4} * dim)) throw DataError("embedding file truncated");
  if (r.remaining() != static_cast<std::size_t>(n_docs) * dim * 4) throw DataError("embedding file has trailing bytes");

  std::vector<ContextEmbedding> rows(n_docs);
  for (ContextEmbedding& row : rows) {
    row.vector.resize(dim);
    for (float& f : row.vector) {
      f = r.get_f32();
      if (!std::isfinite(f)) throw DataError("embedding file contains non-finite values");
    }
  }
  return rows;
}

std::vector<ContextEmbedding> fallback_embeddings(const Corpus& corpus, const Vocabulary& vocab, std::size_t dim,
                                                  std::uint64_t seed) {
  if (dim < 1) throw UsageError("fallback_embeddings: dim must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> projection(vocab.size() * dim);
  for (double& r : projection) r = normal(rng) * norm;

  std::vector<ContextEmbedding> out;
  out.reserve(corpus.size());
  std::vector<double> acc(dim);
  for (const Document& doc : corpus.documents) {
    const BowVector bow = to_bow(doc, vocab);
    const double total = bow.total();
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& [w, c] : bow.counts) {
      const double weight = c / total;
      const double* row = projection.data() + static_cast<std::size_t>(w) * dim;
      for (std::size_t j = 0; j < dim; ++j) acc[j] += weight * row[j];
    }
    ContextEmbedding e;
    e.vector.assign(acc.begin(), acc.end());
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace ctmneg::corpus
