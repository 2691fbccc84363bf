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


#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "ctmneg/model.hpp"

namespace ctmneg::model {
namespace {

constexpr std::string_view kMagic = "CTMN";

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TopicModel& model, const corpus::Vocabulary& vocab,
                     const EmbeddingSource& embeddings) {
  const ModelConfig& c = model.config();
  if (vocab.size() != c.vocab_size) throw UsageError("save_checkpoint: vocabulary does not match the model");
  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);

  w.put<std::uint64_t>(c.topics);
  w.put<std::uint64_t>(c.vocab_size);
  w.put<std::uint64_t>(c.context_dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.hidden.size()));
  for (std::size_t h : c.hidden) w.put<std::uint64_t>(h);
  w.put<std::uint64_t>(c.perturbations);
  w.put_f64(c.triplet_weight);
  w.put_f64(c.margin);
  w.put<std::uint64_t>(c.epochs);
  w.put<std::uint64_t>(c.batch_size);
  w.put<std::uint64_t>(c.seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.mode));
  w.put_f64(c.dropout);
  w.put<std::uint8_t>(c.batch_norm ? 1 : 0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.activation));
  w.put_f64(c.prior_alpha);
  w.put_f64(c.adam.lr);
  w.put_f64(c.adam.beta1);
  w.put_f64(c.adam.beta2);
  w.put_f64(c.adam.epsilon);

  w.put<std::uint64_t>(vocab.hash());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(vocab.size()));
  for (const std::string& word : vocab.words()) w.put_string(word);

  w.put<std::uint8_t>(embeddings.fallback ? 1 : 0);
  w.put<std::uint64_t>(embeddings.fallback_seed);
  w.put<std::uint64_t>(embeddings.dim);

  const auto tensors = model.tensors();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    w.put_string(name);
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m->rows()));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m->cols()));
    for (Eigen::Index i = 0; i < m->size(); ++i) w.put_f64(m->data()[i]);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw DataError("short write to checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r(bytes.data(), bytes.size(), "checkpoint");
  if (r.get_bytes(kMagic.size()) != kMagic) throw DataError("not a checkpoint file (bad magic bytes)");
  if (const auto v = r.get<std::uint32_t>(); v != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(v));
  }

  ModelConfig c;
  c.topics = r.get<std::uint64_t>();
  c.vocab_size = r.get<std::uint64_t>();
  c.context_dim = r.get<std::uint64_t>();
  c.hidden.resize(r.get<std::uint32_t>());
  for (std::size_t& h : c.hidden) h = r.get<std::uint64_t>();
  c.perturbations = r.get<std::uint64_t>();
  c.triplet_weight = r.get_f64();
  c.margin = r.get_f64();
  c.epochs = r.get<std::uint64_t>();
  c.batch_size = r.get<std::uint64_t>();
  c.seed = r.get<std::uint64_t>();
  const auto mode = r.get<std::uint32_t>();
  if (mode > static_cast<std::uint32_t>(Mode::prodlda)) throw DataError("checkpoint: unknown mode");
  c.mode = static_cast<Mode>(mode);
  c.dropout = r.get_f64();
  c.batch_norm = r.get<std::uint8_t>() != 0;
  const auto act = r.get<std::uint32_t>();
  if (act > static_cast<std::uint32_t>(numcore::Activation::identity)) throw DataError("checkpoint: unknown activation");
  c.activation = static_cast<numcore::Activation>(act);
  c.prior_alpha = r.get_f64();
  c.adam.lr = r.get_f64();
  c.adam.beta1 = r.get_f64();
  c.adam.beta2 = r.get_f64();
  c.adam.epsilon = r.get_f64();

  const auto vocab_hash = r.get<std::uint64_t>();
  std::vector<std::string> words(r.get<std::uint32_t>());
  for (std::string& word : words) word = r.get_string();
  corpus::Vocabulary vocab(std::move(words));
  if (vocab.hash() != vocab_hash) throw DataError("checkpoint: vocabulary hash mismatch");

  EmbeddingSource source;
  source.fallback = r.get<std::uint8_t>() != 0;
  source.fallback_seed = r.get<std::uint64_t>();
  source.dim = r.get<std::uint64_t>();

  numcore::Rng rng(c.seed);
  Checkpoint cp{TopicModel(c, rng), std::move(vocab), source};
  auto tensors = cp.model.tensors();
  if (r.get<std::uint32_t>() != tensors.size()) throw DataError("checkpoint: tensor count mismatch");
  for (auto& [name, m] : tensors) {
    if (r.get_string() != name) throw DataError("checkpoint: unexpected tensor, wanted " + name);
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (rows != static_cast<std::uint64_t>(m->rows()) || cols != static_cast<std::uint64_t>(m->cols())) {
      throw DataError("checkpoint: shape mismatch for " + name);
    }
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = r.get_f64();
  }
  if (r.remaining() != 0) throw DataError("checkpoint has trailing bytes");
  return cp;
}

}  // namespace ctmneg::model
