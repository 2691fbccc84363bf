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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "ctmneg/corpus.hpp"
#include "ctmneg/errors.hpp"

using namespace ctmneg;
using namespace ctmneg::corpus;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ctmneg_corpus_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name, const std::string& content) const {
    std::ofstream(path / name, std::ios::binary) << content;
    return path / name;
  }
};

Corpus docs(std::initializer_list<std::initializer_list<const char*>> rows) {
  Corpus c;
  for (auto r : rows) {
    Document d;
    for (const char* w : r) d.emplace_back(w);
    c.documents.push_back(d);
  }
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("load_corpus") {
  TempDir tmp;
  SUBCASE("two documents") {
    const Corpus c = load_corpus(tmp.file("c.txt", "a b\nc d\n"));
    REQUIRE(c.size() == 2);
    CHECK(c.documents[0] == Document{"a", "b"});
    CHECK(c.documents[1] == Document{"c", "d"});
    CHECK(!c.labels);
  }
  SUBCASE("empty file") {
    CHECK(load_corpus(tmp.file("e.txt", "")).empty());
  }
  SUBCASE("label count mismatch") {
    const auto c = tmp.file("c.txt", "a b\nc d\n");
    const auto l = tmp.file("l.txt", "x\ny\nz\n");
    try {
      load_corpus(c, l);
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("label/document count mismatch") != std::string::npos);
    }
  }
  SUBCASE("labels attach") {
    const Corpus c = load_corpus(tmp.file("c.txt", "a b\nc d\n"), tmp.file("l.txt", "x\ny\n"));
    CHECK(*c.labels == std::vector<std::string>{"x", "y"});
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_corpus(tmp.path / "nope.txt"), DataError);
  }
  SUBCASE("write then load") {
    Corpus c = docs({{"p", "q"}, {"r"}});
    c.labels = std::vector<std::string>{"one", "two"};
    write_corpus(tmp.path / "w.txt", c);
    write_labels(tmp.path / "wl.txt", *c.labels);
    const Corpus back = load_corpus(tmp.path / "w.txt", tmp.path / "wl.txt");
    CHECK(back.documents == c.documents);
    CHECK(*back.labels == *c.labels);
  }
}

TEST_CASE("build_vocabulary") {
  const Vocabulary v = build_vocabulary(docs({{"a", "a", "b"}, {"b", "c"}}), 2);
  CHECK(v.words() == std::vector<std::string>{"a", "b"});
  CHECK(build_vocabulary(docs({{"x", "y", "z"}}), 10).size() == 3);
  CHECK(build_vocabulary(docs({{"q", "q", "q"}}), 1).words() == std::vector<std::string>{"q"});
  CHECK(build_vocabulary(docs({{"b", "c", "c"}, {"a"}}), 10).words() == std::vector<std::string>{"c", "a", "b"});
  CHECK_THROWS_AS(build_vocabulary(docs({{}, {}}), 5), DataError);
  const Vocabulary v2 = build_vocabulary(docs({{"a", "a", "b"}, {"b", "c"}}), 2);
  CHECK(v.hash() == v2.hash());
  CHECK(v.index_of("b") == 1u);
  CHECK(!v.index_of("c"));
}

TEST_CASE("build_vocabulary is deterministic on random corpora") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> word(0, 60), len(0, 20);
  for (int trial = 0; trial < 20; ++trial) {
    Corpus c;
    for (int d = 0; d < 30; ++d) {
      Document doc;
      for (int i = len(rng); i > 0; --i) doc.push_back("w" + std::to_string(word(rng)));
      c.documents.push_back(doc);
    }
    c.documents.push_back({"anchor"});
    const auto a = build_vocabulary(c, 25);
    const auto b = build_vocabulary(c, 25);
    CHECK(a.words() == b.words());
    CHECK(a.size() <= 25);
  }
}

TEST_CASE("to_bow") {
  const Vocabulary abc({"a", "b", "c"});
  const Document aab{"a", "a", "b"};
  const BowVector b = to_bow(aab, abc);
  CHECK(b.dense_counts(3) == std::vector<double>{2, 1, 0});
  CHECK(b.l1_normalized[0] == doctest::Approx(2.0 / 3.0));
  CHECK(b.l1_normalized[1] == doctest::Approx(1.0 / 3.0));
  CHECK(b.l1_normalized[2] == 0.0);
  CHECK(b.total() == 3.0);
  const Document zz{"z", "z"};
  try {
    to_bow(zz, Vocabulary({"a", "b"}));
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("empty after filtering") != std::string::npos);
  }
  const Document c{"c"};
  CHECK(to_bow(c, abc).l1_normalized == std::vector<double>{0, 0, 1});
}

TEST_CASE("BoW vectors are normalized") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> word(0, 40), len(1, 50);
  std::vector<std::string> words;
  for (int i = 0; i < 30; ++i) words.push_back("w" + std::to_string(i));
  const Vocabulary vocab(words);
  for (int trial = 0; trial < 200; ++trial) {
    Document doc{"w0"};
    for (int i = len(rng); i > 0; --i) doc.push_back("w" + std::to_string(word(rng)));
    const BowVector b = to_bow(doc, vocab);
    double sum = 0.0;
    for (double x : b.l1_normalized) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("split") {
  auto make = [](std::size_t n) {
    Corpus c;
    for (std::size_t i = 0; i < n; ++i) c.documents.push_back({"d" + std::to_string(i)});
    return c;
  };
  SUBCASE("sizes") {
    const auto s100 = split(make(100), SplitSpec{});
    CHECK(s100.train.size() == 70);
    CHECK(s100.dev.size() == 15);
    CHECK(s100.test.size() == 15);
    const auto s10 = split(make(10), SplitSpec{});
    CHECK(s10.train.size() == 8);
    CHECK(s10.dev.size() == 1);
    CHECK(s10.test.size() == 1);
  }
  SUBCASE("deterministic, disjoint and covering") {
    const auto a = split_indices(57, SplitSpec{0.7, 0.15, 0.15, 3});
    const auto b = split_indices(57, SplitSpec{0.7, 0.15, 0.15, 3});
    CHECK(a == b);
    std::set<std::size_t> all;
    std::size_t total = 0;
    for (const auto& part : a) {
      all.insert(part.begin(), part.end());
      total += part.size();
    }
    CHECK(total == 57);
    CHECK(all.size() == 57);
    CHECK(*all.rbegin() == 56);
    CHECK(split_indices(57, SplitSpec{0.7, 0.15, 0.15, 4}) != a);
  }
  SUBCASE("labels follow documents") {
    Corpus c = make(20);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < 20; ++i) labels.push_back("l" + std::to_string(i));
    c.labels = labels;
    const auto s = split(c, SplitSpec{});
    for (std::size_t i = 0; i < s.test.size(); ++i) {
      CHECK(s.test.documents[i][0].substr(1) == (*s.test.labels)[i].substr(1));
    }
  }
  SUBCASE("too small") {
    CHECK_THROWS_AS(split(make(3), SplitSpec{}), DataError);
    CHECK_THROWS_AS(split(make(100), SplitSpec{0.5, 0.5, 0.5, 0}), UsageError);
  }
}

TEST_CASE("embedding files") {
  TempDir tmp;
  std::vector<ContextEmbedding> rows{{{1.5f, -2.0f, 3.25f}}, {{0.0f, 1e-30f, -7.0f}}};
  SUBCASE("roundtrip is exact") {
    write_embeddings(tmp.path / "e.ctxe", rows);
    const auto back = load_embeddings(tmp.path / "e.ctxe", 2);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(std::memcmp(back[i].vector.data(), rows[i].vector.data(), 3 * sizeof(float)) == 0);
    }
  }
  SUBCASE("byte layout") {
    write_embeddings(tmp.path / "e.ctxe", rows);
    const std::string bytes = slurp(tmp.path / "e.ctxe");
    REQUIRE(bytes.size() == 4 + 4 + 8 + 4 + 6 * 4);
    CHECK(bytes.substr(0, 4) == "CTXE");
    const std::string header("\x01\x00\x00\x00\x02\x00\x00\x00\x00\x00\x00\x00\x03\x00\x00\x00", 16);
    CHECK(bytes.substr(4, 16) == header);
    float first = 0;
    std::memcpy(&first, bytes.data() + 20, 4);
    CHECK(first == 1.5f);
  }
  SUBCASE("hand-built file parses") {
    std::string bytes = "CTXE";
    bytes += std::string("\x01\x00\x00\x00", 4);
    bytes += std::string("\x01\x00\x00\x00\x00\x00\x00\x00", 8);
    bytes += std::string("\x02\x00\x00\x00", 4);
    bytes += std::string("\x00\x00\x80\x3f\x00\x00\x00\xc0", 8);  // 1.0f, -2.0f
    const auto e = load_embeddings(tmp.file("h.ctxe", bytes), 1);
    CHECK(e[0].vector == std::vector<float>{1.0f, -2.0f});
  }
  SUBCASE("errors") {
    write_embeddings(tmp.path / "e.ctxe", rows);
    std::string good = slurp(tmp.path / "e.ctxe");
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(load_embeddings(tmp.file("m.ctxe", bad_magic), 2), DataError);
    std::string bad_version = good;
    bad_version[4] = 2;
    CHECK_THROWS_AS(load_embeddings(tmp.file("v.ctxe", bad_version), 2), DataError);
    CHECK_THROWS_AS(load_embeddings(tmp.file("t.ctxe", good.substr(0, good.size() - 1)), 2), DataError);
    CHECK_THROWS_AS(load_embeddings(tmp.file("x.ctxe", good + "!"), 2), DataError);
    CHECK_THROWS_AS(load_embeddings(tmp.path / "e.ctxe", 3), DataError);
    CHECK_THROWS_AS(load_embeddings(tmp.file("s.ctxe", "CT"), 2), DataError);
    std::vector<ContextEmbedding> nan_rows{{{std::nanf(""), 0.0f}}};
    write_embeddings(tmp.path / "n.ctxe", nan_rows);
    CHECK_THROWS_AS(load_embeddings(tmp.path / "n.ctxe", 1), DataError);
  }
}

TEST_CASE("fallback embeddings") {
  const Corpus c = docs({{"a", "b"}, {"b", "a"}, {"c", "c", "a"}});
  const Vocabulary v({"a", "b", "c"});
  const auto e1 = fallback_embeddings(c, v, 16, 1);
  REQUIRE(e1.size() == 3);
  CHECK(e1[0].dim() == 16);
  CHECK(e1[0].vector == e1[1].vector);
  CHECK(e1[0].vector != e1[2].vector);
  const auto e2 = fallback_embeddings(c, v, 16, 2);
  CHECK(e1[0].vector != e2[0].vector);
  for (const auto& row : e1) {
    for (float x : row.vector) CHECK(std::isfinite(x));
  }
  CHECK(fallback_embeddings(c, v, 16, 1)[2].vector == e1[2].vector);
}

TEST_CASE("prepare drops empty documents with their labels and embeddings") {
  Corpus c = docs({{"a"}, {"zz"}, {"b", "a"}});
  c.labels = std::vector<std::string>{"x", "y", "z"};
  std::vector<ContextEmbedding> e{{{1.0f}}, {{2.0f}}, {{3.0f}}};
  const PreparedCorpus p = prepare(c, Vocabulary({"a", "b"}), e);
  CHECK(p.dropped == 1);
  CHECK(p.bows.size() == 2);
  CHECK(*p.corpus.labels == std::vector<std::string>{"x", "z"});
  CHECK(p.embeddings[1].vector == std::vector<float>{3.0f});
  CHECK(p.kept_indices == std::vector<std::size_t>{0, 2});
  CHECK_THROWS_AS(prepare(c, Vocabulary({"a"}), {{{1.0f}}}), DataError);
}
