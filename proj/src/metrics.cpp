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


#include "ctmneg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace ctmneg::metrics {
namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

std::optional<std::uint32_t> CooccurrenceStats::id_of(const std::string& word) const {
  auto it = ids_.find(word);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t CooccurrenceStats::intern(const std::string& word) {
  auto [it, inserted] = ids_.emplace(word, static_cast<std::uint32_t>(words_.size()));
  if (inserted) {
    words_.push_back(word);
    counts_.push_back(0);
    stamp_.push_back(0);
  }
  return it->second;
}

std::size_t CooccurrenceStats::count(const std::string& word) const {
  const auto id = id_of(word);
  return id ? counts_[*id] : 0;
}

std::size_t CooccurrenceStats::pair_count(const std::string& a, const std::string& b) const {
  const auto ia = id_of(a);
  const auto ib = id_of(b);
  if (!ia || !ib) return 0;
  if (*ia == *ib) return counts_[*ia];
  auto it = pairs_.find(pair_key(*ia, *ib));
  return it == pairs_.end() ? 0 : it->second;
}

double CooccurrenceStats::probability(const std::string& word) const {
  return static_cast<double>(count(word)) / static_cast<double>(virtual_docs_);
}

double CooccurrenceStats::joint_probability(const std::string& a, const std::string& b) const {
  return static_cast<double>(pair_count(a, b)) / static_cast<double>(virtual_docs_);
}

void CooccurrenceStats::add_document(std::span<const std::string> tokens,
                                     const std::unordered_set<std::string>* restrict_to) {
  constexpr std::int64_t kSkip = -1;
  std::vector<std::int64_t> ids(tokens.size(), kSkip);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (restrict_to == nullptr || restrict_to->contains(tokens[i])) ids[i] = intern(tokens[i]);
  }
  const std::size_t n_windows = tokens.size() <= window_ ? 1 : tokens.size() - window_ + 1;
  std::vector<std::uint32_t> present;
  for (std::size_t start = 0; start < n_windows; ++start) {
    ++stamp_clock_;
    present.clear();
    const std::size_t end = std::min(start + window_, tokens.size());
    for (std::size_t i = start; i < end; ++i) {
      if (ids[i] == kSkip) continue;
      const auto id = static_cast<std::uint32_t>(ids[i]);
      if (stamp_[id] != stamp_clock_) {
        stamp_[id] = stamp_clock_;
        present.push_back(id);
      }
    }
    ++virtual_docs_;
    for (std::size_t i = 0; i < present.size(); ++i) {
      ++counts_[present[i]];
      for (std::size_t j = i + 1; j < present.size(); ++j) ++pairs_[pair_key(present[i], present[j])];
    }
  }
}

void CooccurrenceStats::merge(const CooccurrenceStats& other) {
  if (other.window_ != window_) throw UsageError("cooccurrence merge: window sizes differ");
  std::vector<std::uint32_t> remap(other.words_.size());
  for (std::size_t i = 0; i < other.words_.size(); ++i) {
    remap[i] = intern(other.words_[i]);
    counts_[remap[i]] += other.counts_[i];
  }
  for (const auto& [key, n] : other.pairs_) {
    const auto a = static_cast<std::uint32_t>(key >> 32);
    const auto b = static_cast<std::uint32_t>(key & 0xFFFFFFFFu);
    pairs_[pair_key(remap[a], remap[b])] += n;
  }
  virtual_docs_ += other.virtual_docs_;
}

CooccurrenceStats cooccurrence_counts(std::span<const corpus::Document> reference, std::size_t window,
                                      const std::unordered_set<std::string>* restrict_to, double epsilon) {
  if (window < 1) throw UsageError("cooccurrence_counts: window must be >= 1");
  if (reference.empty()) throw DataError("cooccurrence_counts: empty reference corpus");
  CooccurrenceStats stats(window, epsilon);
  for (const corpus::Document& doc : reference) stats.add_document(doc, restrict_to);
  return stats;
}

double npmi_pair(const CooccurrenceStats& stats, const std::string& a, const std::string& b) {
  for (const std::string* w : {&a, &b}) {
    if (!stats.contains(*w)) throw DataError("word absent from reference corpus: " + *w);
  }
  const double joint = stats.joint_probability(a, b) + stats.epsilon();
  const double denom = -std::log(joint);
  // Both words in every window: the ratio degenerates to 0/0, whose limit is 1.
  if (denom <= 0.0) return 1.0;
  const double pmi = std::log(joint / (stats.probability(a) * stats.probability(b)));
  return std::clamp(pmi / denom, -1.0, 1.0);
}

namespace {

std::vector<std::string> usable_words(const CooccurrenceStats& stats, std::span<const std::string> topic) {
  std::vector<std::string> words;
  for (const std::string& w : topic) {
    if (stats.contains(w)) words.push_back(w);
  }
  if (words.size() < 2) throw DataError("topic has fewer than 2 words present in the reference corpus");
  return words;
}

}  // namespace

double topic_npmi(const CooccurrenceStats& stats, std::span<const std::string> topic) {
  const std::vector<std::string> words = usable_words(stats, topic);
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      sum += npmi_pair(stats, words[i], words[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cv_score(const CooccurrenceStats& stats, std::span<const std::string> topic) {
  const std::vector<std::string> words = usable_words(stats, topic);
  const std::size_t k = words.size();
  std::vector<std::vector<double>> context(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      context[i][j] = context[j][i] = npmi_pair(stats, words[i], words[j]);
    }
  }
  std::vector<double> whole(k, 0.0);
  for (const auto& v : context) {
    for (std::size_t j = 0; j < k; ++j) whole[j] += v[j];
  }
  double sum = 0.0;
  for (const auto& v : context) sum += cosine(v, whole);
  return sum / static_cast<double>(k);
}

double rbo(std::span<const std::string> l1, std::span<const std::string> l2, double p, std::size_t k) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError("rbo: persistence must lie in (0, 1)");
  if (l1.empty() && l2.empty()) return 1.0;
  if (l1.empty() || l2.empty()) return 0.0;
  const std::size_t depth = std::min(k, std::max(l1.size(), l2.size()));
  if (depth == 0) return 1.0;

  std::unordered_set<std::string_view> seen1, seen2;
  std::size_t overlap = 0;
  double sum = 0.0;
  double weight = 1.0;  // p^(d-1)
  double agreement = 0.0;
  for (std::size_t d = 1; d <= depth; ++d) {
    if (d <= l1.size()) {
      const std::string_view x = l1[d - 1];
      if (seen2.contains(x)) ++overlap;
      seen1.insert(x);
    }
    if (d <= l2.size()) {
      const std::string_view y = l2[d - 1];
      if (seen1.contains(y)) ++overlap;
      seen2.insert(y);
    }
    agreement = static_cast<double>(overlap) / static_cast<double>(d);
    sum += weight * agreement;
    weight *= p;
  }
  // weight now equals p^depth.
  return (1.0 - p) * sum + weight * agreement;
}

double irbo(const TopicList& topics, double p, std::size_t k) {
  if (topics.size() < 2) throw UsageError("irbo: need at least two topics");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 1; i < topics.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      sum += rbo(topics[i], topics[j], p, k);
      ++pairs;
    }
  }
  return 1.0 - sum / static_cast<double>(pairs);
}

MetricReport evaluate_topics(const TopicList& topics, std::span<const corpus::Document> reference,
                             const MetricOptions& options) {
  TopicList truncated;
  std::unordered_set<std::string> words;
  for (const auto& t : topics) {
    std::vector<std::string> head(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(std::min(options.top_k, t.size())));
    words.insert(head.begin(), head.end());
    truncated.push_back(std::move(head));
  }

  MetricReport report;
  auto score_all = [&](std::size_t window, auto&& scorer, std::vector<double>& per_topic) -> double {
    const CooccurrenceStats stats = cooccurrence_counts(reference, window, &words, options.epsilon);
    if (report.missing_words.empty()) {
      for (const std::string& w : words) {
        if (!stats.contains(w)) report.missing_words.push_back(w);
      }
      std::sort(report.missing_words.begin(), report.missing_words.end());
    }
    double sum = 0.0;
    for (const auto& t : truncated) {
      per_topic.push_back(scorer(stats, t));
      sum += per_topic.back();
    }
    return sum / static_cast<double>(truncated.size());
  };

  if (options.npmi && !truncated.empty()) {
    report.npmi = score_all(options.npmi_window, [](const auto& s, const auto& t) { return topic_npmi(s, t); },
                            report.topic_npmi);
  }
  if (options.cv && !truncated.empty()) {
    report.cv = score_all(options.cv_window, [](const auto& s, const auto& t) { return cv_score(s, t); },
                          report.topic_cv);
  }
  if (options.irbo) report.irbo = irbo(truncated, options.rbo_p, options.top_k);
  return report;
}

namespace {

std::string format_value(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s.precision(10);
  s << *v;
  return s.str();
}

}  // namespace

std::string to_csv(std::span<const MetricRow> rows) {
  std::ostringstream out;
  out << "model,T,seed,NPMI,CV,IRBO\n";
  for (const MetricRow& r : rows) {
    out << r.model << ',' << r.topics << ',' << r.seed << ',' << format_value(r.npmi) << ',' << format_value(r.cv)
        << ',' << format_value(r.irbo) << '\n';
  }
  return out.str();
}

std::string to_json(std::span<const MetricRow> rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  auto value = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  for (const MetricRow& r : rows) {
    nlohmann::ordered_json row;
    row["model"] = r.model;
    row["T"] = r.topics;
    row["seed"] = r.seed;
    row["NPMI"] = value(r.npmi);
    row["CV"] = value(r.cv);
    row["IRBO"] = value(r.irbo);
    arr.push_back(std::move(row));
  }
  return arr.dump(2);
}

}  // namespace ctmneg::metrics
