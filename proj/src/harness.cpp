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


#include "ctmneg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "ctmneg/errors.hpp"
#include "json.hpp"

namespace ctmneg::harness {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Fnv {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= c[i];
      h_ *= 1099511628211ULL;
    }
  }
  template <typename T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  void text(std::string_view s) {
    bytes(s.data(), s.size());
    value(std::uint8_t{0});
  }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ULL;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::optional<HyperParams> reference_hyperparameters(std::string_view dataset, std::size_t topics) {
  static const std::map<std::string, std::map<std::size_t, HyperParams>> table = {
      {"GN",
       {{10, {2, 0.7}}, {20, {2, 0.58}}, {30, {2, 0.59}}, {40, {2, 0.59}},
        {50, {3, 0.82}}, {60, {3, 0.94}}, {90, {1, 0.68}}, {120, {3, 0.82}}}},
      {"20NG",
       {{10, {3, 0.78}}, {20, {3, 0.83}}, {30, {3, 0.86}}, {40, {1, 0.74}},
        {50, {1, 0.12}}, {60, {3, 0.27}}, {90, {1, 0.84}}, {120, {1, 0.90}}}},
      {"M10",
       {{10, {3, 0.9}}, {20, {3, 0.49}}, {30, {1, 0.82}}, {40, {1, 0.59}},
        {50, {3, 0.82}}, {60, {3, 0.58}}, {90, {3, 0.93}}, {120, {3, 0.27}}}},
  };
  auto ds = table.find(upper(dataset));
  if (ds == table.end()) return std::nullopt;
  auto it = ds->second.find(topics);
  if (it == ds->second.end()) return std::nullopt;
  return it->second;
}

void ExperimentGrid::validate() const {
  if (runs < 1) throw UsageError("grid: runs must be >= 1");
  if (topic_counts.empty() || modes.empty()) throw UsageError("grid: no topic counts or modes");
  for (std::size_t t : topic_counts) {
    if (t < 2) throw UsageError("grid: topic counts must be >= 2");
  }
}

HyperParams ExperimentGrid::hyperparams_for(std::string_view dataset, std::size_t topics) const {
  if (auto it = hyperparams.find(topics); it != hyperparams.end()) return it->second;
  if (auto ref = reference_hyperparameters(dataset, topics)) return *ref;
  return HyperParams{};
}

double median(std::vector<double> values) {
  if (values.empty()) throw UsageError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw UsageError("mean of an empty list");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::uint64_t cell_seed(std::uint64_t master, std::string_view dataset, std::size_t topics, model::Mode mode,
                        std::size_t run) {
  Fnv name;
  name.text(dataset);
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t part : {name.digest(), static_cast<std::uint64_t>(topics), static_cast<std::uint64_t>(mode),
                             static_cast<std::uint64_t>(run)}) {
    h = splitmix64(h ^ part);
  }
  return h;
}

Dataset prepare_dataset(std::string name, const corpus::Corpus& source, const DatasetOptions& options) {
  Dataset ds;
  ds.name = std::move(name);
  ds.vocab = corpus::build_vocabulary(source, options.vocab_size);
  if (options.embeddings || options.embeddings_path) {
    auto rows = options.embeddings ? *options.embeddings
                                   : corpus::load_embeddings(*options.embeddings_path, source.size());
    if (rows.size() != source.size()) throw DataError("embedding/document count mismatch");
    ds.embedding_source = {false, 0, rows.empty() ? 0 : rows.front().dim()};
    ds.data = corpus::prepare(source, ds.vocab, std::move(rows));
  } else {
    ds.data = corpus::prepare(source, ds.vocab);
    ds.data.embeddings = corpus::fallback_embeddings(ds.data.corpus, ds.vocab, options.fallback_dim,
                                                     options.fallback_seed);
    ds.embedding_source = {true, options.fallback_seed, options.fallback_dim};
  }
  if (ds.data.bows.empty()) throw DataError("dataset " + ds.name + " has no usable documents");

  Fnv h;
  h.value(ds.vocab.hash());
  for (const auto& bow : ds.data.bows) {
    h.value(bow.counts.size());
    for (const auto& [w, c] : bow.counts) {
      h.value(w);
      h.value(c);
    }
  }
  for (const auto& e : ds.data.embeddings) h.bytes(e.vector.data(), e.vector.size() * sizeof(float));
  ds.content_hash = h.digest();
  return ds;
}

TrainedCell train_and_evaluate(const Dataset& dataset, const model::ModelConfig& config,
                               const metrics::MetricOptions& metric_options) {
  model::FitResult fit = model::fit(dataset.data, config);
  metrics::TopicList topics =
      model::get_topics(fit.model.topic_word_matrix(), dataset.vocab, std::min(metric_options.top_k, dataset.vocab.size()));
  metrics::MetricReport report = metrics::evaluate_topics(topics, dataset.data.corpus.documents, metric_options);
  return TrainedCell{std::move(fit), std::move(topics), std::move(report)};
}

namespace {

model::ModelConfig cell_config(const BenchmarkOptions& options, const Dataset& dataset, model::Mode mode,
                               std::size_t topics, const HyperParams& hp, std::uint64_t seed) {
  model::ModelConfig c = options.base;
  c.topics = topics;
  c.vocab_size = dataset.vocab.size();
  c.context_dim = dataset.data.embeddings.empty() ? 0 : dataset.data.embeddings.front().dim();
  c.mode = mode;
  c.seed = seed;
  if (mode == model::Mode::ctm_neg) {
    c.perturbations = std::min(hp.s, topics - 1);
    c.triplet_weight = hp.lambda;
  } else {
    c.perturbations = 1;
    c.triplet_weight = 0.0;
  }
  return c;
}

std::uint64_t cache_key(const Dataset& dataset, const model::ModelConfig& c, const metrics::MetricOptions& m) {
  Fnv h;
  h.value(dataset.content_hash);
  h.value(c.topics);
  h.value(c.vocab_size);
  h.value(c.context_dim);
  for (std::size_t w : c.hidden) h.value(w);
  h.value(c.perturbations);
  h.value(c.triplet_weight);
  h.value(c.margin);
  h.value(c.epochs);
  h.value(c.batch_size);
  h.value(c.seed);
  h.value(static_cast<int>(c.mode));
  h.value(c.dropout);
  h.value(c.batch_norm);
  h.value(static_cast<int>(c.activation));
  h.value(c.prior_alpha);
  h.value(c.adam.lr);
  h.value(c.adam.beta1);
  h.value(c.adam.beta2);
  h.value(c.adam.epsilon);
  h.value(m.npmi_window);
  h.value(m.cv_window);
  h.value(m.epsilon);
  h.value(m.rbo_p);
  h.value(m.top_k);
  h.value(m.npmi);
  h.value(m.cv);
  h.value(m.irbo);
  return h.digest();
}

std::filesystem::path cache_file(const std::filesystem::path& dir, std::uint64_t key) {
  std::ostringstream name;
  name << std::hex << key << ".json";
  return dir / name.str();
}

std::optional<double> json_value(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

bool load_cached(const std::filesystem::path& path, RunResult& run) {
  std::ifstream in(path);
  if (!in) return false;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    run.npmi = json_value(j, "npmi");
    run.cv = json_value(j, "cv");
    run.irbo = json_value(j, "irbo");
    run.cached = true;
    return true;
  } catch (const nlohmann::json::exception&) {
    return false;  // unreadable entry: recompute
  }
}

void store_cached(const std::filesystem::path& path, const RunResult& run) {
  nlohmann::json j;
  auto put = [&j](const char* key, const std::optional<double>& v) { j[key] = v ? nlohmann::json(*v) : nlohmann::json(); };
  put("npmi", run.npmi);
  put("cv", run.cv);
  put("irbo", run.irbo);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump();
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

BenchmarkReport run_benchmark(const ExperimentGrid& grid, const Dataset& dataset, const BenchmarkOptions& options) {
  grid.validate();
  BenchmarkReport report;
  report.dataset = dataset.name;
  for (model::Mode mode : grid.modes) {
    for (std::size_t t : grid.topic_counts) {
      for (std::size_t r = 0; r < grid.runs; ++r) {
        RunResult run;
        run.mode = mode;
        run.topics = t;
        run.run = r;
        run.seed = cell_seed(options.master_seed, dataset.name, t, mode, r);
        run.hyperparams = mode == model::Mode::ctm_neg ? grid.hyperparams_for(dataset.name, t) : HyperParams{0, 0.0};
        report.runs.push_back(run);
      }
    }
  }
  if (options.cache_dir) std::filesystem::create_directories(*options.cache_dir);

  auto execute = [&](RunResult& run) {
    try {
      const model::ModelConfig config =
          cell_config(options, dataset, run.mode, run.topics, run.hyperparams, run.seed);
      std::optional<std::filesystem::path> cached;
      if (options.cache_dir) {
        cached = cache_file(*options.cache_dir, cache_key(dataset, config, options.metrics));
        if (load_cached(*cached, run)) return;
      }
      const TrainedCell cell = train_and_evaluate(dataset, config, options.metrics);
      run.npmi = cell.report.npmi;
      run.cv = cell.report.cv;
      run.irbo = cell.report.irbo;
      if (cached) store_cached(*cached, run);
    } catch (const std::exception& e) {
      run.error = e.what();
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, report.runs.size()));
  if (jobs == 1) {
    for (RunResult& run : report.runs) execute(run);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < report.runs.size(); i = next++) execute(report.runs[i]);
      });
    }
    for (std::thread& w : workers) w.join();
  }

  summarize(report);
  if (options.out_path) {
    emit_report(report, ReportFormat::csv, *options.out_path);
    std::filesystem::path md = *options.out_path;
    md.replace_extension(".md");
    emit_report(report, ReportFormat::markdown, md);
  }
  return report;
}

void summarize(BenchmarkReport& report) {
  report.cells.clear();
  report.models.clear();
  std::vector<model::Mode> modes;
  for (const RunResult& run : report.runs) {
    if (std::find(modes.begin(), modes.end(), run.mode) == modes.end()) modes.push_back(run.mode);
    auto cell = std::find_if(report.cells.begin(), report.cells.end(), [&run](const CellSummary& c) {
      return c.mode == run.mode && c.topics == run.topics;
    });
    if (cell == report.cells.end()) {
      report.cells.push_back(CellSummary{run.mode, run.topics, 0, 0, {}, {}, {}});
      cell = std::prev(report.cells.end());
    }
    if (run.failed()) {
      ++cell->failed;
    } else {
      ++cell->completed;
    }
  }

  auto collect = [&report](const CellSummary& cell, std::optional<double> RunResult::*field) {
    std::vector<double> values;
    for (const RunResult& run : report.runs) {
      if (run.mode == cell.mode && run.topics == cell.topics && !run.failed() && run.*field) {
        values.push_back(*(run.*field));
      }
    }
    return values.empty() ? std::optional<double>{} : std::optional<double>{median(values)};
  };
  for (CellSummary& cell : report.cells) {
    cell.npmi = collect(cell, &RunResult::npmi);
    cell.cv = collect(cell, &RunResult::cv);
    cell.irbo = collect(cell, &RunResult::irbo);
  }

  auto aggregate = [&report](model::Mode mode, std::optional<double> CellSummary::*field) {
    std::vector<double> values;
    for (const CellSummary& c : report.cells) {
      if (c.mode == mode && c.*field) values.push_back(*(c.*field));
    }
    if (values.empty()) return Aggregate{};
    return Aggregate{mean(values), median(values)};
  };
  for (model::Mode mode : modes) {
    report.models.push_back(ModelSummary{mode, aggregate(mode, &CellSummary::npmi), aggregate(mode, &CellSummary::cv),
                                         aggregate(mode, &CellSummary::irbo)});
  }
}

std::size_t select_best(std::span<const SearchCandidate> candidates) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!candidates[i].npmi) continue;
    if (!best || *candidates[i].npmi > *candidates[*best].npmi) best = i;
  }
  if (!best) throw UsageError("select_best: no candidate produced a score");
  return *best;
}

std::vector<HyperParams> search_candidates(std::span<const std::size_t> s_grid, std::size_t budget,
                                           std::uint64_t seed) {
  if (budget < 1) throw UsageError("search: budget must be >= 1");
  if (s_grid.empty()) throw UsageError("search: empty S grid");
  const std::size_t n_lambda = (budget + s_grid.size() - 1) / s_grid.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<HyperParams> out;
  for (std::size_t i = 0; i < n_lambda; ++i) {
    const double lambda = uniform(rng);
    for (std::size_t s : s_grid) {
      if (out.size() < budget) out.push_back(HyperParams{s, lambda});
    }
  }
  return out;
}

SearchResult hyperparam_search(const Dataset& train, const corpus::Corpus& dev, std::size_t topics,
                               const SearchOptions& options) {
  SearchResult result;
  metrics::MetricOptions metric_options = options.metrics;
  metric_options.cv = false;
  metric_options.irbo = false;
  for (const HyperParams& hp : search_candidates(options.s_grid, options.budget, options.seed)) {
    SearchCandidate candidate{hp, std::nullopt};
    if (hp.s >= topics) {
      result.candidates.push_back(candidate);
      continue;
    }
    try {
      model::ModelConfig c = options.base;
      c.topics = topics;
      c.vocab_size = train.vocab.size();
      c.context_dim = train.data.embeddings.empty() ? 0 : train.data.embeddings.front().dim();
      c.mode = model::Mode::ctm_neg;
      c.perturbations = hp.s;
      c.triplet_weight = hp.lambda;
      c.seed = options.seed;
      const model::FitResult fit = model::fit(train.data, c);
      const metrics::TopicList words =
          model::get_topics(fit.model.topic_word_matrix(), train.vocab, std::min(metric_options.top_k, train.vocab.size()));
      candidate.npmi = metrics::evaluate_topics(words, dev.documents, metric_options).npmi;
    } catch (const std::exception&) {
      candidate.npmi.reset();
    }
    result.candidates.push_back(candidate);
  }
  const std::size_t best = select_best(result.candidates);
  result.best = result.candidates[best].params;
  result.best_npmi = result.candidates[best].npmi;
  return result;
}

}  // namespace ctmneg::harness
