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


// ctmneg command line: train, inspect and evaluate topic models, run
// benchmark sweeps, hyperparameter search and document classification.

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctmneg/corpus.hpp"
#include "ctmneg/errors.hpp"
#include "ctmneg/harness.hpp"
#include "ctmneg/metrics.hpp"
#include "ctmneg/model.hpp"
#include "ctmneg/synthetic.hpp"

namespace {

using namespace ctmneg;

struct EmbeddingFlags {
  std::string path;
  bool fallback = false;
  std::size_t dim = corpus::kDefaultFallbackDim;
  std::uint64_t seed = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--embeddings", path, "CTXE embedding file aligned with the corpus");
    cmd->add_flag("--fallback-embeddings", fallback, "use seeded random-projection embeddings");
    cmd->add_option("--fallback-dim", dim, "dimension of fallback embeddings");
    cmd->add_option("--fallback-seed", seed, "seed of the fallback projection");
  }

  harness::DatasetOptions dataset_options(std::size_t vocab_size, bool needs_context) const {
    if (!path.empty() && fallback) throw UsageError("--embeddings and --fallback-embeddings are exclusive");
    if (path.empty() && !fallback && needs_context) {
      throw UsageError("contextual modes need --embeddings F or --fallback-embeddings");
    }
    harness::DatasetOptions o;
    o.vocab_size = vocab_size;
    if (!path.empty()) o.embeddings_path = path;
    o.fallback_dim = dim;
    o.fallback_seed = seed;
    return o;
  }
};

struct ModelFlags {
  std::size_t topics = 20;
  std::size_t s = 1;
  double lambda = 0.5;
  double margin = 1.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::string mode = "ctm_neg";
  double lr = 2e-3;
  double dropout = 0.2;
  double prior_alpha = 0.0;
  std::size_t vocab_size = corpus::kDefaultVocabularySize;

  void add(CLI::App* cmd, bool with_topics = true) {
    if (with_topics) cmd->add_option("--topics", topics, "number of topics");
    cmd->add_option("--s", s, "topics zeroed to build the negative sample");
    cmd->add_option("--lambda", lambda, "weight of the triplet term");
    cmd->add_option("--margin", margin, "triplet margin");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--batch-size", batch_size, "minibatch size");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--mode", mode, "ctm_neg, ctm or prodlda");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--dropout", dropout, "encoder dropout rate");
    cmd->add_option("--prior-alpha", prior_alpha, "Dirichlet concentration of the prior (0: 1/T)");
    cmd->add_option("--vocab-size", vocab_size, "maximum vocabulary size");
  }

  model::ModelConfig config() const {
    model::ModelConfig c;
    c.topics = topics;
    c.mode = model::parse_mode(mode);
    c.perturbations = s;
    c.triplet_weight = c.mode == model::Mode::ctm_neg ? lambda : 0.0;
    c.margin = margin;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.seed = seed;
    c.adam.lr = lr;
    c.dropout = dropout;
    c.prior_alpha = prior_alpha;
    return c;
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw UsageError("not a count: " + item);
    }
  }
  if (out.empty()) throw UsageError("empty list: " + text);
  return out;
}

metrics::MetricOptions metric_selection(const std::string& text, std::size_t top_k) {
  metrics::MetricOptions o;
  o.top_k = top_k;
  o.npmi = o.cv = o.irbo = false;
  for (const auto& m : split_list(text)) {
    if (m == "npmi") {
      o.npmi = true;
    } else if (m == "cv") {
      o.cv = true;
    } else if (m == "irbo") {
      o.irbo = true;
    } else {
      throw UsageError("unknown metric: " + m);
    }
  }
  return o;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << *v;
  return out.str();
}

// Embeddings for a corpus scored by a stored model: an explicit file, or the
// fallback projection recorded in the checkpoint.
corpus::PreparedCorpus prepare_for_model(const model::Checkpoint& ckpt, const corpus::Corpus& docs,
                                         const std::string& embeddings_path) {
  if (!embeddings_path.empty()) {
    return corpus::prepare(docs, ckpt.vocab, corpus::load_embeddings(embeddings_path, docs.size()));
  }
  corpus::PreparedCorpus data = corpus::prepare(docs, ckpt.vocab);
  if (ckpt.model.config().uses_context()) {
    if (!ckpt.embeddings.fallback) {
      throw UsageError("model was trained on external embeddings; pass --embeddings F");
    }
    data.embeddings = corpus::fallback_embeddings(data.corpus, ckpt.vocab, ckpt.embeddings.dim,
                                                  ckpt.embeddings.fallback_seed);
  }
  return data;
}

// key=value lines become --key=value arguments unless the flag was given.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty() || args.empty()) return args;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::vector<std::string> injected;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) != 0) key = "--" + key;
    if (key == "--config") continue;
    const bool given = std::any_of(args.begin() + 1, args.end(), [&key](const std::string& a) {
      return a == key || a.rfind(key + "=", 0) == 0;
    });
    if (!given) injected.push_back(key + "=" + value);
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

int run(int argc, char** argv) {
  CLI::App app{"Contextualized topic models with negative sampling"};
  app.require_subcommand(1);
  std::string config_path;
  auto add_config = [&config_path](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value file; flags on the command line win");
  };

  // ---- train
  auto* train = app.add_subcommand("train", "train a topic model");
  std::string corpus_path, labels_path, out_path, trace_path;
  EmbeddingFlags emb;
  ModelFlags mf;
  train->add_option("--corpus", corpus_path, "one document per line, whitespace tokens")->required();
  emb.add(train);
  mf.add(train);
  train->add_option("--out", out_path, "checkpoint path")->required();
  train->add_option("--loss-trace", trace_path, "per-epoch loss CSV");
  add_config(train);

  // ---- topics
  auto* topics = app.add_subcommand("topics", "print the top words of each topic");
  std::string model_path;
  std::size_t top_k = 10;
  topics->add_option("--model", model_path, "checkpoint path")->required();
  topics->add_option("--top-k", top_k, "words per topic");
  add_config(topics);

  // ---- eval
  auto* eval = app.add_subcommand("eval", "score a model's topics against a reference corpus");
  std::string metric_list = "npmi,cv,irbo";
  eval->add_option("--model", model_path, "checkpoint path")->required();
  eval->add_option("--corpus", corpus_path, "reference corpus")->required();
  eval->add_option("--metrics", metric_list, "comma-separated subset of npmi,cv,irbo");
  eval->add_option("--top-k", top_k, "words per topic");
  add_config(eval);

  // ---- benchmark
  auto* bench = app.add_subcommand("benchmark", "sweep topic counts, models and seeds");
  std::string grid = "default", modes = "ctm_neg,ctm,prodlda", dataset_name, cache_dir;
  std::size_t runs = 5, jobs = 1;
  bench->add_option("--corpus", corpus_path, "training and reference corpus")->required();
  emb.add(bench);
  ModelFlags bf;
  bf.add(bench, false);
  bench->add_option("--grid", grid, "'default' or a comma-separated list of topic counts");
  bench->add_option("--runs", runs, "runs per cell");
  bench->add_option("--models", modes, "comma-separated modes");
  bench->add_option("--dataset", dataset_name, "dataset name used for reference hyperparameters");
  bench->add_option("--cache-dir", cache_dir, "directory of per-cell results for resuming");
  bench->add_option("--jobs", jobs, "parallel cells");
  bench->add_option("--out", out_path, "per-run CSV; a .md summary is written alongside")->required();
  add_config(bench);

  // ---- search
  auto* search = app.add_subcommand("search", "pick S and lambda by dev-split NPMI");
  std::size_t budget = 9;
  std::string s_grid = "1,2,3";
  std::uint64_t split_seed = 0;
  search->add_option("--corpus", corpus_path, "corpus to split into train/dev/test")->required();
  emb.add(search);
  ModelFlags sf;
  sf.add(search);
  search->add_option("--budget", budget, "number of configurations to train");
  search->add_option("--s-grid", s_grid, "comma-separated S values");
  search->add_option("--split-seed", split_seed, "seed of the train/dev/test split");
  add_config(search);

  // ---- classify
  auto* classify = app.add_subcommand("classify", "linear classifier on inferred topic proportions");
  harness::ClassifierConfig cc;
  std::string emb_path;
  classify->add_option("--corpus", corpus_path, "documents")->required();
  classify->add_option("--labels", labels_path, "one label per document")->required();
  classify->add_option("--model", model_path, "checkpoint path")->required();
  classify->add_option("--embeddings", emb_path, "CTXE file when the model used external embeddings");
  classify->add_option("--split-seed", split_seed, "seed of the train/dev/test split");
  classify->add_option("--classifier-lr", cc.lr, "classifier learning rate");
  classify->add_option("--classifier-l2", cc.l2, "classifier L2 strength");
  classify->add_option("--classifier-epochs", cc.epochs, "classifier epochs");
  classify->add_option("--classifier-seed", cc.seed, "classifier shuffling seed");
  add_config(classify);

  // ---- synth
  auto* synth = app.add_subcommand("synth", "write a seeded synthetic corpus");
  harness::SyntheticCorpusSpec spec;
  synth->add_option("--documents", spec.documents, "number of documents");
  synth->add_option("--topics", spec.topics, "latent topics");
  synth->add_option("--classes", spec.classes, "label groups (0: dominant topic)");
  synth->add_option("--seed", spec.seed, "random seed");
  synth->add_option("--out", out_path, "corpus path")->required();
  synth->add_option("--labels-out", labels_path, "labels path");
  add_config(synth);

  std::vector<std::string> args = apply_config(std::vector<std::string>(argv + 1, argv + argc));
  args.insert(args.begin(), argv[0]);
  std::reverse(args.begin(), args.end());
  args.pop_back();  // CLI11 wants the program name dropped and the rest reversed
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*train) {
    model::ModelConfig config = mf.config();
    const corpus::Corpus docs = corpus::load_corpus(corpus_path);
    harness::DatasetOptions dopt = emb.dataset_options(mf.vocab_size, config.uses_context());
    const harness::Dataset ds = harness::prepare_dataset("train", docs, dopt);
    config.vocab_size = ds.vocab.size();
    config.context_dim = ds.data.embeddings.empty() ? 0 : ds.data.embeddings.front().dim();
    if (ds.data.dropped > 0) std::cerr << "dropped " << ds.data.dropped << " empty documents\n";
    const model::FitResult fit = model::fit(ds.data, config);
    model::save_checkpoint(out_path, fit.model, ds.vocab, ds.embedding_source);
    if (!trace_path.empty()) model::write_loss_trace_csv(trace_path, fit.trace);
    const model::LossBreakdown& last = fit.trace.back();
    std::cout << "trained " << model::to_string(config.mode) << " T=" << config.topics << " on " << ds.data.bows.size()
              << " documents, V=" << ds.vocab.size() << "; final loss " << last.total << " (RL " << last.reconstruction
              << ", KL " << last.kl << ", TL " << last.triplet << ")\n";
  } else if (*topics) {
    const model::Checkpoint ckpt = model::load_checkpoint(model_path);
    const auto list = model::get_topics(ckpt.model.topic_word_matrix(), ckpt.vocab, top_k);
    for (std::size_t t = 0; t < list.size(); ++t) {
      std::cout << t << ":";
      for (const auto& w : list[t]) std::cout << ' ' << w;
      std::cout << '\n';
    }
  } else if (*eval) {
    const model::Checkpoint ckpt = model::load_checkpoint(model_path);
    const corpus::Corpus docs = corpus::load_corpus(corpus_path);
    const metrics::MetricOptions mo = metric_selection(metric_list, top_k);
    const auto list = model::get_topics(ckpt.model.topic_word_matrix(), ckpt.vocab, top_k);
    const metrics::MetricReport r = metrics::evaluate_topics(list, docs.documents, mo);
    if (mo.npmi) std::cout << "NPMI " << fmt(r.npmi) << '\n';
    if (mo.cv) std::cout << "CV " << fmt(r.cv) << '\n';
    if (mo.irbo) std::cout << "IRBO " << fmt(r.irbo) << '\n';
    if (!r.missing_words.empty()) {
      std::cerr << r.missing_words.size() << " topic words absent from the reference corpus\n";
    }
  } else if (*bench) {
    harness::ExperimentGrid g;
    if (grid != "default") g.topic_counts = parse_counts(grid);
    g.runs = runs;
    g.modes.clear();
    bool context = false;
    for (const auto& m : split_list(modes)) {
      g.modes.push_back(model::parse_mode(m));
      context = context || g.modes.back() != model::Mode::prodlda;
    }
    const corpus::Corpus docs = corpus::load_corpus(corpus_path);
    if (dataset_name.empty()) dataset_name = std::filesystem::path(corpus_path).stem().string();
    const harness::Dataset ds =
        harness::prepare_dataset(dataset_name, docs, emb.dataset_options(bf.vocab_size, context));
    harness::BenchmarkOptions bo;
    bo.base = bf.config();
    bo.master_seed = bf.seed;
    bo.jobs = jobs;
    bo.out_path = out_path;
    if (!cache_dir.empty()) bo.cache_dir = cache_dir;
    const harness::BenchmarkReport report = harness::run_benchmark(g, ds, bo);
    std::cout << harness::render_report(report, harness::ReportFormat::markdown);
    const bool any_failed = std::any_of(report.runs.begin(), report.runs.end(),
                                        [](const harness::RunResult& r) { return r.failed(); });
    if (any_failed) std::cerr << "some cells failed; see the report\n";
  } else if (*search) {
    const corpus::Corpus docs = corpus::load_corpus(corpus_path);
    const auto idx = corpus::split_indices(docs.size(), corpus::SplitSpec{0.7, 0.15, 0.15, split_seed});
    auto pick = [&docs](const std::vector<std::size_t>& rows) {
      corpus::Corpus out;
      for (std::size_t i : rows) out.documents.push_back(docs.documents[i]);
      return out;
    };
    const corpus::Corpus train_docs = pick(idx[0]);
    const corpus::Corpus dev_docs = pick(idx[1]);
    harness::DatasetOptions dopt = emb.dataset_options(sf.vocab_size, true);
    if (dopt.embeddings_path) {
      const auto all = corpus::load_embeddings(*dopt.embeddings_path, docs.size());
      std::vector<corpus::ContextEmbedding> rows;
      for (std::size_t i : idx[0]) rows.push_back(all[i]);
      dopt.embeddings = std::move(rows);
    }
    const harness::Dataset ds = harness::prepare_dataset("train", train_docs, dopt);
    harness::SearchOptions so;
    so.s_grid = parse_counts(s_grid);
    so.budget = budget;
    so.seed = sf.seed;
    so.base = sf.config();
    const harness::SearchResult result = harness::hyperparam_search(ds, dev_docs, sf.topics, so);
    for (const auto& c : result.candidates) {
      std::cout << "S=" << c.params.s << " lambda=" << std::setprecision(4) << c.params.lambda
                << " NPMI=" << fmt(c.npmi) << '\n';
    }
    std::cout << "best S=" << result.best.s << " lambda=" << result.best.lambda << " NPMI=" << fmt(result.best_npmi)
              << '\n';
  } else if (*classify) {
    const model::Checkpoint ckpt = model::load_checkpoint(model_path);
    const corpus::Corpus docs = corpus::load_corpus(corpus_path, labels_path);
    const corpus::PreparedCorpus data = prepare_for_model(ckpt, docs, emb_path);
    const auto theta = ckpt.model.infer_theta(data);
    const auto idx = corpus::split_indices(data.bows.size(), corpus::SplitSpec{0.7, 0.15, 0.15, split_seed});
    auto features = [&theta](const std::vector<std::size_t>& rows) {
      std::vector<std::vector<double>> out;
      for (std::size_t i : rows) out.push_back(theta[i].theta);
      return out;
    };
    auto labels = [&data](const std::vector<std::size_t>& rows) {
      std::vector<std::string> out;
      for (std::size_t i : rows) out.push_back((*data.corpus.labels)[i]);
      return out;
    };
    const double acc = harness::classify(features(idx[0]), labels(idx[0]), features(idx[2]), labels(idx[2]), cc);
    const double base = harness::majority_baseline(labels(idx[0]), labels(idx[2]));
    std::cout << std::fixed << std::setprecision(4) << "accuracy " << acc << "\nmajority baseline " << base << '\n';
  } else if (*synth) {
    const corpus::Corpus docs = harness::synthetic_corpus(spec);
    corpus::write_corpus(out_path, docs);
    if (!labels_path.empty()) corpus::write_labels(labels_path, *docs.labels);
    std::cout << "wrote " << docs.size() << " documents to " << out_path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ctmneg::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ctmneg::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const ctmneg::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
