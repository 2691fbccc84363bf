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
#include <iomanip>
#include <sstream>

#include "ctmneg/errors.hpp"
#include "ctmneg/harness.hpp"

namespace ctmneg::harness {
namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << *v;
  return out.str();
}

std::string render_csv(const BenchmarkReport& report) {
  std::vector<metrics::MetricRow> rows;
  rows.reserve(report.runs.size());
  for (const RunResult& run : report.runs) {
    rows.push_back(metrics::MetricRow{std::string(model::to_string(run.mode)), run.topics, run.seed,
                                      run.failed() ? std::nullopt : run.npmi, run.failed() ? std::nullopt : run.cv,
                                      run.failed() ? std::nullopt : run.irbo});
  }
  return metrics::to_csv(rows);
}

std::string render_markdown(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "# Benchmark: " << report.dataset << "\n\n";
  out << "## Median over runs\n\n";
  out << "| Model | T | Runs | Failed | NPMI | CV | IRBO |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const CellSummary& c : report.cells) {
    out << "| " << model::to_string(c.mode) << " | " << c.topics << " | " << c.completed << " | " << c.failed
        << " | " << cell(c.npmi) << " | " << cell(c.cv) << " | " << cell(c.irbo) << " |\n";
  }
  out << "\n## Across topic counts\n\n";
  out << "| Model | NPMI mean | NPMI median | CV mean | CV median | IRBO mean | IRBO median |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const ModelSummary& m : report.models) {
    out << "| " << model::to_string(m.mode) << " | " << cell(m.npmi.mean) << " | " << cell(m.npmi.median) << " | "
        << cell(m.cv.mean) << " | " << cell(m.cv.median) << " | " << cell(m.irbo.mean) << " | "
        << cell(m.irbo.median) << " |\n";
  }
  bool any_failed = false;
  for (const RunResult& run : report.runs) {
    if (!run.failed()) continue;
    if (!any_failed) out << "\n## Failed runs\n\n";
    any_failed = true;
    out << "- " << model::to_string(run.mode) << " T=" << run.topics << " run " << run.run << ": " << run.error
        << "\n";
  }
  return out.str();
}

}  // namespace

std::string render_report(const BenchmarkReport& report, ReportFormat format) {
  return format == ReportFormat::csv ? render_csv(report) : render_markdown(report);
}

void emit_report(const BenchmarkReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report to " + path.string());
  out << render_report(report, format);
  if (!out) throw DataError("failed writing report to " + path.string());
}

}  // namespace ctmneg::harness
