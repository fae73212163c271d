// Copyright 2026 The senssum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Per-sample score files and the system comparison table.

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "senssum/bootstrap.hpp"
#include "senssum/error.hpp"

namespace senssum {

struct ScoreLine {
  std::string id;
  std::string metric;
  double value = 0.0;

  friend bool operator==(const ScoreLine&, const ScoreLine&) = default;
};

inline void write_scores(std::ostream& out, const std::vector<ScoreLine>& scores) {
  for (const auto& s : scores) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["metric"] = s.metric;
    j["value"] = s.value;
    out << j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << '\n';
  }
}

inline std::vector<ScoreLine> read_scores(std::istream& in) {
  std::vector<ScoreLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("metric").get<std::string>(),
                     j.at("value").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(lineno, std::string("malformed score line: ") + e.what());
    }
  }
  return out;
}

// Metric name -> per-sample values, in file order.
inline std::map<std::string, std::vector<double>> group_scores(const std::vector<ScoreLine>& s) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& x : s) out[x.metric].push_back(x.value);
  return out;
}

inline nlohmann::ordered_json to_json(const MetricSummary& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["ci_low"] = s.ci_low;
  j["ci_high"] = s.ci_high;
  j["level"] = s.level;
  j["n"] = s.n;
  j["b"] = s.b;
  j["seed"] = s.seed;
  return j;
}

inline constexpr const char* kMetricRougeL = "rouge-l";
inline constexpr const char* kMetricBertScore = "bertscore";
inline constexpr const char* kMetricCr = "cr";

struct SystemResult {
  std::string name;
  std::map<std::string, MetricSummary> metrics;
};

// One row per system sorted by ROUGE-L (descending, stable); columns
// ROUGE-L, BERTScore when present, CR. ROUGE-L and BERTScore are fractions
// shown as percentages; CR is already a percentage.
inline std::string render_report(std::vector<SystemResult> systems) {
  if (systems.empty()) return {};
  std::set<std::string> keys;
  for (const auto& [k, v] : systems.front().metrics) keys.insert(k);
  for (const auto& s : systems) {
    std::set<std::string> mine;
    for (const auto& [k, v] : s.metrics) mine.insert(k);
    if (mine != keys) throw DataError("render_report: system '" + s.name + "' has a different metric set");
  }
  if (!keys.count(kMetricRougeL)) throw DataError("render_report: ROUGE-L is required");

  struct Column {
    std::string key, title;
    double scale;
  };
  std::vector<Column> cols{{kMetricRougeL, "ROUGE-L", 100.0}};
  if (keys.count(kMetricBertScore)) cols.push_back({kMetricBertScore, "BERTScore", 100.0});
  if (keys.count(kMetricCr)) cols.push_back({kMetricCr, "CR (%)", 1.0});

  std::stable_sort(systems.begin(), systems.end(), [](const SystemResult& a, const SystemResult& b) {
    return a.metrics.at(kMetricRougeL).mean > b.metrics.at(kMetricRougeL).mean;
  });

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Model"});
  for (const auto& c : cols) rows[0].push_back(c.title);
  for (const auto& s : systems) {
    std::vector<std::string> row{s.name};
    for (const auto& c : cols) row.push_back(format_summary(s.metrics.at(c.key), c.scale));
    rows.push_back(std::move(row));
  }

  // Width in scalar values so "±" counts as one column.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(rows[0].size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], width(r[i]));

  std::string out;
  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    const auto& r = rows[ri];
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += " | ";
      out += r[i];
      if (i + 1 < r.size()) out.append(widths[i] - width(r[i]), ' ');
    }
    out += '\n';
    if (ri == 0) {
      for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i) out += "-+-";
        out.append(widths[i], '-');
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace senssum
