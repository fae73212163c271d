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

// Percentile bootstrap confidence intervals for per-sample metric scores.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "senssum/error.hpp"
#include "senssum/prng.hpp"

namespace senssum {

struct MetricSummary {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  std::size_t n = 0;
  std::size_t b = 0;
  std::uint64_t seed = 0;

  double halfwidth() const noexcept { return 0.5 * (ci_high - ci_low); }

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

inline constexpr std::size_t kDefaultResamples = 1000;
inline constexpr std::uint64_t kDefaultSeed = 20240901;

namespace detail {

inline double plain_mean(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

// Linear interpolation between order statistics at position q * (n - 1).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

// Two-sided percentile interval over an explicit multiset of resample means.
inline std::pair<double, double> percentile_interval(std::vector<double> resample_means,
                                                     double level) {
  if (resample_means.empty()) throw InvalidInput("percentile_interval: no resamples");
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("percentile_interval: level not in (0,1)");
  std::sort(resample_means.begin(), resample_means.end());
  const double alpha = 1.0 - level;
  return {detail::quantile_sorted(resample_means, alpha / 2.0),
          detail::quantile_sorted(resample_means, 1.0 - alpha / 2.0)};
}

// Nonparametric bootstrap: `b` resamples of size n drawn with replacement via
// Prng(seed), index = next() % n. The interval is widened to contain the mean
// when a skewed resample distribution would otherwise exclude it.
inline MetricSummary bootstrap_ci(std::span<const double> scores,
                                  std::size_t b = kDefaultResamples, double level = 0.95,
                                  std::uint64_t seed = kDefaultSeed) {
  if (scores.empty()) throw InvalidInput("bootstrap_ci: empty score list");
  if (b < 1) throw InvalidInput("bootstrap_ci: b must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("bootstrap_ci: level not in (0,1)");

  const std::size_t n = scores.size();
  MetricSummary out;
  out.level = level;
  out.n = n;
  out.b = b;
  out.seed = seed;
  // Constant samples: exact zero-width interval, free of summation rounding.
  if (std::all_of(scores.begin(), scores.end(), [&](double x) { return x == scores[0]; })) {
    out.mean = out.ci_low = out.ci_high = scores[0];
    return out;
  }

  Prng rng(seed);
  std::vector<double> means;
  means.reserve(b);
  for (std::size_t r = 0; r < b; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += scores[rng.below(n)];
    means.push_back(sum / static_cast<double>(n));
  }

  out.mean = detail::plain_mean(scores);
  std::tie(out.ci_low, out.ci_high) = percentile_interval(std::move(means), level);
  out.ci_low = std::min(out.ci_low, out.mean);
  out.ci_high = std::max(out.ci_high, out.mean);
  return out;
}

inline MetricSummary bootstrap_ci(const std::vector<double>& scores,
                                  std::size_t b = kDefaultResamples, double level = 0.95,
                                  std::uint64_t seed = kDefaultSeed) {
  return bootstrap_ci(std::span<const double>(scores), b, level, seed);
}

// "36.0±1.5": one decimal each.
inline std::string format_mean_halfwidth(double mean, double halfwidth, int decimals = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f±%.*f", decimals, mean, decimals, halfwidth);
  return buf;
}

inline std::string format_summary(const MetricSummary& s, double scale = 1.0, int decimals = 1) {
  return format_mean_halfwidth(s.mean * scale, s.halfwidth() * scale, decimals);
}

inline bool intervals_overlap(const MetricSummary& a, const MetricSummary& b) {
  return a.ci_low <= b.ci_high && b.ci_low <= a.ci_high;
}

}  // namespace senssum
