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

// Sequence-overlap and error-rate metrics on TokenSeq.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "senssum/error.hpp"
#include "senssum/tokens.hpp"

namespace senssum {

namespace detail {

template <typename T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <typename T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline void require_same_unit(const TokenSeq& a, const TokenSeq& b, const char* op) {
  if (a.unit() != b.unit())
    throw InvalidInput(std::string(op) + ": unit mismatch (" +
                       std::string(to_string(a.unit())) + " vs " +
                       std::string(to_string(b.unit())) + ")");
}

inline std::span<const std::string> view(const TokenSeq& s) { return s.tokens(); }

}  // namespace detail

inline std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  detail::require_same_unit(a, b, "lcs_length");
  return detail::lcs_length(detail::view(a), detail::view(b));
}

// Marks which tokens of `a` lie on one longest common subsequence with `b`.
// Backtracking prefers matches, then moving up in `a`, so the choice is
// deterministic.
inline std::vector<bool> lcs_mask(const TokenSeq& a, const TokenSeq& b) {
  detail::require_same_unit(a, b, "lcs_mask");
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> dp((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return dp[i * (m + 1) + j]; };
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = a[i - 1] == b[j - 1] ? at(i - 1, j - 1) + 1
                                      : std::max(at(i - 1, j), at(i, j - 1));
  std::vector<bool> mask(n, false);
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (a[i - 1] == b[j - 1]) {
      mask[i - 1] = true;
      --i;
      --j;
    } else if (at(i - 1, j) >= at(i, j - 1)) {
      --i;
    } else {
      --j;
    }
  }
  return mask;
}

inline std::size_t edit_distance(const TokenSeq& a, const TokenSeq& b) {
  detail::require_same_unit(a, b, "edit_distance");
  return detail::edit_distance(detail::view(a), detail::view(b));
}

// WER for word units, CER for character units. May exceed 1.
inline double error_rate(const TokenSeq& hyp, const TokenSeq& ref) {
  detail::require_same_unit(hyp, ref, "error_rate");
  if (ref.empty()) throw InvalidInput("error_rate: empty reference");
  return static_cast<double>(edit_distance(hyp, ref)) / static_cast<double>(ref.size());
}

// Percentage: 100 * |summary| / |input|.
inline double compression_rate(const TokenSeq& summary, const TokenSeq& input) {
  detail::require_same_unit(summary, input, "compression_rate");
  if (input.empty()) throw InvalidInput("compression_rate: empty input");
  return 100.0 * static_cast<double>(summary.size()) / static_cast<double>(input.size());
}

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;

  friend bool operator==(const RougeScore&, const RougeScore&) = default;
};

inline double harmonic_mean(double p, double r) {
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

// Sentence-level ROUGE-L F1 against a single reference.
inline RougeScore rouge_l(const TokenSeq& hyp, const TokenSeq& ref) {
  detail::require_same_unit(hyp, ref, "rouge_l");
  if (hyp.empty() || ref.empty()) return {};
  const auto lcs = static_cast<double>(lcs_length(hyp, ref));
  RougeScore s;
  s.precision = lcs / static_cast<double>(hyp.size());
  s.recall = lcs / static_cast<double>(ref.size());
  s.f = harmonic_mean(s.precision, s.recall);
  return s;
}

// Multiple references: the reference with the highest F wins (first on ties).
inline RougeScore rouge_l(const TokenSeq& hyp, std::span<const TokenSeq> refs) {
  if (refs.empty()) throw InvalidInput("rouge_l: empty reference list");
  RougeScore best;
  bool first = true;
  for (const auto& ref : refs) {
    const RougeScore s = rouge_l(hyp, ref);
    if (first || s.f > best.f) best = s;
    first = false;
  }
  return best;
}

inline RougeScore rouge_l(const TokenSeq& hyp, const std::vector<TokenSeq>& refs) {
  return rouge_l(hyp, std::span<const TokenSeq>(refs));
}

// Contextual embeddings for one tokenized sentence.
struct EmbeddingSeq {
  std::vector<std::vector<double>> vectors;
  std::size_t dim = 0;
  std::optional<std::vector<double>> idf;

  void validate() const {
    if (dim == 0) throw InvalidInput("EmbeddingSeq: dim must be positive");
    for (const auto& v : vectors)
      if (v.size() != dim) throw InvalidInput("EmbeddingSeq: vector length != dim");
    if (idf) {
      if (idf->size() != vectors.size())
        throw InvalidInput("EmbeddingSeq: idf length != token count");
      for (double w : *idf)
        if (!(w >= 0.0)) throw InvalidInput("EmbeddingSeq: negative idf weight");
    }
  }
};

struct BertScoreOptions {
  bool use_idf = false;
};

// Greedy cosine matching without baseline rescaling.
inline RougeScore bertscore_greedy(const EmbeddingSeq& hyp, const EmbeddingSeq& ref,
                                   BertScoreOptions opts = {}) {
  hyp.validate();
  ref.validate();
  if (hyp.dim != ref.dim) throw InvalidInput("bertscore_greedy: dimension mismatch");
  if (hyp.vectors.empty() || ref.vectors.empty())
    throw InvalidInput("bertscore_greedy: empty embedding sequence");

  auto normalized = [](const EmbeddingSeq& e) {
    std::vector<std::vector<double>> out;
    out.reserve(e.vectors.size());
    for (const auto& v : e.vectors) {
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) throw InvalidInput("bertscore_greedy: zero-norm vector");
      std::vector<double> u(v.size());
      for (std::size_t k = 0; k < v.size(); ++k) u[k] = v[k] / norm;
      out.push_back(std::move(u));
    }
    return out;
  };
  const auto h = normalized(hyp);
  const auto r = normalized(ref);

  std::vector<double> best_h(h.size(), -1.0), best_r(r.size(), -1.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      double sim = 0.0;
      for (std::size_t k = 0; k < h[i].size(); ++k) sim += h[i][k] * r[j][k];
      best_h[i] = std::max(best_h[i], sim);
      best_r[j] = std::max(best_r[j], sim);
    }
  }

  auto weighted_mean = [&](const std::vector<double>& best, const EmbeddingSeq& e) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < best.size(); ++i) {
      const double w = opts.use_idf && e.idf ? (*e.idf)[i] : 1.0;
      num += w * best[i];
      den += w;
    }
    return den > 0.0 ? num / den : 0.0;
  };

  RougeScore s;
  s.precision = weighted_mean(best_h, hyp);
  s.recall = weighted_mean(best_r, ref);
  s.f = harmonic_mean(s.precision, s.recall);
  return s;
}

}  // namespace senssum
