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


#include <catch_amalgamated.hpp>

#include <map>

#include "senssum/bootstrap.hpp"

using namespace senssum;
using Catch::Approx;

TEST_CASE("splitmix64 reference outputs", "[prng]") {
  Prng p(0);
  CHECK(p.next() == 0xE220A8397B1DCDAFULL);
  CHECK(p.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(p.next() == 0x06C45D188009454FULL);
  CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
  CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
  Prng q(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = q.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(q.below(3) < 3);
  }
  CHECK(derive_seed(1, 1) != derive_seed(1, 2));
  CHECK(derive_seed(1, 1) == derive_seed(1, 1));
}

TEST_CASE("degenerate samples give zero-width intervals", "[bootstrap]") {
  const auto s = bootstrap_ci(std::vector<double>(30, 0.5));
  CHECK(s.mean == 0.5);
  CHECK(s.ci_low == 0.5);
  CHECK(s.ci_high == 0.5);
  CHECK(s.halfwidth() == 0.0);
  CHECK(s.n == 30);
  CHECK(s.b == kDefaultResamples);
  CHECK(s.seed == kDefaultSeed);
  const auto one = bootstrap_ci(std::vector<double>{0.25}, 10);
  CHECK(one.ci_low == 0.25);
  CHECK(one.ci_high == 0.25);
  // values whose repeated sum does not divide back exactly
  for (double v : {0.37, 0.1, 42.5})
    for (std::size_t n : {3, 5, 7, 100}) {
      const auto c = bootstrap_ci(std::vector<double>(n, v));
      CHECK(c.mean == v);
      CHECK(c.ci_low == v);
      CHECK(c.ci_high == v);
    }
}

TEST_CASE("n=2 exhaustive resample multiset", "[bootstrap][oracle]") {
  // Resamples of {0,1}: (0,0) (0,1) (1,0) (1,1) -> means {0, .5, .5, 1}.
  const std::vector<double> means{1.0, 0.5, 0.0, 0.5};
  // Positions 0.025*3 and 0.975*3 on the sorted multiset.
  const auto [lo, hi] = percentile_interval(means, 0.95);
  CHECK(lo == Approx(0.0 + 0.075 * 0.5));
  CHECK(hi == Approx(0.5 + 0.925 * 0.5));
  const auto [lo50, hi50] = percentile_interval(means, 0.5);
  CHECK(lo50 == Approx(0.375));
  CHECK(hi50 == Approx(0.625));

  // Random resampling reproduces the multiset's frequencies.
  const std::vector<double> xs{0.0, 1.0};
  Prng rng(kDefaultSeed);
  std::map<double, int> freq;
  const int b = 40000;
  for (int r = 0; r < b; ++r) {
    const double m = (xs[rng.below(2)] + xs[rng.below(2)]) / 2.0;
    ++freq[m];
  }
  REQUIRE(freq.size() == 3);
  CHECK(freq[0.0] / double(b) == Approx(0.25).margin(0.01));
  CHECK(freq[0.5] / double(b) == Approx(0.5).margin(0.01));
  CHECK(freq[1.0] / double(b) == Approx(0.25).margin(0.01));
  const auto s = bootstrap_ci(xs, 4000);
  CHECK(s.mean == 0.5);
  CHECK(s.ci_low == 0.0);
  CHECK(s.ci_high == 1.0);
}

TEST_CASE("fixed seed gives a frozen summary", "[bootstrap]") {
  std::vector<double> xs;
  Prng r(42);
  for (int i = 0; i < 50; ++i) xs.push_back(r.uniform());
  const auto a = bootstrap_ci(xs);
  const auto b = bootstrap_ci(xs);
  CHECK(a == b);
  // Frozen on x86-64 with -ffp-contract=off; any platform must reproduce these bits.
  CHECK(a.mean == 0x1.e849bd803082cp-2);
  CHECK(a.ci_low == 0x1.98cda2a96732ap-2);
  CHECK(a.ci_high == 0x1.1f5ffffc40d96p-1);
  CHECK(bootstrap_ci(xs, 1000, 0.95, 1) != a);
}

TEST_CASE("interval contains the mean and shrinks with n", "[bootstrap][property]") {
  Prng data(99);
  double prev = 1e9;
  for (std::size_t n : {10u, 40u, 160u, 640u}) {
    double total = 0.0;
    for (int run = 0; run < 40; ++run) {
      std::vector<double> xs(n);
      for (auto& x : xs) x = data.uniform();
      const auto s = bootstrap_ci(xs, 400, 0.95, derive_seed(7, static_cast<std::uint64_t>(run)));
      REQUIRE(s.ci_low <= s.mean);
      REQUIRE(s.mean <= s.ci_high);
      total += s.halfwidth();
    }
    const double avg = total / 40.0;
    CHECK(avg < prev);
    prev = avg;
  }
}

TEST_CASE("interval is clamped to contain the mean", "[bootstrap]") {
  // strongly skewed: one outlier
  std::vector<double> xs(20, 0.0);
  xs[0] = 100.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = bootstrap_ci(xs, 50, 0.95, seed);
    REQUIRE(s.ci_low <= s.mean);
    REQUIRE(s.mean <= s.ci_high);
  }
}

TEST_CASE("bootstrap preconditions", "[bootstrap]") {
  CHECK_THROWS_AS(bootstrap_ci(std::vector<double>{}), InvalidInput);
  CHECK_THROWS_AS(bootstrap_ci(std::vector<double>{1.0}, 0), InvalidInput);
  CHECK_THROWS_AS(bootstrap_ci(std::vector<double>{1.0}, 10, 1.0), InvalidInput);
  CHECK_THROWS_AS(percentile_interval({}, 0.9), InvalidInput);
}

TEST_CASE("mean and halfwidth formatting", "[bootstrap][format]") {
  CHECK(format_mean_halfwidth(35.97, 1.54) == "36.0±1.5");
  CHECK(format_mean_halfwidth(50.0, 0.0) == "50.0±0.0");
  CHECK(format_mean_halfwidth(1.0, 0.25, 2) == "1.00±0.25");
  MetricSummary s{0.3597, 0.3443, 0.3751, 0.95, 10, 1000, 1};
  CHECK(format_summary(s, 100.0) == "36.0±1.5");
  MetricSummary t{0.5, 0.3, 0.36, 0.95, 1, 1, 1};
  MetricSummary u{0.5, 0.37, 0.4, 0.95, 1, 1, 1};
  CHECK_FALSE(intervals_overlap(t, u));
  CHECK(intervals_overlap(s, s));
}
