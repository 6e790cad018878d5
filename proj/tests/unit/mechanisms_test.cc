// Copyright 2026 The dpr Authors.
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

#include "dpr/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dpr/accuracy.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpr {
namespace {

using ::dpr::testing::Categorical;
using ::dpr::testing::MakeColumn;
using ::dpr::testing::Numeric;

TEST(ClampTest, TruncatesIntoRange) {
  const std::vector<std::string_view> raw = {"-1", "0.5", "3"};
  const absl::StatusOr<ClampResult> r = ClampColumn(raw, Numeric("x", 0, 1));
  DPR_ASSERT_OK(r);
  EXPECT_EQ(r->column.values, (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(r->clamped, 2);
  EXPECT_EQ(r->column.spec.n, 3);
}

TEST(ClampTest, InsideValuesUnchanged) {
  const std::vector<double> raw = {0.1, 0.2, 0.9};
  const absl::StatusOr<ClampResult> r = ClampValues(raw, Numeric("x", 0, 1));
  DPR_ASSERT_OK(r);
  EXPECT_EQ(r->column.values, raw);
  EXPECT_EQ(r->clamped, 0);
}

TEST(ClampTest, UnknownCategoryGoesToOther) {
  const std::vector<std::string_view> raw = {"A", "C", "B"};
  const absl::StatusOr<ClampResult> r =
      ClampColumn(raw, Categorical("c", {"A", "B"}));
  DPR_ASSERT_OK(r);
  EXPECT_EQ(r->column.values, (std::vector<double>{0, 2, 1}));
  EXPECT_EQ(r->clamped, 1);
}

TEST(ClampTest, MissingTokensBecomeNan) {
  const std::vector<std::string_view> raw = {"1", "", "NA", "2"};
  const absl::StatusOr<ClampResult> r = ClampColumn(raw, Numeric("x", 0, 5));
  DPR_ASSERT_OK(r);
  EXPECT_EQ(r->missing, 2);
  EXPECT_TRUE(std::isnan(r->column.values[1]));
  EXPECT_EQ(r->column.spec.n, 4);
}

TEST(ClampTest, BadTokenNamesRow) {
  const std::vector<std::string_view> raw = {"1", "2", "abc"};
  const absl::StatusOr<ClampResult> r = ClampColumn(raw, Numeric("x", 0, 5));
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.status().message().find("row 3"), std::string::npos)
      << r.status();
}

TEST(LaplaceTest, RejectsNonPositiveScale) {
  SecureRandom rng = SecureRandom::Deterministic(1);
  EXPECT_FALSE(LaplaceNoise(0, rng).ok());
  EXPECT_FALSE(LaplaceNoise(-1, rng).ok());
}

TEST(LaplaceTest, MomentsTailAndKolmogorovSmirnov) {
  SecureRandom rng = SecureRandom::Deterministic(2);
  constexpr int kDraws = 1000000;
  const double s = 2.5;
  std::vector<double> x(kDraws);
  double sum = 0;
  int tail = 0;
  for (double& v : x) {
    v = *LaplaceNoise(s, rng);
    sum += v;
    tail += std::abs(v) > s * std::log(20.0);
  }
  EXPECT_NEAR(sum / kDraws, 0, 5 * s * 1e-3);
  EXPECT_NEAR(static_cast<double>(tail) / kDraws, 0.05, 0.01);
  std::sort(x.begin(), x.end());
  double ks = 0;
  for (int i = 0; i < kDraws; ++i) {
    const double cdf = x[i] < 0 ? 0.5 * std::exp(x[i] / s)
                                : 1 - 0.5 * std::exp(-x[i] / s);
    ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / kDraws),
                   std::abs(cdf - static_cast<double>(i + 1) / kDraws)});
  }
  EXPECT_LT(ks, 0.002);
}

TEST(DpMeanTest, NoiseScaleMatchesCalibration) {
  // [0,1], n = 1000, eps = 0.1: Laplace scale 0.01, so the mean absolute
  // deviation from the true mean is 0.01 (clamping aside).
  std::vector<double> values(1000, 0.5);
  const Column column = MakeColumn(Numeric("x", 0, 1), values);
  SecureRandom rng = SecureRandom::Deterministic(3);
  double mad = 0;
  constexpr int kTrials = 20000;
  for (int i = 0; i < kTrials; ++i) {
    const absl::StatusOr<ReleaseValue> r = DpMean(column, 0.1, rng);
    DPR_ASSERT_OK(r);
    mad += std::abs(r->scalar() - 0.5);
    ASSERT_EQ(r->epsilon_spent(), 0.1);
    ASSERT_EQ(r->delta_spent(), 0);
  }
  EXPECT_NEAR(mad / kTrials, 0.01, 3e-4);
}

TEST(DpMeanTest, HugeEpsilonRecoversMean) {
  std::vector<double> values;
  for (int i = 0; i < 1000; ++i) values.push_back(i % 7);
  const Column column = MakeColumn(Numeric("x", 0, 10), values);
  SecureRandom rng = SecureRandom::Deterministic(4);
  const double truth = std::accumulate(values.begin(), values.end(), 0.0) / 1000;
  const absl::StatusOr<ReleaseValue> r = DpMean(column, 1e6, rng);
  DPR_ASSERT_OK(r);
  EXPECT_NEAR(r->scalar(), truth, 1e-3);
}

TEST(DpMeanTest, ConstantAtUpperBoundStaysInRange) {
  const Column column = MakeColumn(Numeric("x", 0, 4), std::vector<double>(50, 4));
  SecureRandom rng = SecureRandom::Deterministic(5);
  for (int i = 0; i < 10000; ++i) {
    const double v = DpMean(column, 0.01, rng)->scalar();
    ASSERT_LE(v, 4);
    ASSERT_GE(v, 0);
  }
}

TEST(DpMeanTest, EmptyDataRejected) {
  const Column column = MakeColumn(Numeric("x", 0, 1), {});
  SecureRandom rng = SecureRandom::Deterministic(6);
  EXPECT_FALSE(DpMean(column, 1, rng).ok());
}

TEST(DpHistogramTest, SingleBinPreservesTotal) {
  const Column column = MakeColumn(Numeric("x", 0, 1), std::vector<double>(100, 0.3));
  SecureRandom rng = SecureRandom::Deterministic(7);
  const absl::StatusOr<ReleaseValue> r =
      DpHistogram(column, 1e6, HistogramBins::Uniform(0, 1, 1), rng);
  DPR_ASSERT_OK(r);
  ASSERT_EQ(r->values().size(), 1u);
  EXPECT_NEAR(r->values()[0], 100, 1e-3);
}

TEST(DpHistogramTest, CountsNonNegativeAndCategoricalHasOther) {
  const Column column = MakeColumn(Categorical("c", {"a", "b", "c"}), {0, 1, 2, 3, 3, 0});
  SecureRandom rng = SecureRandom::Deterministic(8);
  for (int i = 0; i < 1000; ++i) {
    const absl::StatusOr<ReleaseValue> r = DpHistogram(column, 0.1, {}, rng);
    DPR_ASSERT_OK(r);
    ASSERT_EQ(r->values().size(), 4u);
    ASSERT_EQ(r->labels().back(), "other");
    for (double v : r->values()) ASSERT_GE(v, 0);
  }
}

TEST(DpHistogramTest, EdgesMustCoverRange) {
  const Column column = MakeColumn(Numeric("x", 0, 1), {0.5});
  SecureRandom rng = SecureRandom::Deterministic(9);
  HistogramBins bins;
  bins.edges = {0, 0.5, 0.9};
  EXPECT_FALSE(DpHistogram(column, 1, bins, rng).ok());
}

TEST(DpHistogramTest, NeighborsDifferInAtMostTwoCells) {
  // Sensitivity check on the exact counts: large epsilon makes the release
  // equal to the counts.
  std::vector<double> x = {0.1, 0.4, 0.8, 0.8};
  std::vector<double> y = x;
  y[1] = 0.95;
  SecureRandom rng = SecureRandom::Deterministic(10);
  const auto bins = HistogramBins::Uniform(0, 1, 5);
  const auto hx = DpHistogram(MakeColumn(Numeric("x", 0, 1), x), 1e9, bins, rng);
  const auto hy = DpHistogram(MakeColumn(Numeric("x", 0, 1), y), 1e9, bins, rng);
  DPR_ASSERT_OK(hx);
  DPR_ASSERT_OK(hy);
  double l1 = 0;
  for (size_t i = 0; i < 5; ++i) l1 += std::abs(hx->values()[i] - hy->values()[i]);
  EXPECT_NEAR(l1, 2, 1e-6);
}

TEST(DpCdfTest, MonotoneInUnitIntervalEndingAtOne) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<double> values(500);
  for (double& v : values) v = u(gen);
  const Column column = MakeColumn(Numeric("x", 0, 10), values);
  SecureRandom rng = SecureRandom::Deterministic(11);
  for (int i = 0; i < 2000; ++i) {
    const absl::StatusOr<ReleaseValue> r = DpCdf(column, 0.05, 16, rng);
    DPR_ASSERT_OK(r);
    const std::vector<double>& v = r->values();
    ASSERT_EQ(v.size(), 16u);
    ASSERT_EQ(r->grid().back(), 10);
    ASSERT_EQ(v.back(), 1.0);
    for (size_t j = 0; j < v.size(); ++j) {
      ASSERT_GE(v[j], 0);
      ASSERT_LE(v[j], 1);
      if (j > 0) ASSERT_LE(v[j - 1], v[j]);
    }
  }
}

TEST(DpCdfTest, GridMustBePowerOfTwo) {
  const Column column = MakeColumn(Numeric("x", 0, 1), {0.5});
  SecureRandom rng = SecureRandom::Deterministic(12);
  EXPECT_FALSE(DpCdf(column, 1, 12, rng).ok());
  EXPECT_FALSE(DpCdf(column, 1, 1, rng).ok());
}

TEST(DpCdfTest, HugeEpsilonRecoversEmpiricalCdf) {
  const std::vector<double> values = {0.05, 0.3, 0.3, 0.6, 0.99};
  const Column column = MakeColumn(Numeric("x", 0, 1), values);
  SecureRandom rng = SecureRandom::Deterministic(13);
  const absl::StatusOr<ReleaseValue> r = DpCdf(column, 1e9, 4, rng);
  DPR_ASSERT_OK(r);
  // Cells [0,.25), [.25,.5), [.5,.75), [.75,1].
  const std::vector<double> expected = {0.2, 0.6, 0.8, 1.0};
  for (size_t i = 0; i < 4; ++i) EXPECT_NEAR(r->values()[i], expected[i], 1e-6);
}

TEST(DpQuantileTest, RejectsLevelsOutsideUnitInterval) {
  const Column column = MakeColumn(Numeric("x", 0, 1), {0.5});
  SecureRandom rng = SecureRandom::Deterministic(14);
  EXPECT_FALSE(DpQuantile(column, 1, 0, rng).ok());
  EXPECT_FALSE(DpQuantile(column, 1, 1, rng).ok());
}

TEST(DpQuantileTest, HugeEpsilonPicksBestCell) {
  std::vector<double> values;
  for (int i = 0; i < 100; ++i) values.push_back(i < 30 ? 0.1 : 0.7);
  const Column column = MakeColumn(Numeric("x", 0, 1), values);
  SecureRandom rng = SecureRandom::Deterministic(15);
  // q = 0.3: 30 values sit below every midpoint in (0.1, 0.7].
  const absl::StatusOr<ReleaseValue> r = DpQuantile(column, 1e6, 0.3, rng, 10);
  DPR_ASSERT_OK(r);
  EXPECT_GT(r->scalar(), 0.1);
  EXPECT_LE(r->scalar(), 0.7);
}

TEST(DpQuantileTest, ConstantColumnCellContainsValue) {
  const Column column = MakeColumn(Numeric("x", 0, 1), std::vector<double>(200, 0.42));
  SecureRandom rng = SecureRandom::Deterministic(16);
  int hits = 0;
  for (int i = 0; i < 200; ++i) {
    const double v = DpQuantile(column, 50, 0.5, rng, 100)->scalar();
    hits += std::abs(v - 0.42) <= 0.01;
  }
  EXPECT_GE(hits, 190);
}

TEST(DpQuantileTest, UniformMedianWithinFiveHundredths) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> values(10000);
  for (double& v : values) v = u(gen);
  const Column column = MakeColumn(Numeric("x", 0, 1), values);
  SecureRandom rng = SecureRandom::Deterministic(18);
  int within = 0;
  for (int i = 0; i < 1000; ++i) {
    within += std::abs(DpQuantile(column, 1, 0.5, rng)->scalar() - 0.5) <= 0.05;
  }
  EXPECT_GE(within, 950);
}

TEST(SnapTest, OutputsOnGridWithinBound) {
  SecureRandom rng = SecureRandom::Deterministic(19);
  SnapParams p;
  p.bound = 3;
  p.grid = 0.25;
  p.sensitivity = 1;
  for (int i = 0; i < 100000; ++i) {
    const double v = *Snap(1.3, p, 0.5, rng);
    ASSERT_LE(std::abs(v), 3);
    ASSERT_EQ(std::fmod(v, 0.25), 0);
  }
}

TEST(SnapTest, HugeEpsilonRoundsToNearestGridPoint) {
  SecureRandom rng = SecureRandom::Deterministic(20);
  SnapParams p;
  p.bound = 10;
  p.grid = 0.5;
  EXPECT_EQ(*Snap(1.3, p, 1e12, rng), 1.5);
  EXPECT_EQ(*Snap(-2.2, p, 1e12, rng), -2.0);
  EXPECT_EQ(*Snap(40, p, 1e12, rng), 10);
}

TEST(SnapTest, RejectsBadParameters) {
  SecureRandom rng = SecureRandom::Deterministic(21);
  SnapParams p;
  p.bound = 1;
  p.grid = 0.3;
  EXPECT_FALSE(Snap(0, p, 1, rng).ok());
  p.grid = 4;
  EXPECT_FALSE(Snap(0, p, 1, rng).ok());
}

TEST(SnapTest, MeanViaSnappingStaysInRange) {
  std::vector<double> values(1000, 7);
  const Column column = MakeColumn(Numeric("x", 2, 8), values);
  SecureRandom rng = SecureRandom::Deterministic(22);
  for (int i = 0; i < 2000; ++i) {
    const absl::StatusOr<ReleaseValue> r = DpMeanSnapping(column, 0.5, rng);
    DPR_ASSERT_OK(r);
    ASSERT_GE(r->scalar(), 2);
    ASSERT_LE(r->scalar(), 8);
    ASSERT_EQ(r->mechanism(), "snapping");
  }
}

TEST(DeterminismTest, SameSeedSameRelease) {
  std::vector<double> values;
  for (int i = 0; i < 300; ++i) values.push_back(i % 11);
  const Column column = MakeColumn(Numeric("x", 0, 10), values);
  SecureRandom a = SecureRandom::Deterministic(23);
  SecureRandom b = SecureRandom::Deterministic(23);
  EXPECT_EQ(DpMean(column, 0.3, a)->scalar(), DpMean(column, 0.3, b)->scalar());
  EXPECT_EQ(DpCdf(column, 0.3, 8, a)->values(), DpCdf(column, 0.3, 8, b)->values());
  EXPECT_EQ(DpHistogram(column, 0.3, HistogramBins::Uniform(0, 10, 4), a)->values(),
            DpHistogram(column, 0.3, HistogramBins::Uniform(0, 10, 4), b)->values());
}

}  // namespace
}  // namespace dpr
