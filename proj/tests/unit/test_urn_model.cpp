#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "stats.hpp"
#include "urns/urn_model.hpp"

using namespace urns;

namespace {

std::vector<std::uint64_t> brute_force_counts(const std::vector<Label>& labels) {
  std::vector<std::uint64_t> out{0};
  std::set<Label> seen;
  for (Label x : labels) {
    seen.insert(x);
    out.push_back(seen.size());
  }
  return out;
}

Stream make_stream(std::initializer_list<Label> xs) { return Stream{std::vector<Label>(xs)}; }

}  // namespace

TEST(ZipfLaw, SingleUrn) {
  const auto law = zipf_law(0.5, 1);
  EXPECT_EQ(law.support(), 1u);
  EXPECT_DOUBLE_EQ(law.probability(1), 1.0);
}

TEST(ZipfLaw, TwoUrns) {
  const auto probs = zipf_law(0.5, 2).probs();
  ASSERT_EQ(probs.size(), 2u);
  EXPECT_NEAR(probs[0], 0.8, 1e-15);
  EXPECT_NEAR(probs[1], 0.2, 1e-15);
}

TEST(ZipfLaw, FirstProbabilityMatchesDirectSum) {
  const std::uint64_t n = 1000000;
  long double s = 0.0L;
  for (std::uint64_t i = n; i >= 1; --i) s += 1.0L / (static_cast<long double>(i) * i);
  const auto law = zipf_law(0.5, n);
  EXPECT_NEAR(law.probability(1), static_cast<double>(1.0L / s), 1e-14);
  EXPECT_NEAR(law.normalization(), static_cast<double>(1.0L / s), 1e-14);
}

TEST(ZipfLaw, PowerLawShapeAndNormalization) {
  for (double theta : {0.3, 0.5, 0.7}) {
    const auto law = zipf_law(theta, 100000);
    const auto probs = law.probs();
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double expected = law.normalization() * std::pow(static_cast<double>(i + 1), -1.0 / theta);
      EXPECT_LE(std::abs(probs[i] - expected), 1e-12 * expected);
      if (i > 0) EXPECT_LE(probs[i], probs[i - 1]);
      total += probs[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(ZipfLaw, HugeSupportStaysParametric) {
  const auto law = zipf_law(0.7, 1000000000000ULL);
  EXPECT_TRUE(law.is_parametric());
  EXPECT_GT(law.probability(1), 0.0);
  EXPECT_NEAR(sum_over_urns(law, [](double p) { return p; }), 1.0, 1e-10);
  EXPECT_THROW((void)law.probs(), std::length_error);
}

TEST(ZipfLaw, RejectsBadArguments) {
  EXPECT_THROW(zipf_law(0.0, 10), std::invalid_argument);
  EXPECT_THROW(zipf_law(1.0, 10), std::invalid_argument);
  EXPECT_THROW(zipf_law(-0.2, 10), std::invalid_argument);
  EXPECT_THROW(zipf_law(0.5, 0), std::invalid_argument);
}

TEST(ZipfLaw, PerturbedLawIsNormalizedAndDecreasing) {
  const auto law = ProbabilityLaw::zipf(0.5, 50000, 0.5);
  const auto probs = law.probs();
  EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(probs.rbegin(), probs.rend()));
}

TEST(ZipfLaw, TailSafeSupportBoundsTheTail) {
  const auto n = 100000u;
  const auto big = tail_safe_support(0.5, n);
  const auto law = zipf_law(0.5, big);
  EXPECT_GT(big, n);
  EXPECT_GT(law.tail_mass_bound(), 0.0);
  EXPECT_LT(law.tail_mass_bound() * n, 1e-4 * exact_mean_occupancy(law, n) * 1.01);
}

TEST(ExplicitLaw, Validation) {
  EXPECT_NO_THROW(ProbabilityLaw::from_probs({0.8, 0.2}));
  EXPECT_THROW(ProbabilityLaw::from_probs({0.2, 0.8}), std::invalid_argument);
  EXPECT_THROW(ProbabilityLaw::from_probs({0.5, 0.4}), std::invalid_argument);
  EXPECT_THROW(ProbabilityLaw::from_probs({1.0, 0.0}), std::invalid_argument);
}

TEST(AlphaOf, SmallLaw) {
  const auto law = zipf_law(0.5, 2);
  EXPECT_EQ(alpha_of(law, 2.0).count, 1u);
  EXPECT_EQ(alpha_of(law, 5.0).count, 2u);
  const auto none = alpha_of(law, 1.0);
  EXPECT_EQ(none.count, 0u);
  EXPECT_TRUE(none.empty);
}

TEST(AlphaOf, MatchesLinearScanAndClosedForm) {
  const auto law = zipf_law(0.5, 10000);
  const double c = law.normalization();
  const double x = 400.0 / c;
  const auto probs = law.probs();
  std::uint64_t scan = 0;
  for (std::size_t k = 0; k < probs.size(); ++k)
    if (probs[k] >= 1.0 / x) scan = k + 1;
  const auto a = alpha_of(law, x);
  EXPECT_EQ(a.count, scan);
  EXPECT_EQ(a.count, 20u);
  for (double y : {3.0, 17.5, 1234.0, 1e6, 1e12}) {
    std::uint64_t s = 0;
    for (std::size_t k = 0; k < probs.size(); ++k)
      if (probs[k] >= 1.0 / y) s = k + 1;
    EXPECT_EQ(alpha_of(law, y).count, s) << y;
  }
}

TEST(SampleStream, DegenerateLaw) {
  const auto law = ProbabilityLaw::from_probs({1.0});
  const auto s = sample_stream(law, 5, 123);
  EXPECT_EQ(s.labels, (std::vector<Label>{1, 1, 1, 1, 1}));
}

TEST(SampleStream, Deterministic) {
  const auto law = zipf_law(0.5, 1000);
  EXPECT_EQ(sample_stream(law, 1000, 42).labels, sample_stream(law, 1000, 42).labels);
  EXPECT_NE(sample_stream(law, 1000, 42).labels, sample_stream(law, 1000, 43).labels);
}

TEST(SampleStream, LabelsWithinSupport) {
  const auto law = zipf_law(0.7, 5000);
  const auto s = sample_stream(law, 100000, 5);
  for (Label x : s.labels) {
    ASSERT_GE(x, 1u);
    ASSERT_LE(x, 5000u);
  }
}

TEST(SampleStream, FirstLabelFrequency) {
  const auto law = zipf_law(0.5, 1000);
  const std::size_t n = 100000;
  const auto s = sample_stream(law, n, 2024);
  const double p = law.probability(1);
  const double freq = static_cast<double>(std::count(s.labels.begin(), s.labels.end(), 1u)) / n;
  EXPECT_LE(std::abs(freq - p), 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(SampleStream, FrequenciesMatchLawAcrossHeadAndTail) {
  // Head (alias) and deep tail (rejection-inversion) both visited.
  const auto law = zipf_law(0.7, 100000000);
  const UrnSampler sampler(law);
  const std::size_t n = 2000000;
  const auto s = sample_stream(sampler, n, 77);
  const std::vector<std::pair<Label, Label>> bins = {
      {1, 1}, {2, 10}, {11, 1000}, {1001, 262144}, {262145, 10000000}, {10000001, 100000000}};
  for (auto [lo, hi] : bins) {
    double p = 0.0;
    for (Label i = lo; i <= std::min<Label>(hi, 300000); ++i) p += law.probability(i);
    if (hi > 300000) {
      // Integral approximation for the far tail bins.
      const double a = static_cast<double>(std::max<Label>(lo, 300001)) - 0.5, b = static_cast<double>(hi) + 0.5;
      const double s_exp = 1.0 / 0.7;
      p += law.normalization() * (std::pow(a, 1 - s_exp) - std::pow(b, 1 - s_exp)) / (s_exp - 1);
    }
    const double cnt = static_cast<double>(
        std::count_if(s.labels.begin(), s.labels.end(), [&](Label x) { return x >= lo && x <= hi; }));
    const double freq = cnt / n;
    EXPECT_LE(std::abs(freq - p), 4.5 * std::sqrt(p * (1 - p) / n) + 1e-6) << lo << ".." << hi;
  }
}

TEST(OccupancyCounts, HandExamples) {
  const auto s = make_stream({1, 2, 1, 3});
  EXPECT_EQ(forward_counts(s).counts, (std::vector<std::uint64_t>{0, 1, 2, 2, 3}));
  EXPECT_EQ(backward_counts(s).counts, (std::vector<std::uint64_t>{0, 1, 2, 3, 3}));
  EXPECT_EQ(backward_counts(s).direction, Direction::backward);
  const auto c = make_stream({5, 5, 5});
  EXPECT_EQ(forward_counts(c).counts, (std::vector<std::uint64_t>{0, 1, 1, 1}));
  EXPECT_EQ(backward_counts(c).counts, (std::vector<std::uint64_t>{0, 1, 1, 1}));
}

TEST(OccupancyCounts, BruteForceOracleAndInvariants) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + rng() % 200;
    const std::uint64_t alphabet = 1 + rng() % 50;
    std::vector<Label> labels(n);
    for (auto& x : labels) x = 1 + rng() % alphabet;
    const Stream s{labels};
    const auto fwd = forward_counts(s);
    const auto bwd = backward_counts(s);
    ASSERT_EQ(fwd.counts, brute_force_counts(labels));
    ASSERT_EQ(bwd.counts, forward_counts(s.reversed()).counts);
    std::vector<Label> rev(labels.rbegin(), labels.rend());
    ASSERT_EQ(bwd.counts, brute_force_counts(rev));
    ASSERT_EQ(fwd.total(), bwd.total());
    for (const auto* p : {&fwd, &bwd}) {
      ASSERT_EQ(p->counts[0], 0u);
      ASSERT_EQ(p->counts[1], 1u);
      for (std::size_t k = 1; k <= n; ++k) {
        ASSERT_LE(p->counts[k] - p->counts[k - 1], 1u);
        ASSERT_LE(p->counts[k], k);
      }
    }
  }
}

TEST(OccupancyCounts, LargeLabelsUseHashPath) {
  const Stream s{{1ULL << 40, 7, 1ULL << 40, 123456789012ULL, 7}};
  EXPECT_EQ(forward_counts(s).counts, (std::vector<std::uint64_t>{0, 1, 2, 2, 3, 3}));
}

TEST(ExactMean, SmallCases) {
  const auto law = ProbabilityLaw::from_probs({0.8, 0.2});
  EXPECT_EQ(exact_mean_occupancy(law, 0), 0.0);
  EXPECT_NEAR(exact_mean_occupancy(law, 1), 1.0, 1e-15);
  EXPECT_NEAR(exact_mean_occupancy(law, 2), 1.32, 1e-15);
  EXPECT_NEAR(exact_mean_occupancy(zipf_law(0.5, 1000), 1), 1.0, 1e-12);
}

TEST(ExactMean, MonotoneAndBounded) {
  const auto law = zipf_law(0.5, 500);
  double prev = 0.0;
  for (double m = 0; m <= 1e6; m = m * 1.7 + 1) {
    const double e = exact_mean_occupancy(law, m);
    EXPECT_GE(e, prev - 1e-9);
    EXPECT_LE(e, 500.0 + 1e-9);
    prev = e;
  }
}

TEST(ExactMean, ParametricMatchesMaterialized) {
  const auto law = zipf_law(0.5, 10000000);
  const auto probs = law.probs();
  const double m = 100000;
  long double direct = 0.0L;
  for (auto it = probs.rbegin(); it != probs.rend(); ++it) direct += -std::expm1(m * std::log1p(-*it));
  EXPECT_NEAR(exact_mean_occupancy(law, m), static_cast<double>(direct), 1e-9 * static_cast<double>(direct));
}

TEST(ExactMean, EmpiricalMeanWithinFourStandardErrors) {
  const auto law = zipf_law(0.5, 100000);
  const UrnSampler sampler(law);
  const std::size_t n = 5000, reps = 1000;
  std::vector<double> r(reps);
  for (std::size_t i = 0; i < reps; ++i) r[i] = forward_counts(sample_stream(sampler, n, derive_seed(11, i))).total();
  const double se = std::sqrt(urns::testing::variance(r) / reps);
  EXPECT_LE(std::abs(urns::testing::mean(r) - exact_mean_occupancy(law, n)), 4 * se);
}

TEST(PoissonMean, Cases) {
  const auto single = ProbabilityLaw::from_probs({1.0});
  EXPECT_EQ(poisson_mean_occupancy(single, 0), 0.0);
  EXPECT_NEAR(poisson_mean_occupancy(single, 1e3), 1.0, 1e-15);
  const auto law = zipf_law(0.5, 1000000);
  const double t = 1e5;
  const double asym = std::tgamma(0.5) * std::sqrt(law.normalization() * t);
  EXPECT_NEAR(poisson_mean_occupancy(law, t) / asym, 1.0, 0.05);
}

TEST(PoissonCov, IndicatorSymmetryAndSubstitution) {
  const auto law = zipf_law(0.5, 10000);
  const std::uint64_t n = 10000;
  EXPECT_EQ(exact_poisson_cov(law, n, 0.4, 0.5), 0.0);
  EXPECT_EQ(exact_poisson_cov(law, n, 0.5, 0.5), 0.0);
  EXPECT_NEAR(exact_poisson_cov(law, n, 1, 1),
              poisson_mean_occupancy(law, 2.0 * n) - poisson_mean_occupancy(law, n), 1e-9);
  for (double t : {0.25, 0.5, 0.75, 1.0})
    for (double u : {0.25, 0.5, 0.75, 1.0})
      EXPECT_EQ(exact_poisson_cov(law, n, t, u), exact_poisson_cov(law, n, u, t));
}

TEST(PoissonCov, MonteCarloCellAtThreeQuarters) {
  const auto law = zipf_law(0.5, 10000);
  const UrnSampler sampler(law);
  const std::uint64_t n = 10000;
  const std::vector<double> f = {0.75};
  const std::size_t reps = 3000;
  const double mean = poisson_mean_occupancy(law, 0.75 * n);
  std::vector<double> prod(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto c = poissonized_counts(sampler, n, f, derive_seed(5, r));
    prod[r] = (c.forward[0] - mean) * (c.backward[0] - mean);
  }
  const double se = std::sqrt(urns::testing::variance(prod) / reps);
  EXPECT_LE(std::abs(urns::testing::mean(prod) - exact_poisson_cov(law, n, 0.75, 0.75)), 3.5 * se);
}

TEST(PoissonizedCounts, FullWindowsAgree) {
  const UrnSampler sampler(zipf_law(0.5, 1000));
  const std::vector<double> f = {0.5, 1.0};
  const auto c = poissonized_counts(sampler, 2000, f, 3);
  EXPECT_EQ(c.forward[1], c.backward[1]);
  EXPECT_LE(c.forward[0], c.forward[1]);
}
