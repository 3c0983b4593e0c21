#include <gtest/gtest.h>

#include <json.hpp>
#include <random>

#include "urns/bridge_tests.hpp"

using namespace urns;

namespace {

class FixedBackend final : public CdfBackend {
 public:
  NullEvaluation evaluate(const NullQuery&, double) const override {
    NullEvaluation e;
    e.p_value = 0.25;
    e.backend = "fixed";
    e.reps = 7;
    e.seed = 99;
    return e;
  }
};

class DecliningSpectral {
 public:
  static std::shared_ptr<SpectralBackend> make(double theta) {
    auto b = std::make_shared<SpectralBackend>(SpectralBackend::Settings{});
    b->preload(spectral_model_from_eigenvalues({0.3, 0.3, 0.1}, 0.7));
    auto model = spectral_model_from_eigenvalues({0.3, 0.3, 0.1}, 0.7);
    model.theta = theta;
    b->preload(model);
    return b;
  }
};

BridgePath bridge_from(std::vector<double> v, double theta = 0.5) {
  BridgePath b;
  b.grid_values = std::move(v);
  b.theta_used = theta;
  return b;
}

Stream null_stream(double theta, std::size_t n, Seed seed) {
  return sample_stream(zipf_law(theta, tail_safe_support(theta, n)), n, seed);
}

}  // namespace

TEST(EmpiricalBridge, HandStream) {
  const Stream s{{1, 2, 1, 3}};
  const auto b = empirical_bridge(forward_counts(s), 0.5);
  ASSERT_EQ(b.n(), 4u);
  EXPECT_EQ(b.rn, 3u);
  EXPECT_EQ(b.grid_values[0], 0.0);
  EXPECT_EQ(b.grid_values[4], 0.0);
  EXPECT_NEAR(b.grid_values[1], (1 - 3 * 0.5) / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(b.grid_values[1], -0.28868, 5e-6);
  EXPECT_NEAR(b.grid_values[2], (2 - 3 * std::sqrt(0.5)) / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(b.grid_values[2], -0.070045, 5e-6);
  EXPECT_NEAR(b.at(0.125), 0.5 * b.grid_values[1], 1e-15);
  EXPECT_EQ(b.at(1.0), 0.0);
}

TEST(EmpiricalBridge, EndpointsExactlyZero) {
  for (Seed seed = 0; seed < 50; ++seed) {
    const auto s = null_stream(0.37, 10 + seed * 13, seed);
    for (double theta : {0.1, 0.37, 0.93}) {
      const auto b = empirical_bridge(backward_counts(s), theta);
      EXPECT_EQ(b.grid_values.front(), 0.0);
      EXPECT_EQ(b.grid_values.back(), 0.0);
    }
  }
}

TEST(EmpiricalBridge, PalindromeCoincides) {
  const Stream s{{1, 2, 3, 4, 3, 2, 1}};
  EXPECT_EQ(empirical_bridge(forward_counts(s), 0.5).grid_values,
            empirical_bridge(backward_counts(s), 0.5).grid_values);
}

TEST(W2Statistic, ZeroAndSpike) {
  const std::size_t n = 10;
  std::vector<double> zero(n + 1, 0.0);
  EXPECT_EQ(w2_statistic(bridge_from(zero), bridge_from(zero)), 0.0);
  std::vector<double> spike(n + 1, 0.0);
  spike[4] = 1.0;
  EXPECT_NEAR(w2_statistic(bridge_from(spike), bridge_from(spike)), 4.0 / (3.0 * n), 1e-15);
}

TEST(W2Statistic, HandStreamMatchesExactQuadrature) {
  const Stream s{{1, 2, 1, 3}};
  const auto f = empirical_bridge(forward_counts(s), 0.5);
  const auto b = empirical_bridge(backward_counts(s), 0.5);
  auto exact = [](const BridgePath& p) {
    double total = 0.0;
    const double n = static_cast<double>(p.n());
    for (std::size_t k = 0; k < p.n(); ++k) {
      const double a = p.grid_values[k], c = p.grid_values[k + 1];
      total += (a * a + a * c + c * c) / (3.0 * n);
    }
    return total;
  };
  EXPECT_NEAR(w2_statistic(f, b), exact(f) + exact(b), 1e-12);
}

TEST(W2Statistic, IdentityOnRandomBridges) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 2 + rng() % 500;
    std::vector<double> a(n + 1), b(n + 1), t(n);
    for (std::size_t k = 1; k < n; ++k) {
      a[k] = normal(rng);
      b[k] = normal(rng);
    }
    a[0] = a[n] = b[0] = b[n] = 0.0;
    for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k + 1) / n;
    const double quad = piecewise_linear_square_integral(t, std::span<const double>(a).subspan(1)) +
                        piecewise_linear_square_integral(t, std::span<const double>(b).subspan(1));
    const double w2 = w2_statistic(bridge_from(a), bridge_from(b));
    ASSERT_NEAR(w2, quad, 1e-12 * std::max(1.0, quad));
    ASSERT_EQ(w2, w2_statistic(bridge_from(b), bridge_from(a)));
  }
}

TEST(W2Statistic, RejectsMismatch) {
  EXPECT_THROW(w2_statistic(bridge_from({0, 1, 0}), bridge_from({0, 0})), std::invalid_argument);
  EXPECT_THROW(w2_statistic(bridge_from({0, 1, 0}, 0.5), bridge_from({0, 1, 0}, 0.6)), std::invalid_argument);
}

TEST(W2Statistic, ReverseAndRelabelInvariant) {
  const auto s = null_stream(0.5, 3000, 4);
  const FixedBackend backend;
  const double w = run_known_theta_test(s, 0.5, backend).w2;
  EXPECT_EQ(w, run_known_theta_test(s.reversed(), 0.5, backend).w2);
  Stream relabeled = s;
  for (auto& x : relabeled.labels) x = x * 31 + 5;
  EXPECT_EQ(w, run_known_theta_test(relabeled, 0.5, backend).w2);
}

TEST(KnownThetaTest, ReportFields) {
  const auto s = null_stream(0.5, 2000, 5);
  const auto r = run_known_theta_test(s, 0.5, FixedBackend{});
  EXPECT_GE(r.w2, 0.0);
  EXPECT_EQ(r.variant, Variant::known);
  EXPECT_EQ(r.theta_source, "fixed");
  EXPECT_EQ(r.p_value, 0.25);
  EXPECT_EQ(r.cdf_backend, "fixed");
  EXPECT_EQ(r.reps, 7u);
  EXPECT_EQ(r.seed, 99u);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_THROW(run_known_theta_test(s, 1.0, FixedBackend{}), std::invalid_argument);
}

TEST(KnownThetaTest, SingleUrnStream) {
  const Stream s{std::vector<Label>(50, 1)};
  const auto r = run_known_theta_test(s, 0.5, FixedBackend{});
  EXPECT_TRUE(std::isfinite(r.w2));
  EXPECT_GE(r.w2, 0.0);
}

TEST(KnownThetaTest, SmallSampleWarning) {
  const Stream s{{1, 2, 1, 3}};
  const auto r = run_known_theta_test(s, 0.5, FixedBackend{});
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("small sample"), std::string::npos);
}

TEST(EstimatedThetaTest, HandStream) {
  const Stream s{{1, 2, 1, 3}};
  const auto r = run_estimated_theta_test(s, AMeasure::example1(), FixedBackend{});
  ASSERT_TRUE(r.estimate.has_value());
  EXPECT_NEAR(r.theta, std::log2(1.5), 1e-15);
  EXPECT_EQ(r.theta_source, "estimated");
  EXPECT_EQ(r.variant, Variant::estimated);
  EXPECT_GE(r.warnings.size(), 2u);
}

TEST(EstimatedThetaTest, SameStatisticAtSameTheta) {
  const auto s = null_stream(0.5, 5000, 6);
  const auto est = run_estimated_theta_test(s, AMeasure::example1(), FixedBackend{});
  const auto known = run_known_theta_test(s, est.theta, FixedBackend{});
  EXPECT_EQ(est.w2, known.w2);
}

TEST(EstimatedThetaTest, ClampWarning) {
  const Stream s{{1, 1, 1, 1, 1, 1, 1, 1, 1, 1}};
  const auto r = run_estimated_theta_test(s, AMeasure::example1(), FixedBackend{});
  EXPECT_EQ(r.theta, 0.01);
  bool found = false;
  for (const auto& w : r.warnings) found |= w.find("clamped") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(Backends, MonteCarloCachesAndCorrects) {
  MonteCarloBackend mc({64, 999, 3});
  const NullQuery q{0.5, Variant::known, nullptr};
  const auto a = mc.tabulation(q);
  EXPECT_EQ(a.get(), mc.tabulation(q).get());
  const auto e = mc.evaluate(q, 1e9);
  EXPECT_EQ(e.p_value, 1.0 / 1000.0);
  EXPECT_EQ(e.backend, "montecarlo");
  EXPECT_EQ(e.reps, 999u);
  EXPECT_EQ(e.seed, 3u);
  EXPECT_EQ(mc.evaluate(q, 0.0).p_value, 1.0);
}

TEST(Backends, PreloadedTabulationUsed) {
  MonteCarloBackend mc({64, 10, 0});
  auto sample = limit_w2_sample(0.4, Variant::known, nullptr, 32, 50, 8);
  mc.preload(sample);
  const auto e = mc.evaluate({0.4, Variant::known, nullptr}, 0.1);
  EXPECT_EQ(e.reps, 50u);
  EXPECT_EQ(e.seed, 8u);
}

TEST(Backends, AutoFallsBackOnDecline) {
  auto spectral = DecliningSpectral::make(0.5);
  auto mc = std::make_shared<MonteCarloBackend>(MonteCarloBackend::Settings{64, 500, 1});
  const AutoBackend autob(spectral, mc);
  EXPECT_THROW(spectral->evaluate({0.5, Variant::known, nullptr}, 0.2), SpectralDeclined);
  const auto e = autob.evaluate({0.5, Variant::known, nullptr}, 0.2);
  EXPECT_EQ(e.backend, "montecarlo (spectral declined)");
  ASSERT_EQ(e.warnings.size(), 1u);
  EXPECT_GT(e.p_value, 0.0);
  EXPECT_LE(e.p_value, 1.0);
}

TEST(Backends, SpectralAndMonteCarloAgree) {
  const auto s = null_stream(0.5, 20000, 10);
  const SpectralBackend spectral({256, 64});
  const MonteCarloBackend mc({512, 20000, 2});
  const auto a = run_known_theta_test(s, 0.5, spectral);
  const auto b = run_known_theta_test(s, 0.5, mc);
  EXPECT_EQ(a.cdf_backend, "spectral");
  EXPECT_EQ(a.reps, 0u);
  EXPECT_NEAR(a.p_value, b.p_value, 0.015);
}

TEST(Backends, PowerSmoke) {
  const MonteCarloBackend mc({128, 4000, 4});
  const std::size_t n = 20000, runs = 15;
  const UrnSampler null_sampler(zipf_law(0.5, tail_safe_support(0.5, n)));
  const UrnSampler alt_sampler(zipf_law(0.8, tail_safe_support(0.8, n)));
  std::vector<double> p_null, p_alt;
  for (std::size_t r = 0; r < runs; ++r) {
    p_null.push_back(run_known_theta_test(sample_stream(null_sampler, n, derive_seed(50, r)), 0.5, mc).p_value);
    auto s = sample_stream(null_sampler, n / 2, derive_seed(51, r));
    const auto tail = sample_stream(alt_sampler, n / 2, derive_seed(52, r));
    // Offset the second-half labels so the two halves draw from different urns.
    for (Label x : tail.labels) s.labels.push_back(x + 1000000000ULL);
    p_alt.push_back(run_known_theta_test(s, 0.5, mc).p_value);
  }
  std::sort(p_null.begin(), p_null.end());
  std::sort(p_alt.begin(), p_alt.end());
  EXPECT_LT(p_alt[runs / 2], p_null[runs / 2]);
}

TEST(Serialization, KeyValueOrderAndJson) {
  TestReport r;
  r.w2 = 0.125;
  r.theta = 0.5;
  r.theta_source = "fixed";
  r.p_value = 0.5;
  r.cdf_backend = "spectral";
  r.warnings = {"a", "b"};
  EXPECT_EQ(to_key_value(r),
            "w2=0.125\nvariant=known\ntheta=0.5\ntheta_source=fixed\np_value=0.5\ncdf_backend=spectral\nreps=0\n"
            "seed=0\nwarnings=a | b\n");
  const auto j = nlohmann::ordered_json::parse(to_json(r));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"w2", "variant", "theta", "theta_source", "p_value", "cdf_backend", "reps",
                                            "seed", "warnings"}));
  EXPECT_EQ(j["warnings"].size(), 2u);
}
