#pragma once

// Infinite urn scheme (Karlin model): probability laws over urns, i.i.d.
// label streams, forward/backward distinct-count paths, and the exact
// occupancy moments used as centering and as testing oracles.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "urns/rng.hpp"

namespace urns {

using Label = std::uint64_t;

/// Urn probabilities p_1 >= p_2 >= ... > 0 on a finite support {1..N}.
///
/// Two representations share one interface. Explicit laws hold the vector of
/// probabilities. Zipf laws are parametric, p_i = c * i^(-1/theta) * (1 + a/sqrt(i)),
/// so supports far larger than memory (10^12 urns) stay cheap; probabilities
/// are evaluated on demand and sums over the support switch to an
/// Euler-Maclaurin tail once the terms vary slowly.
class ProbabilityLaw {
 public:
  /// Normalized truncated Zipf law. `perturbation` is the `a` above; it must
  /// keep the weights non-increasing, i.e. a > -s/(s + 1/2) with s = 1/theta.
  static ProbabilityLaw zipf(double theta, std::uint64_t support, double perturbation = 0.0);

  /// Explicit probabilities; must be strictly positive, non-increasing and sum
  /// to 1 within 1e-12.
  static ProbabilityLaw from_probs(std::vector<double> probs);

  std::uint64_t support() const noexcept { return support_; }
  bool is_parametric() const noexcept { return explicit_probs_.empty(); }

  /// Exponent metadata; NaN for explicit laws.
  double theta() const noexcept { return theta_; }
  /// Normalization constant c (1 for explicit laws).
  double normalization() const noexcept { return c_; }
  double perturbation() const noexcept { return perturbation_; }

  /// p_i for 1 <= i <= support().
  double probability(std::uint64_t i) const;

  /// Continuous extension p(x) of a parametric law, used by the tail
  /// summation. Equals probability(i) at integer points.
  double density_at(double x) const noexcept;

  /// Upper bound on the mass c * sum_{i>N} i^(-1/theta) that the untruncated
  /// power law would put beyond the support. 0 for explicit laws.
  double tail_mass_bound() const noexcept { return tail_bound_; }

  /// Materializes the probability vector. Throws std::length_error for
  /// supports above kMaxMaterialized.
  std::vector<double> probs() const;

  static constexpr std::uint64_t kMaxMaterialized = 1ULL << 26;

 private:
  ProbabilityLaw() = default;

  std::vector<double> explicit_probs_;
  std::uint64_t support_ = 0;
  double theta_ = 0.0;
  double exponent_ = 0.0;  // s = 1/theta
  double c_ = 1.0;
  double perturbation_ = 0.0;
  double tail_bound_ = 0.0;
};

/// zipf_law(theta, N): pure power law normalized over 1..N.
ProbabilityLaw zipf_law(double theta, std::uint64_t support);

/// Support size N for which the expected number of balls that the untruncated
/// law would throw beyond N, n * sum_{i>N} p_i, stays below
/// rel_tol * Gamma(1-theta) * (c n)^theta, i.e. a fraction rel_tol of E R_n.
std::uint64_t tail_safe_support(double theta, std::uint64_t n, double rel_tol = 1e-4);

/// Sum of g(p_i) over the support. For parametric laws with a large support
/// the part beyond the first 2^22 urns is evaluated by the midpoint
/// Euler-Maclaurin formula, which requires g(p(x)) to be smooth in x.
double sum_over_urns(const ProbabilityLaw& law, const std::function<double(double)>& g);

struct AlphaValue {
  std::uint64_t count = 0;
  bool empty = false;  ///< no urn has p_k >= 1/x
};

/// alpha(x) = max{k : p_k >= 1/x}.
AlphaValue alpha_of(const ProbabilityLaw& law, double x);

struct Stream {
  std::vector<Label> labels;

  std::size_t size() const noexcept { return labels.size(); }
  Stream reversed() const;
};

enum class Direction { forward, backward };

/// Distinct-count path R_0, ..., R_n. counts[0] = 0 and counts[1] = 1.
struct OccupancyPath {
  std::vector<std::uint64_t> counts;
  Direction direction = Direction::forward;

  std::size_t length() const noexcept { return counts.empty() ? 0 : counts.size() - 1; }
  std::uint64_t operator[](std::size_t k) const { return counts[k]; }
  std::uint64_t total() const { return counts.back(); }
};

/// Draws urn labels from a law. Alias table over the head of the support plus
/// rejection-inversion (Hörmann-Derflinger) over the power-law tail, so
/// sampling is O(1) and memory is bounded regardless of the support size.
class UrnSampler {
 public:
  explicit UrnSampler(const ProbabilityLaw& law);

  Label draw(Engine& engine) const;
  std::uint64_t support() const noexcept { return support_; }

 private:
  Label draw_tail(Engine& engine) const;

  std::vector<double> alias_prob_;
  std::vector<std::uint32_t> alias_index_;
  std::uint64_t head_ = 0;  // labels 1..head_ come from the alias table
  std::uint64_t support_ = 0;
  // Power-law tail on [head_+1, support_].
  double exponent_ = 0.0;
  double perturbation_ = 0.0;
  double tail_weight_bound_ = 1.0;
  double h_low_ = 0.0;
  double h_high_ = 0.0;
};

Stream sample_stream(const ProbabilityLaw& law, std::size_t n, Seed seed);
Stream sample_stream(const UrnSampler& sampler, std::size_t n, Seed seed);

OccupancyPath forward_counts(std::span<const Label> labels);
OccupancyPath backward_counts(std::span<const Label> labels);
inline OccupancyPath forward_counts(const Stream& s) { return forward_counts(std::span<const Label>(s.labels)); }
inline OccupancyPath backward_counts(const Stream& s) { return backward_counts(std::span<const Label>(s.labels)); }

/// E R_m = sum_k (1 - (1 - p_k)^m).
double exact_mean_occupancy(const ProbabilityLaw& law, double m);

/// E R_{Pi(t)} = sum_k (1 - exp(-p_k t)).
double poisson_mean_occupancy(const ProbabilityLaw& law, double t);

/// cov(R_{Pi(tn)}, R'_{Pi(tau n)}) for the Poissonized scheme: zero unless
/// t + tau > 1, then E R_{Pi((t+tau)n)} - E R_{Pi(n)}.
double exact_poisson_cov(const ProbabilityLaw& law, std::uint64_t n, double t, double tau);

/// One realization of the Poissonized scheme: Pi(n) balls with uniform arrival
/// times on [0, n]. forward[j] = R_{Pi(fractions[j] n)}, backward[j] =
/// R'_{Pi(fractions[j] n)} (distinct labels among arrivals in [(1-tau)n, n]).
struct PoissonizedCounts {
  std::uint64_t balls = 0;
  std::vector<std::uint64_t> forward;
  std::vector<std::uint64_t> backward;
};

PoissonizedCounts poissonized_counts(const UrnSampler& sampler, std::uint64_t n,
                                     std::span<const double> fractions, Seed seed);

}  // namespace urns
