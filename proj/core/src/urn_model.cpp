#include "urns/urn_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/zeta.hpp>

namespace urns {
namespace {

// Terms beyond this index of a parametric law are summed by Euler-Maclaurin.
constexpr std::uint64_t kDirectTerms = 1ULL << 20;
// Alias-table size for the head of a parametric law.
constexpr std::uint64_t kAliasHead = 1ULL << 18;
// Labels below this bound are tracked in a bitmap by the counting routines.
constexpr Label kBitmapLabels = 1ULL << 22;

// Sum of f(i) for integer i in [first, last], f smooth with derivatives of
// order f/x. Midpoint Euler-Maclaurin:
//   sum f(i) = int_{first-1/2}^{last+1/2} f - (f'(last+1/2) - f'(first-1/2))/24 + ...
double euler_maclaurin_sum(const std::function<double(double)>& f, double first, double last) {
  const double a = first - 0.5;
  const double b = last + 0.5;
  auto in_log = [&](double u) {
    const double x = std::exp(u);
    return f(x) * x;
  };
  using boost::math::quadrature::gauss_kronrod;
  const double integral = gauss_kronrod<double, 61>::integrate(in_log, std::log(a), std::log(b), 12, 1e-13);
  auto derivative = [&](double x) {
    const double h = 1e-4 * x;
    return (f(x + h) - f(x - h)) / (2.0 * h);
  };
  return integral - (derivative(b) - derivative(a)) / 24.0;
}

double sum_smooth(const std::function<double(double)>& f, std::uint64_t last) {
  const std::uint64_t direct = std::min(last, kDirectTerms);
  long double acc = 0.0L;
  // Smallest terms first.
  for (std::uint64_t i = direct; i >= 1; --i) acc += f(static_cast<double>(i));
  double total = static_cast<double>(acc);
  if (last > direct) total += euler_maclaurin_sum(f, static_cast<double>(direct + 1), static_cast<double>(last));
  return total;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// Rejection-inversion helpers: H(x) = (x^(1-s) - 1)/(1-s), an antiderivative of x^-s.
double expm1_ratio(double x) { return std::abs(x) > 1e-8 ? std::expm1(x) / x : 1.0 + x * 0.5 * (1.0 + x / 3.0); }
double log1p_ratio(double x) { return std::abs(x) > 1e-8 ? std::log1p(x) / x : 1.0 - x * (0.5 - x / 3.0); }

double h_integral(double x, double s) {
  const double log_x = std::log(x);
  return expm1_ratio((1.0 - s) * log_x) * log_x;
}

double h_integral_inverse(double y, double s) {
  double t = y * (1.0 - s);
  if (t < -1.0) t = -1.0;
  return std::exp(log1p_ratio(t) * y);
}

}  // namespace

ProbabilityLaw ProbabilityLaw::zipf(double theta, std::uint64_t support, double perturbation) {
  require(theta > 0.0 && theta < 1.0, "zipf law: theta must lie in (0, 1), got " + std::to_string(theta));
  require(support >= 1, "zipf law: support must be at least 1");
  require(support <= (1ULL << 53), "zipf law: support above 2^53 is not representable");
  const double s = 1.0 / theta;
  require(perturbation > -s / (s + 0.5),
          "zipf law: perturbation " + std::to_string(perturbation) + " makes the weights increase");

  ProbabilityLaw law;
  law.support_ = support;
  law.theta_ = theta;
  law.exponent_ = s;
  law.perturbation_ = perturbation;
  const double weight_sum = sum_smooth(
      [s, perturbation](double x) { return std::pow(x, -s) * (1.0 + perturbation / std::sqrt(x)); }, support);
  law.c_ = 1.0 / weight_sum;
  const double n = static_cast<double>(support);
  double tail = std::pow(n, 1.0 - s) / (s - 1.0);
  if (perturbation > 0.0) tail += perturbation * std::pow(n, 0.5 - s) / (s - 0.5);
  law.tail_bound_ = law.c_ * tail;
  return law;
}

ProbabilityLaw ProbabilityLaw::from_probs(std::vector<double> probs) {
  require(!probs.empty(), "probability law: empty probability vector");
  require(probs.size() <= kMaxMaterialized, "probability law: explicit support too large");
  long double sum = 0.0L;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    require(probs[i] > 0.0 && std::isfinite(probs[i]), "probability law: probabilities must be positive");
    if (i > 0) require(probs[i] <= probs[i - 1], "probability law: probabilities must be non-increasing");
    sum += probs[i];
  }
  require(std::abs(static_cast<double>(sum) - 1.0) <= 1e-12, "probability law: probabilities must sum to 1");

  ProbabilityLaw law;
  law.support_ = probs.size();
  law.theta_ = std::numeric_limits<double>::quiet_NaN();
  law.explicit_probs_ = std::move(probs);
  return law;
}

double ProbabilityLaw::probability(std::uint64_t i) const {
  if (i < 1 || i > support_) throw std::out_of_range("probability law: urn index out of support");
  if (!explicit_probs_.empty()) return explicit_probs_[i - 1];
  return density_at(static_cast<double>(i));
}

double ProbabilityLaw::density_at(double x) const noexcept {
  return c_ * std::pow(x, -exponent_) * (1.0 + perturbation_ / std::sqrt(x));
}

std::vector<double> ProbabilityLaw::probs() const {
  if (!explicit_probs_.empty()) return explicit_probs_;
  if (support_ > kMaxMaterialized) throw std::length_error("probability law: support too large to materialize");
  std::vector<double> out(support_);
  for (std::uint64_t i = 1; i <= support_; ++i) out[i - 1] = density_at(static_cast<double>(i));
  return out;
}

ProbabilityLaw zipf_law(double theta, std::uint64_t support) { return ProbabilityLaw::zipf(theta, support); }

std::uint64_t tail_safe_support(double theta, std::uint64_t n, double rel_tol) {
  require(theta > 0.0 && theta < 1.0, "tail_safe_support: theta must lie in (0, 1)");
  require(n >= 1, "tail_safe_support: n must be positive");
  require(rel_tol > 0.0, "tail_safe_support: tolerance must be positive");
  const double s = 1.0 / theta;
  const double c = 1.0 / boost::math::zeta(s);
  const double nd = static_cast<double>(n);
  const double mean = std::tgamma(1.0 - theta) * std::pow(c * nd, theta);
  // n c N^(1-s) / (s-1) <= rel_tol * mean
  const double log_n = (std::log(nd * c) - std::log((s - 1.0) * rel_tol * mean)) / (s - 1.0);
  constexpr double kCap = 9007199254740992.0;  // 2^53
  if (!(log_n < std::log(kCap))) return 1ULL << 53;
  const double bound = std::ceil(std::exp(log_n));
  return std::max<std::uint64_t>(16, static_cast<std::uint64_t>(bound));
}

double sum_over_urns(const ProbabilityLaw& law, const std::function<double(double)>& g) {
  if (!law.is_parametric()) {
    long double acc = 0.0L;
    for (std::uint64_t i = law.support(); i >= 1; --i) acc += g(law.probability(i));
    return static_cast<double>(acc);
  }
  return sum_smooth([&](double x) { return g(law.density_at(x)); }, law.support());
}

AlphaValue alpha_of(const ProbabilityLaw& law, double x) {
  require(x > 0.0, "alpha_of: x must be positive");
  const double level = 1.0 / x;
  if (law.probability(1) < level) return {0, true};
  std::uint64_t lo = 1;  // p_lo >= level
  std::uint64_t hi = law.support();
  if (law.probability(hi) >= level) return {hi, false};
  while (hi - lo > 1) {  // invariant: p_lo >= level > p_hi
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (law.probability(mid) >= level) lo = mid; else hi = mid;
  }
  return {lo, false};
}

Stream Stream::reversed() const {
  Stream out;
  out.labels.assign(labels.rbegin(), labels.rend());
  return out;
}

UrnSampler::UrnSampler(const ProbabilityLaw& law) : support_(law.support()) {
  head_ = law.is_parametric() ? std::min(support_, kAliasHead) : support_;
  std::vector<double> weights(head_);
  for (std::uint64_t i = 1; i <= head_; ++i) weights[i - 1] = law.probability(i);
  if (head_ < support_) {
    exponent_ = 1.0 / law.theta();
    perturbation_ = law.perturbation();
    const double a = perturbation_;
    const double s = exponent_;
    const double tail_mass = law.normalization() *
        (sum_smooth([s, a](double x) { return std::pow(x, -s) * (1.0 + a / std::sqrt(x)); }, support_) -
         sum_smooth([s, a](double x) { return std::pow(x, -s) * (1.0 + a / std::sqrt(x)); }, head_));
    weights.push_back(std::max(tail_mass, 0.0));
    const double lo = static_cast<double>(head_ + 1);
    const double hi = static_cast<double>(support_);
    tail_weight_bound_ = a > 0.0 ? 1.0 + a / std::sqrt(lo) : 1.0;
    h_low_ = h_integral(lo + 0.5, s) - std::pow(lo, -s);
    h_high_ = h_integral(hi + 0.5, s);
  }

  // Vose alias construction.
  const std::size_t bins = weights.size();
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> scaled(bins);
  for (std::size_t i = 0; i < bins; ++i) scaled[i] = weights[i] * static_cast<double>(bins) / total;
  alias_prob_.assign(bins, 1.0);
  alias_index_.resize(bins);
  std::iota(alias_index_.begin(), alias_index_.end(), 0u);
  std::vector<std::uint32_t> small;
  std::vector<std::uint32_t> large;
  for (std::size_t i = 0; i < bins; ++i) (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    alias_prob_[s] = scaled[s];
    alias_index_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (auto i : small) alias_prob_[i] = 1.0;
  for (auto i : large) alias_prob_[i] = 1.0;
}

Label UrnSampler::draw(Engine& engine) const {
  const double u = uniform01(engine) * static_cast<double>(alias_prob_.size());
  auto bin = static_cast<std::size_t>(u);
  if (bin >= alias_prob_.size()) bin = alias_prob_.size() - 1;
  const double coin = u - static_cast<double>(bin);
  const std::size_t chosen = coin < alias_prob_[bin] ? bin : alias_index_[bin];
  if (chosen < head_) return chosen + 1;
  return draw_tail(engine);
}

Label UrnSampler::draw_tail(Engine& engine) const {
  const double s = exponent_;
  const double lo = static_cast<double>(head_ + 1);
  const double hi = static_cast<double>(support_);
  for (;;) {
    const double u = h_high_ + uniform01(engine) * (h_low_ - h_high_);
    const double x = h_integral_inverse(u, s);
    double k = std::floor(x + 0.5);
    k = std::clamp(k, lo, hi);
    if (u < h_integral(k + 0.5, s) - std::pow(k, -s)) continue;
    if (perturbation_ != 0.0) {
      const double weight = 1.0 + perturbation_ / std::sqrt(k);
      if (uniform01(engine) * tail_weight_bound_ >= weight) continue;
    }
    return static_cast<Label>(k);
  }
}

Stream sample_stream(const UrnSampler& sampler, std::size_t n, Seed seed) {
  require(n >= 1, "sample_stream: n must be at least 1");
  Engine engine = make_engine(seed);
  Stream out;
  out.labels.resize(n);
  for (auto& label : out.labels) label = sampler.draw(engine);
  return out;
}

Stream sample_stream(const ProbabilityLaw& law, std::size_t n, Seed seed) {
  return sample_stream(UrnSampler(law), n, seed);
}

namespace {

// Membership set over labels: bitmap for small labels, hash set above.
class SeenLabels {
 public:
  explicit SeenLabels(std::span<const Label> labels) {
    Label max_small = 0;
    std::size_t large = 0;
    for (Label l : labels) {
      if (l < kBitmapLabels) max_small = std::max(max_small, l);
      else ++large;
    }
    bitmap_.assign(max_small + 1, false);
    if (large > 0) overflow_.reserve(large);
  }

  // True when `label` had not been seen before.
  bool insert(Label label) {
    if (label < kBitmapLabels) {
      if (bitmap_[label]) return false;
      bitmap_[label] = true;
      return true;
    }
    return overflow_.insert(label).second;
  }

 private:
  std::vector<bool> bitmap_;
  std::unordered_set<Label> overflow_;
};

template <class It>
std::vector<std::uint64_t> distinct_prefix_counts(It first, It last, SeenLabels& seen) {
  std::vector<std::uint64_t> counts;
  counts.reserve(static_cast<std::size_t>(std::distance(first, last)) + 1);
  counts.push_back(0);
  std::uint64_t distinct = 0;
  for (It it = first; it != last; ++it) {
    if (seen.insert(*it)) ++distinct;
    counts.push_back(distinct);
  }
  return counts;
}

}  // namespace

OccupancyPath forward_counts(std::span<const Label> labels) {
  require(!labels.empty(), "forward_counts: empty stream");
  SeenLabels seen(labels);
  return {distinct_prefix_counts(labels.begin(), labels.end(), seen), Direction::forward};
}

OccupancyPath backward_counts(std::span<const Label> labels) {
  require(!labels.empty(), "backward_counts: empty stream");
  SeenLabels seen(labels);
  return {distinct_prefix_counts(labels.rbegin(), labels.rend(), seen), Direction::backward};
}

double exact_mean_occupancy(const ProbabilityLaw& law, double m) {
  require(m >= 0.0, "exact_mean_occupancy: m must be non-negative");
  if (m == 0.0) return 0.0;
  return sum_over_urns(law, [m](double p) {
    if (p >= 1.0) return 1.0;
    return -std::expm1(m * std::log1p(-p));
  });
}

double poisson_mean_occupancy(const ProbabilityLaw& law, double t) {
  require(t >= 0.0, "poisson_mean_occupancy: t must be non-negative");
  if (t == 0.0) return 0.0;
  return sum_over_urns(law, [t](double p) { return -std::expm1(-p * t); });
}

double exact_poisson_cov(const ProbabilityLaw& law, std::uint64_t n, double t, double tau) {
  require(t >= 0.0 && t <= 1.0 && tau >= 0.0 && tau <= 1.0, "exact_poisson_cov: t and tau must lie in [0, 1]");
  require(n >= 1, "exact_poisson_cov: n must be positive");
  if (t + tau <= 1.0) return 0.0;
  const double nd = static_cast<double>(n);
  // Difference of the two occupancy means, summed termwise to avoid cancellation.
  const double a = (t + tau) * nd;
  return sum_over_urns(law, [a, nd](double p) { return std::exp(-p * nd) - std::exp(-p * a); });
}

PoissonizedCounts poissonized_counts(const UrnSampler& sampler, std::uint64_t n, std::span<const double> fractions,
                                     Seed seed) {
  require(n >= 1, "poissonized_counts: n must be positive");
  Engine engine = make_engine(seed);
  std::poisson_distribution<std::uint64_t> poisson(static_cast<double>(n));
  PoissonizedCounts out;
  out.balls = poisson(engine);
  out.forward.assign(fractions.size(), 0);
  out.backward.assign(fractions.size(), 0);
  if (out.balls == 0) return out;

  std::vector<double> times(out.balls);
  for (auto& t : times) t = uniform01(engine);
  std::sort(times.begin(), times.end());
  std::vector<Label> labels(out.balls);
  for (auto& l : labels) l = sampler.draw(engine);

  const OccupancyPath fwd = forward_counts(labels);
  const OccupancyPath bwd = backward_counts(labels);
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    const double f = fractions[j];
    const auto upto = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), f) - times.begin());
    const auto from = static_cast<std::size_t>(times.end() - std::lower_bound(times.begin(), times.end(), 1.0 - f));
    out.forward[j] = fwd[upto];
    out.backward[j] = bwd[from];
  }
  return out;
}

}  // namespace urns
