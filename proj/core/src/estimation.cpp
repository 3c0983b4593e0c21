#include "urns/estimation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "urns/kernels.hpp"

namespace urns {
namespace {

constexpr double kTolerance = 1e-12;

double log_plus(std::uint64_t r) { return r > 1 ? std::log(static_cast<double>(r)) : 0.0; }

double parse_double(std::string_view text, const std::string& entry) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("measure: cannot parse number in '" + entry + "'");
  return value;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

AMeasure AMeasure::example1() {
  const double h = 1.0 / std::numbers::ln2;
  return validate_measure({{0.5, -h}, {1.0, h}});
}

AMeasure validate_measure(std::vector<Atom> atoms, bool rescale) {
  if (atoms.empty()) throw std::invalid_argument("measure: at least one atom is required");
  for (const auto& a : atoms) {
    if (!(a.location > 0.0 && a.location <= 1.0))
      throw std::invalid_argument("measure: atom location " + format_double(a.location) + " outside (0, 1]");
    if (!std::isfinite(a.jump)) throw std::invalid_argument("measure: non-finite jump");
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
  std::vector<Atom> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && merged.back().location == a.location) merged.back().jump += a.jump;
    else merged.push_back(a);
  }

  double mass = 0.0;
  double scale = 0.0;
  double moment = 0.0;
  for (const auto& a : merged) {
    mass += a.jump;
    scale += std::abs(a.jump);
    moment += a.jump * std::log(a.location);
  }
  if (std::abs(mass) > kTolerance * std::max(1.0, scale))
    throw std::invalid_argument("measure: jumps must sum to zero (A(0) = A(1) = 0), got " + format_double(mass));
  if (std::abs(moment - 1.0) > kTolerance) {
    if (!rescale || moment == 0.0)
      throw std::invalid_argument("measure: log-moment sum h log t must equal 1, got " + format_double(moment));
    for (auto& a : merged) a.jump /= moment;
  }

  AMeasure out;
  out.atoms_ = std::move(merged);
  return out;
}

AMeasure parse_measure(const std::vector<std::string>& entries) {
  if (entries.size() == 1 && entries.front() == "example1") return AMeasure::example1();
  std::vector<Atom> atoms;
  for (const auto& raw : entries) {
    std::string_view entry = raw;
    if (entry == "example1") throw std::invalid_argument("measure: 'example1' cannot be combined with atoms");
    if (entry.starts_with("atom=")) entry.remove_prefix(5);
    const auto colon = entry.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("measure: expected t:h, got '" + raw + "'");
    atoms.push_back({parse_double(entry.substr(0, colon), raw), parse_double(entry.substr(colon + 1), raw)});
  }
  return validate_measure(std::move(atoms));
}

std::string format_measure(const AMeasure& measure) {
  std::string out;
  for (const auto& a : measure.atoms()) {
    if (!out.empty()) out += ',';
    out += format_double(a.location) + ':' + format_double(a.jump);
  }
  return out;
}

std::size_t grid_index(std::size_t n, double t) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * t + 1e-9));
}

ThetaEstimate theta_estimator(const OccupancyPath& forward, const OccupancyPath& backward, const AMeasure& measure) {
  const std::size_t n = forward.length();
  if (n < 2) throw std::invalid_argument("theta_estimator: streams of length >= 2 are required");
  if (backward.length() != n) throw std::invalid_argument("theta_estimator: forward and backward lengths differ");

  ThetaEstimate est;
  est.n = n;
  est.rn = forward.total();
  for (const auto& a : measure.atoms()) {
    const std::size_t k = grid_index(n, a.location);
    est.forward += a.jump * log_plus(forward[k]);
    est.backward += a.jump * log_plus(backward[k]);
  }
  est.raw_value = 0.5 * (est.forward + est.backward);
  est.value = std::clamp(est.raw_value, ThetaEstimate::kMinTheta, ThetaEstimate::kMaxTheta);
  est.clamped = est.value != est.raw_value;
  est.asym_sd = std::sqrt(estimator_asym_variance(est.value, measure) / static_cast<double>(std::max<std::uint64_t>(est.rn, 1)));
  return est;
}

double theta_example1(std::uint64_t rn, std::uint64_t rhalf, std::uint64_t rphalf) {
  if (rn < 1 || rhalf < 1 || rphalf < 1) throw std::invalid_argument("theta_example1: counts must be positive");
  return std::log2(static_cast<double>(rn) / std::sqrt(static_cast<double>(rhalf) * static_cast<double>(rphalf)));
}

double estimator_asym_variance(double theta, const AMeasure& measure) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("estimator_asym_variance: theta must lie in (0, 1)");
  double total = 0.0;
  for (const auto& a : measure.atoms()) {
    for (const auto& b : measure.atoms()) {
      const double weight = a.jump * b.jump * std::pow(a.location * b.location, -theta);
      total += weight * (kernel_K(theta, a.location, b.location) + kernel_Kprime(theta, a.location, b.location));
    }
  }
  return 0.5 * total;
}

}  // namespace urns
