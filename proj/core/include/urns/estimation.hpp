#pragma once

// Exponent estimators built from a signed step measure dA on (0, 1]:
//   theta_n  = sum_j h_j log+ R_[n t_j],   theta'_n likewise with R',
//   theta_hat = (theta_n + theta'_n) / 2.
// Valid measures have zero total mass and unit log-moment sum_j h_j log t_j = 1.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "urns/urn_model.hpp"

namespace urns {

struct Atom {
  double location = 0.0;  ///< t_j in (0, 1]
  double jump = 0.0;      ///< h_j
};

class AMeasure {
 public:
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  /// Smallest atom location; A vanishes on [0, delta).
  double delta() const noexcept { return atoms_.front().location; }

  /// Two atoms: -1/log 2 at 1/2 and +1/log 2 at 1, giving
  /// theta_hat = log2(R_n / sqrt(R_[n/2] R'_[n/2])).
  static AMeasure example1();

 private:
  friend AMeasure validate_measure(std::vector<Atom> atoms, bool rescale);
  std::vector<Atom> atoms_;
};

/// Checks zero total mass and unit log-moment (both to 1e-12), rejects
/// locations outside (0, 1], merges atoms at equal locations and sorts them.
/// With `rescale`, a measure of zero mass but non-unit log-moment is scaled
/// to unit log-moment instead of being rejected.
AMeasure validate_measure(std::vector<Atom> atoms, bool rescale = false);

/// Parses measure declarations: the keyword "example1", or repeated
/// "t:h" / "atom=t:h" entries.
AMeasure parse_measure(const std::vector<std::string>& entries);

/// Canonical text form "t:h,t:h,..." with round-trip precision.
std::string format_measure(const AMeasure& measure);

struct ThetaEstimate {
  double value = 0.0;      ///< theta_hat, clamped to [kMinTheta, kMaxTheta]
  double raw_value = 0.0;  ///< (forward + backward) / 2 before clamping
  double forward = 0.0;    ///< theta_n
  double backward = 0.0;   ///< theta'_n
  std::size_t n = 0;
  std::uint64_t rn = 0;
  double asym_sd = 0.0;  ///< sqrt(asymptotic variance / R_n) at the clamped value
  bool clamped = false;

  static constexpr double kMinTheta = 0.01;
  static constexpr double kMaxTheta = 0.99;
};

ThetaEstimate theta_estimator(const OccupancyPath& forward, const OccupancyPath& backward, const AMeasure& measure);

/// log2(Rn / sqrt(Rhalf * Rphalf)).
double theta_example1(std::uint64_t rn, std::uint64_t rhalf, std::uint64_t rphalf);

/// Variance of the limit of sqrt(E R_n) (theta_hat - theta):
/// 1/2 sum_{j,l} h_j h_l (t_j t_l)^-theta (K + K')(t_j, t_l).
double estimator_asym_variance(double theta, const AMeasure& measure);

/// [n t] with a guard against products like 0.29 * 100 = 28.999999999999996.
std::size_t grid_index(std::size_t n, double t);

}  // namespace urns
