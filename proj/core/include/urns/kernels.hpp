#pragma once

// Covariance kernels of the limiting Gaussian pair (Z, Z') of the centered,
// normalized forward/backward distinct-count processes.

#include <functional>
#include <string>
#include <string_view>

namespace urns {

/// K(s,t) = (s+t)^theta - max(s^theta, t^theta): covariance of Z(s), Z(t)
/// (and of Z'(s), Z'(t)).
double kernel_K(double theta, double s, double t);

/// K'(s,t) = ((s+t)^theta - 1) 1(s+t > 1): cross covariance of Z(s), Z'(t).
double kernel_Kprime(double theta, double s, double t);

/// Bridge kernels of Z(t) - t^theta Z(1) (and the primed analogue):
/// K(s,t) - s^theta K(1,t) - t^theta K(s,1) + s^theta t^theta K(1,1).
double kernel_K0(double theta, double s, double t);
double kernel_K0prime(double theta, double s, double t);

/// Which null law a statistic refers to: theta supplied, or theta estimated
/// by an A-measure and plugged in.
enum class Variant { known, estimated };

std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view text);

/// Matrix-valued kernel of a two-component process (X, X') with
/// cov(X(s), X(t)) = cov(X'(s), X'(t)) = auto_cov(s,t) and
/// cov(X(s), X'(t)) = cross_cov(s,t), both symmetric in (s,t).
struct PairKernel {
  std::function<double(double, double)> auto_cov;
  std::function<double(double, double)> cross_cov;
};

PairKernel raw_pair_kernel(double theta);
PairKernel bridged_pair_kernel(double theta);

}  // namespace urns
