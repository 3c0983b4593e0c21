#include "urns/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace urns {

double kernel_K(double theta, double s, double t) {
  return std::pow(s + t, theta) - std::max(std::pow(s, theta), std::pow(t, theta));
}

double kernel_Kprime(double theta, double s, double t) {
  if (s + t <= 1.0) return 0.0;
  return std::pow(s + t, theta) - 1.0;
}

namespace {

template <class Kernel>
double bridged(Kernel kernel, double theta, double s, double t) {
  const double st = std::pow(s, theta);
  const double tt = std::pow(t, theta);
  return kernel(theta, s, t) - st * kernel(theta, 1.0, t) - tt * kernel(theta, s, 1.0) +
         st * tt * kernel(theta, 1.0, 1.0);
}

}  // namespace

double kernel_K0(double theta, double s, double t) { return bridged(kernel_K, theta, s, t); }

double kernel_K0prime(double theta, double s, double t) { return bridged(kernel_Kprime, theta, s, t); }

std::string_view to_string(Variant v) noexcept { return v == Variant::known ? "known" : "estimated"; }

Variant parse_variant(std::string_view text) {
  if (text == "known") return Variant::known;
  if (text == "estimated") return Variant::estimated;
  throw std::invalid_argument("unknown variant: " + std::string(text));
}

PairKernel raw_pair_kernel(double theta) {
  return {[theta](double s, double t) { return kernel_K(theta, s, t); },
          [theta](double s, double t) { return kernel_Kprime(theta, s, t); }};
}

PairKernel bridged_pair_kernel(double theta) {
  return {[theta](double s, double t) { return kernel_K0(theta, s, t); },
          [theta](double s, double t) { return kernel_K0prime(theta, s, t); }};
}

}  // namespace urns
