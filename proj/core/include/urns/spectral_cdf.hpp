#pragma once

// Spectral route to the null law of the quadratic statistic: the limit is
// W^2 = sum_k eta_k^2 / lambda_k with eta_k i.i.d. N(0,1) and 1/lambda_k the
// eigenvalues of the covariance operator of the limit bridge pair. The
// eigenvalues come from a Nystrom discretization; the CDF from Smirnov's
// alternating integral formula.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "urns/estimation.hpp"
#include "urns/kernels.hpp"

namespace urns {

/// Raised when Smirnov's formula cannot be trusted for a model/argument:
/// the alternating terms are not monotonically decreasing, they run out
/// before converging, or the spectrum is degenerate. Callers fall back to
/// Monte Carlo.
class SpectralDeclined : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpectralModel {
  /// lambda_1 < lambda_2 < ...: reciprocals of the retained operator eigenvalues.
  std::vector<double> lambdas;
  /// Eigenvalues closer than 1e-9 relative are merged; this records how many.
  std::vector<std::size_t> multiplicity;
  std::size_t kmax = 0;
  std::size_t m = 0;  ///< quadrature nodes per component
  double trace = 0.0;  ///< operator trace by adaptive quadrature of the kernel diagonal
  double trace_captured = 0.0;
  Variant variant = Variant::known;
  double theta = 0.0;
  std::optional<AMeasure> measure;

  /// Trace not accounted for by the retained eigenvalues (>= 0).
  double trace_deficit() const noexcept;
};

/// Nystrom eigenvalues of the bridge-pair covariance operator for the known
/// or estimated (plug-in theta) test. Requires m >= 4 kmax.
SpectralModel nystrom_eigs(double theta, Variant variant, const AMeasure* measure, std::size_t m, std::size_t kmax);

/// Same computation for an arbitrary symmetric matrix-valued kernel.
SpectralModel nystrom_eigs(const PairKernel& kernel, std::size_t m, std::size_t kmax);

/// Single-component operator with kernel k(s,t) on [0,1]^2.
SpectralModel nystrom_eigs_scalar(const std::function<double(double, double)>& kernel, std::size_t m, std::size_t kmax);

/// Model from given operator eigenvalues (any order) and total trace.
SpectralModel spectral_model_from_eigenvalues(std::vector<double> operator_eigenvalues, double trace);

/// F(x) = P(W^2 <= x). Throws SpectralDeclined, or std::domain_error for x <= 0.
double smirnov_cdf(const SpectralModel& model, double x);

/// 1 - F(w2); 1 when w2 == 0. The upper tail is summed directly, so tiny
/// p-values keep their relative precision.
double spectral_p_value(const SpectralModel& model, double w2);

/// Gauss-Legendre nodes and weights on (0, 1).
void gauss_legendre_unit(std::size_t m, std::vector<double>& nodes, std::vector<double>& weights);

void write_spectral_model(std::ostream& out, const SpectralModel& model);
SpectralModel read_spectral_model(std::istream& in);

}  // namespace urns
