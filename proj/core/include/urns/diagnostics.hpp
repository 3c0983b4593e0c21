#pragma once

// Empirical covariance checks of the forward/backward processes against
// the limit kernels (fixed-n scheme) and the exact Poissonized covariance.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "urns/rng.hpp"
#include "urns/urn_model.hpp"

namespace urns {

struct CovCell {
  std::string scheme;  ///< "fixed" or "poisson"
  std::string pair;    ///< "Z,Z", "Z',Z'", "Z,Z'" (fixed) or "R,R'" (poisson)
  double s = 0.0;
  double t = 0.0;
  double empirical = 0.0;
  double reference = 0.0;  ///< K, K' (fixed) or exact_poisson_cov (poisson)
  double std_error = 0.0;
  double z = 0.0;
  bool z_defined = false;  ///< false with fewer than 2 replications or zero spread
};

/// Fixed-n scheme: Z_n(s) = (R_[ns] - E R_[ns]) / sqrt(E R_n) with exact
/// means; empirical E[Z_n(s) Z_n(t)] etc. against K, K'. Each (s, t) cell
/// reports the mean of the centered products and its standard error.
std::vector<CovCell> fixed_n_covariance_check(const ProbabilityLaw& law, std::uint64_t n, std::size_t reps,
                                              Seed seed, std::span<const double> grid);

/// Poissonized scheme: cov(R_Pi(tn), R'_Pi(tau n)) against exact_poisson_cov,
/// centered by the exact Poissonized means.
std::vector<CovCell> poissonized_covariance_check(const ProbabilityLaw& law, std::uint64_t n, std::size_t reps,
                                                  Seed seed, std::span<const double> grid);

/// Fraction of cells with a defined z-score and |z| <= limit.
double fraction_within(const std::vector<CovCell>& cells, double limit);

/// Whitespace-aligned table with one row per cell.
std::string format_covcheck_table(const std::vector<CovCell>& cells);

}  // namespace urns
