#pragma once

// Simulation of the limiting Gaussian pair (Z, Z') on a grid and Monte Carlo
// tabulation of the null laws of the quadratic bridge statistics.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "urns/estimation.hpp"
#include "urns/kernels.hpp"
#include "urns/rng.hpp"

namespace urns {

/// Covariance of the estimated-theta bridge pair
///   Zhat(t) = Z0(t) - (t^theta log t / 2) xi,   xi = sum_j h_j t_j^-theta (Z(t_j) + Z'(t_j)),
/// assembled from K, K' by covariance algebra (Zhat' uses Z0' and the same xi).
PairKernel estimated_pair_kernel(double theta, const AMeasure& measure);

/// Covariance of the limit bridge pair for either test variant.
PairKernel limit_pair_kernel(double theta, Variant variant, const AMeasure* measure);

/// Uniform grid {1/m, ..., 1} augmented with 1/2 and the atom locations of
/// `measure` (if any); sorted, duplicates removed, 0 excluded.
std::vector<double> limit_grid(std::size_t grid_size, const AMeasure* measure = nullptr);

enum class GridVariant { raw, bridged };

struct KernelGrid {
  double theta = 0.0;
  std::vector<double> grid;
  /// 2m x 2m; blocks (auto, cross; cross, auto) evaluated on the grid.
  Eigen::MatrixXd block_cov;
  /// Smallest diagonal shift for which block_cov + jitter I factorized.
  double jitter = 0.0;
  /// Lower Cholesky factor of block_cov + jitter I.
  Eigen::MatrixXd factor;

  std::size_t size() const noexcept { return grid.size(); }
};

/// Fills the block covariance with (K, K') for GridVariant::raw or
/// (K0, K0') for GridVariant::bridged and factorizes it, escalating the
/// jitter 0, 1e-15, ..., 1e-8. Throws std::runtime_error beyond 1e-8.
KernelGrid build_kernel_grid(double theta, std::vector<double> grid, GridVariant variant);
KernelGrid build_kernel_grid(const PairKernel& kernel, double theta, std::vector<double> grid);

/// reps joint draws of (Z(grid), Z'(grid)); column r holds replication
/// first_rep + r, seeded by derive_seed(seed, first_rep + r).
Eigen::MatrixXd gp_simulate(const KernelGrid& kg, std::size_t reps, Seed seed, std::size_t first_rep = 0);

/// Exact integral over [0, t.back()] of the square of the piecewise-linear
/// function through (0, 0), (t_0, v_0), (t_1, v_1), ...:
/// sum over segments of (dt/3)(a^2 + ab + b^2).
double piecewise_linear_square_integral(std::span<const double> t, std::span<const double> v);

struct LimitSample {
  std::vector<double> w2_values;  ///< sorted ascending once finalized
  Variant variant = Variant::known;
  double theta = 0.0;
  std::size_t reps = 0;
  std::size_t grid_size = 0;
  Seed seed = 0;
  std::optional<AMeasure> measure;  ///< set for the estimated variant
};

/// Simulates the limit law of W^2 (known) or What^2 (estimated, plug-in
/// theta). The estimated variant requires `measure`.
LimitSample limit_w2_sample(double theta, Variant variant, const AMeasure* measure, std::size_t grid_size,
                            std::size_t reps, Seed seed);

/// Empirical CDF: fraction of sample values <= x.
double mc_cdf(const LimitSample& sample, double x);

/// (r + 1) / (m + 1) with r the number of sample values >= x.
double mc_p_value(const LimitSample& sample, double x);

void write_limit_sample(std::ostream& out, const LimitSample& sample);
LimitSample read_limit_sample(std::istream& in);

}  // namespace urns
