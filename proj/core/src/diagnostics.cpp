#include "urns/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "urns/estimation.hpp"
#include "urns/kernels.hpp"
#include "urns/parallel.hpp"

namespace urns {
namespace {

// Mean and standard error of x_r * y_r over replications.
CovCell product_cell(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t reps = x.size();
  double sum = 0.0;
  for (std::size_t r = 0; r < reps; ++r) sum += x[r] * y[r];
  CovCell cell;
  cell.empirical = sum / static_cast<double>(reps);
  if (reps >= 2) {
    double ss = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double d = x[r] * y[r] - cell.empirical;
      ss += d * d;
    }
    cell.std_error = std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps));
  }
  return cell;
}

void finish(CovCell& cell) {
  cell.z_defined = cell.std_error > 0.0;
  cell.z = cell.z_defined ? (cell.empirical - cell.reference) / cell.std_error : 0.0;
}

void validate(std::uint64_t n, std::size_t reps, std::span<const double> grid) {
  if (n < 1) throw std::invalid_argument("covariance check: n must be positive");
  if (reps < 1) throw std::invalid_argument("covariance check: reps must be positive");
  for (double g : grid)
    if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("covariance check: grid points must lie in (0, 1]");
}

}  // namespace

std::vector<CovCell> fixed_n_covariance_check(const ProbabilityLaw& law, std::uint64_t n, std::size_t reps,
                                              Seed seed, std::span<const double> grid) {
  validate(n, reps, grid);
  const double theta = law.theta();
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("fixed_n_covariance_check: law needs theta in (0, 1)");
  const std::size_t g = grid.size();
  std::vector<std::size_t> index(g);
  std::vector<double> mean(g);
  for (std::size_t i = 0; i < g; ++i) {
    index[i] = grid_index(n, grid[i]);
    mean[i] = exact_mean_occupancy(law, static_cast<double>(index[i]));
  }
  const double scale = 1.0 / std::sqrt(exact_mean_occupancy(law, static_cast<double>(n)));

  // z[i][r]: forward at grid i; zp[i][r]: backward.
  std::vector<std::vector<double>> z(g, std::vector<double>(reps));
  std::vector<std::vector<double>> zp(g, std::vector<double>(reps));
  const UrnSampler sampler(law);
  parallel_for(reps, [&](std::size_t r) {
    const Stream stream = sample_stream(sampler, n, derive_seed(seed, r));
    const OccupancyPath fwd = forward_counts(stream);
    const OccupancyPath bwd = backward_counts(stream);
    for (std::size_t i = 0; i < g; ++i) {
      z[i][r] = (static_cast<double>(fwd[index[i]]) - mean[i]) * scale;
      zp[i][r] = (static_cast<double>(bwd[index[i]]) - mean[i]) * scale;
    }
  });

  std::vector<CovCell> cells;
  auto add = [&](const char* pair, std::size_t i, std::size_t j, const std::vector<double>& x,
                 const std::vector<double>& y, double reference) {
    CovCell cell = product_cell(x, y);
    cell.scheme = "fixed";
    cell.pair = pair;
    cell.s = grid[i];
    cell.t = grid[j];
    cell.reference = reference;
    finish(cell);
    cells.push_back(std::move(cell));
  };
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = i; j < g; ++j) add("Z,Z", i, j, z[i], z[j], kernel_K(theta, grid[i], grid[j]));
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = i; j < g; ++j) add("Z',Z'", i, j, zp[i], zp[j], kernel_K(theta, grid[i], grid[j]));
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j) add("Z,Z'", i, j, z[i], zp[j], kernel_Kprime(theta, grid[i], grid[j]));
  return cells;
}

std::vector<CovCell> poissonized_covariance_check(const ProbabilityLaw& law, std::uint64_t n, std::size_t reps,
                                                  Seed seed, std::span<const double> grid) {
  validate(n, reps, grid);
  const std::size_t g = grid.size();
  const double nd = static_cast<double>(n);
  std::vector<double> mean(g);
  for (std::size_t i = 0; i < g; ++i) mean[i] = poisson_mean_occupancy(law, grid[i] * nd);

  std::vector<std::vector<double>> x(g, std::vector<double>(reps));
  std::vector<std::vector<double>> y(g, std::vector<double>(reps));
  const UrnSampler sampler(law);
  parallel_for(reps, [&](std::size_t r) {
    const PoissonizedCounts counts = poissonized_counts(sampler, n, grid, derive_seed(seed, r));
    for (std::size_t i = 0; i < g; ++i) {
      x[i][r] = static_cast<double>(counts.forward[i]) - mean[i];
      y[i][r] = static_cast<double>(counts.backward[i]) - mean[i];
    }
  });

  std::vector<CovCell> cells;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = 0; j < g; ++j) {
      CovCell cell = product_cell(x[i], y[j]);
      cell.scheme = "poisson";
      cell.pair = "R,R'";
      cell.s = grid[i];
      cell.t = grid[j];
      cell.reference = exact_poisson_cov(law, n, grid[i], grid[j]);
      finish(cell);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

double fraction_within(const std::vector<CovCell>& cells, double limit) {
  if (cells.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& c : cells)
    if (c.z_defined && std::abs(c.z) <= limit) ++ok;
  return static_cast<double>(ok) / static_cast<double>(cells.size());
}

std::string format_covcheck_table(const std::vector<CovCell>& cells) {
  std::string out = "scheme   pair      s       t       empirical        reference        std_error        z\n";
  char buf[256];
  for (const auto& c : cells) {
    char zbuf[32];
    if (c.z_defined) std::snprintf(zbuf, sizeof zbuf, "%+.4f", c.z);
    else std::snprintf(zbuf, sizeof zbuf, "undefined");
    std::snprintf(buf, sizeof buf, "%-8s %-8s %-7.4g %-7.4g %-+16.9g %-+16.9g %-16.9g %s\n", c.scheme.c_str(),
                  c.pair.c_str(), c.s, c.t, c.empirical, c.reference, c.std_error, zbuf);
    out += buf;
  }
  return out;
}

}  // namespace urns
