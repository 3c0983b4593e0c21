#include "urns/gaussian_limit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "urns/parallel.hpp"

namespace urns {
namespace {

constexpr std::size_t kChunk = 256;

// cov(Z0(s), xi) where xi = sum_j h_j t_j^-theta (Z(t_j) + Z'(t_j)); the same
// value is cov(Z0'(s), xi) because swapping Z and Z' swaps K and K'.
double bridge_xi_cov(double theta, const AMeasure& measure, double s) {
  const double s_theta = std::pow(s, theta);
  double total = 0.0;
  for (const auto& a : measure.atoms()) {
    const double u = a.location;
    const double z = kernel_K(theta, s, u) - s_theta * kernel_K(theta, 1.0, u);
    const double zp = kernel_Kprime(theta, s, u) - s_theta * kernel_Kprime(theta, 1.0, u);
    total += a.jump * std::pow(u, -theta) * (z + zp);
  }
  return total;
}

double log_correction(double theta, double t) { return t > 0.0 ? 0.5 * std::pow(t, theta) * std::log(t) : 0.0; }

}  // namespace

PairKernel estimated_pair_kernel(double theta, const AMeasure& measure) {
  // var(xi) = sum_{j,l} h_j h_l (t_j t_l)^-theta * 2 (K + K')(t_j, t_l)
  const double xi_var = 4.0 * estimator_asym_variance(theta, measure);
  auto correction = [theta, measure, xi_var](double s, double t) {
    const double gs = log_correction(theta, s);
    const double gt = log_correction(theta, t);
    return -gt * bridge_xi_cov(theta, measure, s) - gs * bridge_xi_cov(theta, measure, t) + gs * gt * xi_var;
  };
  return {[theta, correction](double s, double t) { return kernel_K0(theta, s, t) + correction(s, t); },
          [theta, correction](double s, double t) { return kernel_K0prime(theta, s, t) + correction(s, t); }};
}

PairKernel limit_pair_kernel(double theta, Variant variant, const AMeasure* measure) {
  if (variant == Variant::known) return bridged_pair_kernel(theta);
  if (measure == nullptr) throw std::invalid_argument("estimated variant requires an A-measure");
  return estimated_pair_kernel(theta, *measure);
}

std::vector<double> limit_grid(std::size_t grid_size, const AMeasure* measure) {
  if (grid_size < 1) throw std::invalid_argument("limit_grid: grid size must be positive");
  std::vector<double> grid;
  grid.reserve(grid_size + 4);
  for (std::size_t k = 1; k <= grid_size; ++k) grid.push_back(static_cast<double>(k) / static_cast<double>(grid_size));
  grid.push_back(0.5);
  grid.push_back(1.0);
  if (measure != nullptr)
    for (const auto& a : measure->atoms()) grid.push_back(a.location);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

KernelGrid build_kernel_grid(const PairKernel& kernel, double theta, std::vector<double> grid) {
  if (grid.empty()) throw std::invalid_argument("build_kernel_grid: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= 1.0)) throw std::invalid_argument("build_kernel_grid: grid points must lie in (0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("build_kernel_grid: grid must be strictly increasing");
  }
  const auto m = static_cast<Eigen::Index>(grid.size());
  KernelGrid kg;
  kg.theta = theta;
  kg.block_cov.resize(2 * m, 2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double a = kernel.auto_cov(grid[i], grid[j]);
      const double c = kernel.cross_cov(grid[i], grid[j]);
      kg.block_cov(i, j) = kg.block_cov(j, i) = a;
      kg.block_cov(m + i, m + j) = kg.block_cov(m + j, m + i) = a;
      kg.block_cov(i, m + j) = kg.block_cov(m + j, i) = c;
      kg.block_cov(m + i, j) = kg.block_cov(j, m + i) = c;
    }
  }
  kg.grid = std::move(grid);

  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(2 * m, 2 * m);
  for (double jitter = 0.0; jitter <= 1.0000001e-8; jitter = jitter == 0.0 ? 1e-15 : jitter * 10.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(kg.block_cov + jitter * identity);
    if (llt.info() == Eigen::Success) {
      kg.jitter = jitter;
      kg.factor = llt.matrixL();
      return kg;
    }
  }
  throw std::runtime_error("build_kernel_grid: covariance not factorizable with jitter <= 1e-8");
}

KernelGrid build_kernel_grid(double theta, std::vector<double> grid, GridVariant variant) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("build_kernel_grid: theta must lie in (0, 1)");
  const PairKernel kernel = variant == GridVariant::raw ? raw_pair_kernel(theta) : bridged_pair_kernel(theta);
  return build_kernel_grid(kernel, theta, std::move(grid));
}

Eigen::MatrixXd gp_simulate(const KernelGrid& kg, std::size_t reps, Seed seed, std::size_t first_rep) {
  const Eigen::Index dim = kg.factor.rows();
  Eigen::MatrixXd normals(dim, static_cast<Eigen::Index>(reps));
  for (std::size_t r = 0; r < reps; ++r) {
    Engine engine = make_engine(derive_seed(seed, first_rep + r));
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < dim; ++i) normals(i, static_cast<Eigen::Index>(r)) = normal(engine);
  }
  return kg.factor.triangularView<Eigen::Lower>() * normals;
}

double piecewise_linear_square_integral(std::span<const double> t, std::span<const double> v) {
  if (t.size() != v.size()) throw std::invalid_argument("piecewise_linear_square_integral: size mismatch");
  double total = 0.0;
  double prev_t = 0.0;
  double prev_v = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double a = prev_v;
    const double b = v[i];
    total += (t[i] - prev_t) * (a * a + a * b + b * b) / 3.0;
    prev_t = t[i];
    prev_v = b;
  }
  return total;
}

LimitSample limit_w2_sample(double theta, Variant variant, const AMeasure* measure, std::size_t grid_size,
                            std::size_t reps, Seed seed) {
  if (reps < 1) throw std::invalid_argument("limit_w2_sample: reps must be positive");
  if (variant == Variant::estimated && measure == nullptr)
    throw std::invalid_argument("limit_w2_sample: estimated variant requires an A-measure");
  const AMeasure* grid_measure = variant == Variant::estimated ? measure : nullptr;
  const KernelGrid kg = build_kernel_grid(theta, limit_grid(grid_size, grid_measure), GridVariant::raw);
  const std::vector<double>& grid = kg.grid;
  const std::size_t m = grid.size();

  std::vector<double> t_theta(m);
  std::vector<double> log_term(m);
  for (std::size_t i = 0; i < m; ++i) {
    t_theta[i] = std::pow(grid[i], theta);
    log_term[i] = log_correction(theta, grid[i]);
  }
  // xi = sum_j weights[j] * (Z(t_j) + Z'(t_j)) over atom indices.
  std::vector<std::pair<std::size_t, double>> xi_terms;
  if (grid_measure != nullptr) {
    for (const auto& a : grid_measure->atoms()) {
      const auto idx = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), a.location) - grid.begin());
      xi_terms.emplace_back(idx, a.jump * std::pow(a.location, -theta));
    }
  }

  LimitSample sample;
  sample.variant = variant;
  sample.theta = theta;
  sample.reps = reps;
  sample.grid_size = grid_size;
  sample.seed = seed;
  if (grid_measure != nullptr) sample.measure = *grid_measure;
  sample.w2_values.resize(reps);

  const std::size_t chunks = (reps + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    const std::size_t count = std::min(kChunk, reps - first);
    const Eigen::MatrixXd paths = gp_simulate(kg, count, seed, first);
    std::vector<double> fwd(m);
    std::vector<double> bwd(m);
    for (std::size_t r = 0; r < count; ++r) {
      const auto col = paths.col(static_cast<Eigen::Index>(r));
      const double z1 = col(static_cast<Eigen::Index>(m - 1));
      const double zp1 = col(static_cast<Eigen::Index>(2 * m - 1));
      double xi = 0.0;
      for (const auto& [idx, w] : xi_terms)
        xi += w * (col(static_cast<Eigen::Index>(idx)) + col(static_cast<Eigen::Index>(m + idx)));
      for (std::size_t i = 0; i < m; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        fwd[i] = col(ii) - t_theta[i] * z1 - log_term[i] * xi;
        bwd[i] = col(static_cast<Eigen::Index>(m) + ii) - t_theta[i] * zp1 - log_term[i] * xi;
      }
      sample.w2_values[first + r] = piecewise_linear_square_integral(grid, fwd) + piecewise_linear_square_integral(grid, bwd);
    }
  });
  std::sort(sample.w2_values.begin(), sample.w2_values.end());
  return sample;
}

double mc_cdf(const LimitSample& sample, double x) {
  const auto& v = sample.w2_values;
  if (v.empty()) throw std::invalid_argument("mc_cdf: empty sample");
  const auto below = std::upper_bound(v.begin(), v.end(), x) - v.begin();
  return static_cast<double>(below) / static_cast<double>(v.size());
}

double mc_p_value(const LimitSample& sample, double x) {
  const auto& v = sample.w2_values;
  const auto at_least = v.end() - std::lower_bound(v.begin(), v.end(), x);
  return (static_cast<double>(at_least) + 1.0) / (static_cast<double>(v.size()) + 1.0);
}

void write_limit_sample(std::ostream& out, const LimitSample& sample) {
  out << "# urns limit-sample\n";
  out << "# theta=" << [&] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", sample.theta);
    return std::string(buf);
  }() << '\n';
  out << "# variant=" << to_string(sample.variant) << '\n';
  out << "# grid_size=" << sample.grid_size << '\n';
  out << "# reps=" << sample.reps << '\n';
  out << "# seed=" << sample.seed << '\n';
  if (sample.measure) out << "# measure=" << format_measure(*sample.measure) << '\n';
  char buf[32];
  for (double v : sample.w2_values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << '\n';
  }
}

LimitSample read_limit_sample(std::istream& in) {
  LimitSample sample;
  std::string line;
  bool has_theta = false;
  bool has_magic = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string body = line.substr(line.find_first_not_of("# "));
      if (body == "urns limit-sample") {
        has_magic = true;
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      if (key == "theta") {
        sample.theta = std::stod(value);
        has_theta = true;
      } else if (key == "variant") {
        sample.variant = parse_variant(value);
      } else if (key == "grid_size") {
        sample.grid_size = std::stoull(value);
      } else if (key == "reps") {
        sample.reps = std::stoull(value);
      } else if (key == "seed") {
        sample.seed = std::stoull(value);
      } else if (key == "measure") {
        std::vector<std::string> entries;
        std::size_t start = 0;
        while (start <= value.size()) {
          const auto comma = value.find(',', start);
          entries.push_back(value.substr(start, comma - start));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
        sample.measure = parse_measure(entries);
      }
      continue;
    }
    sample.w2_values.push_back(std::stod(line));
  }
  if (!has_magic || !has_theta) throw std::runtime_error("not a limit-sample artifact");
  if (sample.w2_values.size() != sample.reps) throw std::runtime_error("limit-sample artifact: value count mismatch");
  if (!std::is_sorted(sample.w2_values.begin(), sample.w2_values.end()))
    throw std::runtime_error("limit-sample artifact: values must be sorted");
  return sample;
}

}  // namespace urns
