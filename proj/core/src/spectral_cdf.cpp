#include "urns/spectral_cdf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "urns/gaussian_limit.hpp"

namespace urns {
namespace {

constexpr double kMergeGap = 1e-9;
constexpr double kPositiveFloor = 1e-12;
constexpr double kTermTolerance = 1e-10;

using boost::math::quadrature::gauss_kronrod;

double diagonal_trace(const std::function<double(double)>& diag) {
  return gauss_kronrod<double, 61>::integrate(diag, 0.0, 1.0, 20, 1e-13);
}

// Descending operator eigenvalues -> ascending lambdas with merged multiplicities.
SpectralModel assemble(std::vector<double> eigs, std::size_t kmax, double trace) {
  std::sort(eigs.begin(), eigs.end(), std::greater<>());
  std::size_t positive = 0;
  while (positive < eigs.size() && eigs[positive] > kPositiveFloor) ++positive;
  if (positive < kmax)
    throw std::runtime_error("nystrom_eigs: only " + std::to_string(positive) + " eigenvalues above 1e-12, need " +
                             std::to_string(kmax));
  SpectralModel model;
  model.kmax = kmax;
  model.trace = trace;
  double captured = 0.0;
  for (std::size_t i = 0; i < kmax; ++i) {
    const double mu = eigs[i];
    captured += mu;
    if (!model.lambdas.empty()) {
      const double prev_mu = 1.0 / model.lambdas.back();
      if (std::abs(prev_mu - mu) <= kMergeGap * prev_mu) {
        ++model.multiplicity.back();
        continue;
      }
    }
    model.lambdas.push_back(1.0 / mu);
    model.multiplicity.push_back(1);
  }
  model.trace_captured = trace > 0.0 ? std::min(1.0, captured / trace) : 1.0;
  return model;
}

std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& matrix) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("nystrom_eigs: eigen solver failed");
  const Eigen::VectorXd& v = solver.eigenvalues();
  return {v.data(), v.data() + v.size()};
}

// ---- Smirnov's formula ----

// log prod_{j != skip} |1 - lambda/lambda_j|^mult_j, the tail factor
// exp(-lambda * deficit) standing in for the omitted eigenvalues.
double log_abs_d(const SpectralModel& model, double lambda, std::size_t skip, double deficit) {
  double total = -lambda * deficit;
  for (std::size_t j = 0; j < model.lambdas.size(); ++j) {
    if (j == skip) continue;
    total += static_cast<double>(model.multiplicity[j]) * std::log(std::abs(1.0 - lambda / model.lambdas[j]));
  }
  return total;
}

// Integral of exp(-lambda x/2) / sqrt(-D(lambda)) / lambda over
// (lambda_lo, lambda_hi); hi < 0 means +infinity. The inverse square-root
// singularities at the ends are removed by lambda = end +- u^2.
double interval_integral(const SpectralModel& model, std::size_t lo, std::ptrdiff_t hi, double x, double deficit) {
  const double a = model.lambdas[lo];
  auto near_end = [&](double end, std::size_t end_index, double sign) {
    return [&, end, end_index, sign](double u) {
      const double lambda = end + sign * u * u;
      const double log_rest = log_abs_d(model, lambda, end_index, deficit);
      return 2.0 * std::sqrt(end) * std::exp(-0.5 * lambda * x - 0.5 * log_rest) / lambda;
    };
  };
  if (hi < 0) {
    const double left = gauss_kronrod<double, 31>::integrate(near_end(a, lo, 1.0), 0.0, std::sqrt(a), 15, 1e-12);
    auto plain = [&](double lambda) {
      const double log_all = log_abs_d(model, lambda, model.lambdas.size(), deficit);
      return std::exp(-0.5 * lambda * x - 0.5 * log_all) / lambda;
    };
    const double rest = gauss_kronrod<double, 31>::integrate(plain, 2.0 * a, std::numeric_limits<double>::infinity(), 15, 1e-12);
    return left + rest;
  }
  const auto hi_index = static_cast<std::size_t>(hi);
  const double b = model.lambdas[hi_index];
  const double half = std::sqrt(0.5 * (b - a));
  const double left = gauss_kronrod<double, 31>::integrate(near_end(a, lo, 1.0), 0.0, half, 15, 1e-12);
  const double right = gauss_kronrod<double, 31>::integrate(near_end(b, hi_index, -1.0), 0.0, half, 15, 1e-12);
  return left + right;
}

// log of an upper bound on F(x): W >= sum_k eta_k^2 / lambda_k over retained k.
double log_cdf_upper_bound(const SpectralModel& model, double x) {
  double total = 0.0;
  for (std::size_t k = 0; k < model.lambdas.size(); ++k)
    total += static_cast<double>(model.multiplicity[k]) * std::log(std::erf(std::sqrt(0.5 * model.lambdas[k] * x)));
  return total;
}

// (1/pi) sum_k (-1)^(k+1) I_k = 1 - F(x).
double smirnov_upper_tail(const SpectralModel& model, double x) {
  if (!(x > 0.0)) throw std::domain_error("smirnov_cdf: x must be positive");
  if (model.lambdas.empty()) throw std::invalid_argument("smirnov_cdf: empty spectral model");

  if (log_cdf_upper_bound(model, x) < std::log(1e-15)) return 1.0;

  double merged = 0.0;
  for (std::size_t k = 0; k < model.lambdas.size(); ++k)
    merged += static_cast<double>(model.multiplicity[k] - 1) / model.lambdas[k];
  if (merged > 1e-6 * model.trace) throw SpectralDeclined("spectral model has a degenerate eigenvalue cluster");

  const double deficit = model.trace_deficit();
  const std::size_t count = model.lambdas.size();
  // A complete finite spectrum: the intervals run out exactly, the last one
  // open when the count is odd.
  const bool complete = deficit <= 1e-15 * std::max(model.trace, 1.0);
  const bool open_last = count % 2 == 1 && complete;

  double sum = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  double sign = 1.0;
  for (std::size_t lo = 0; lo < count; lo += 2) {
    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(lo + 1);
    if (lo + 1 >= count) {
      if (!open_last) break;
      hi = -1;
    }
    const double term = interval_integral(model, lo, hi, x, deficit);
    if (term > previous * (1.0 + 1e-9))
      throw SpectralDeclined("Smirnov terms are not monotonically decreasing at x = " + std::to_string(x));
    sum += sign * term;
    if (term < kTermTolerance || hi < 0) return std::clamp(sum / std::numbers::pi, 0.0, 1.0);
    previous = term;
    sign = -sign;
  }
  if (complete) return std::clamp(sum / std::numbers::pi, 0.0, 1.0);
  throw SpectralDeclined("Smirnov series did not converge within the retained eigenvalues at x = " + std::to_string(x));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double SpectralModel::trace_deficit() const noexcept {
  double captured = 0.0;
  for (std::size_t k = 0; k < lambdas.size(); ++k) captured += static_cast<double>(multiplicity[k]) / lambdas[k];
  return std::max(0.0, trace - captured);
}

void gauss_legendre_unit(std::size_t m, std::vector<double>& nodes, std::vector<double>& weights) {
  if (m < 1) throw std::invalid_argument("gauss_legendre_unit: m must be positive");
  nodes.assign(m, 0.0);
  weights.assign(m, 0.0);
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (md + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t j = 1; j <= m; ++j) {
        const double p2 = p1;
        p1 = p0;
        const double jd = static_cast<double>(j);
        p0 = ((2.0 * jd - 1.0) * z * p1 - (jd - 1.0) * p2) / jd;
      }
      derivative = md * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / derivative;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * derivative * derivative);
    // Map [-1, 1] to (0, 1).
    nodes[i] = 0.5 * (1.0 - z);
    nodes[m - 1 - i] = 0.5 * (1.0 + z);
    weights[i] = weights[m - 1 - i] = 0.5 * w;
  }
}

SpectralModel nystrom_eigs(const PairKernel& kernel, std::size_t m, std::size_t kmax) {
  if (kmax < 1 || m < 4 * kmax) throw std::invalid_argument("nystrom_eigs: need kmax >= 1 and m >= 4 kmax");
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre_unit(m, x, w);
  const auto mi = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd a(2 * mi, 2 * mi);
  for (Eigen::Index i = 0; i < mi; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double scale = std::sqrt(w[i] * w[j]);
      const double auto_v = scale * kernel.auto_cov(x[i], x[j]);
      const double cross_v = scale * 0.5 * (kernel.cross_cov(x[i], x[j]) + kernel.cross_cov(x[j], x[i]));
      a(i, j) = a(j, i) = auto_v;
      a(mi + i, mi + j) = a(mi + j, mi + i) = auto_v;
      a(i, mi + j) = a(mi + j, i) = cross_v;
      a(mi + i, j) = a(j, mi + i) = cross_v;
    }
  }
  const double trace = 2.0 * diagonal_trace([&](double t) { return kernel.auto_cov(t, t); });
  SpectralModel model = assemble(symmetric_eigenvalues(a), kmax, trace);
  model.m = m;
  return model;
}

SpectralModel nystrom_eigs_scalar(const std::function<double(double, double)>& kernel, std::size_t m, std::size_t kmax) {
  if (kmax < 1 || m < 4 * kmax) throw std::invalid_argument("nystrom_eigs: need kmax >= 1 and m >= 4 kmax");
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre_unit(m, x, w);
  const auto mi = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd a(mi, mi);
  for (Eigen::Index i = 0; i < mi; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = std::sqrt(w[i] * w[j]) * kernel(x[i], x[j]);
  const double trace = diagonal_trace([&](double t) { return kernel(t, t); });
  SpectralModel model = assemble(symmetric_eigenvalues(a), kmax, trace);
  model.m = m;
  return model;
}

SpectralModel nystrom_eigs(double theta, Variant variant, const AMeasure* measure, std::size_t m, std::size_t kmax) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("nystrom_eigs: theta must lie in (0, 1)");
  SpectralModel model = nystrom_eigs(limit_pair_kernel(theta, variant, measure), m, kmax);
  model.theta = theta;
  model.variant = variant;
  if (variant == Variant::estimated) model.measure = *measure;
  return model;
}

SpectralModel spectral_model_from_eigenvalues(std::vector<double> operator_eigenvalues, double trace) {
  const std::size_t k = operator_eigenvalues.size();
  SpectralModel model = assemble(std::move(operator_eigenvalues), k, trace);
  return model;
}

double smirnov_cdf(const SpectralModel& model, double x) { return 1.0 - smirnov_upper_tail(model, x); }

double spectral_p_value(const SpectralModel& model, double w2) {
  if (w2 < 0.0) throw std::invalid_argument("spectral_p_value: statistic must be non-negative");
  if (w2 == 0.0) return 1.0;
  return smirnov_upper_tail(model, w2);
}

void write_spectral_model(std::ostream& out, const SpectralModel& model) {
  out << "# urns spectral-model\n";
  out << "# theta=" << format_double(model.theta) << '\n';
  out << "# variant=" << to_string(model.variant) << '\n';
  out << "# kmax=" << model.kmax << '\n';
  out << "# m=" << model.m << '\n';
  out << "# trace=" << format_double(model.trace) << '\n';
  out << "# trace_captured=" << format_double(model.trace_captured) << '\n';
  if (model.measure) out << "# measure=" << format_measure(*model.measure) << '\n';
  for (std::size_t k = 0; k < model.lambdas.size(); ++k) {
    out << format_double(model.lambdas[k]);
    if (model.multiplicity[k] > 1) out << '\t' << model.multiplicity[k];
    out << '\n';
  }
}

SpectralModel read_spectral_model(std::istream& in) {
  SpectralModel model;
  std::string line;
  bool has_magic = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string body = line.substr(line.find_first_not_of("# "));
      if (body == "urns spectral-model") {
        has_magic = true;
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      if (key == "theta") model.theta = std::stod(value);
      else if (key == "variant") model.variant = parse_variant(value);
      else if (key == "kmax") model.kmax = std::stoull(value);
      else if (key == "m") model.m = std::stoull(value);
      else if (key == "trace") model.trace = std::stod(value);
      else if (key == "trace_captured") model.trace_captured = std::stod(value);
      else if (key == "measure") {
        std::vector<std::string> entries;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) entries.push_back(item);
        model.measure = parse_measure(entries);
      }
      continue;
    }
    std::stringstream ss(line);
    double lambda = 0.0;
    std::size_t mult = 1;
    ss >> lambda;
    if (!(ss >> mult)) mult = 1;
    if (!model.lambdas.empty() && !(lambda > model.lambdas.back()))
      throw std::runtime_error("spectral-model artifact: eigenvalues must be strictly increasing");
    model.lambdas.push_back(lambda);
    model.multiplicity.push_back(mult);
  }
  if (!has_magic || model.lambdas.empty()) throw std::runtime_error("not a spectral-model artifact");
  return model;
}

}  // namespace urns
