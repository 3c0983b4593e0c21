#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "urns/bridge_tests.hpp"
#include "urns/diagnostics.hpp"
#include "urns/estimation.hpp"
#include "urns/gaussian_limit.hpp"
#include "urns/spectral_cdf.hpp"
#include "urns/stream_io.hpp"
#include "urns/urn_model.hpp"

namespace urns::cli {
namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::optional<double> theta;
  std::optional<std::uint64_t> n;
  std::optional<std::size_t> reps;
  Seed seed = 1;
  std::vector<std::string> measure;
  std::size_t grid_size = 256;
  std::string backend;
  std::string input;
  std::string output;
  std::string format = "kv";
  std::string null_path;
  std::string dict_path;
  std::size_t kmax = 64;
  std::size_t nodes = 256;
  std::optional<std::uint64_t> support;
  std::vector<double> grid;
  std::string scheme = "both";
};

constexpr std::size_t kDefaultTestReps = 10000;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Effective configuration as one line; the output path is left out so that
// an output does not depend on where it is written.
std::string canonical(const RunConfig& c, const std::optional<AMeasure>& measure) {
  std::string s = "command=" + c.command;
  if (c.theta) s += " theta=" + num(*c.theta);
  if (c.n) s += " n=" + std::to_string(*c.n);
  if (c.reps) s += " reps=" + std::to_string(*c.reps);
  s += " seed=" + std::to_string(c.seed);
  if (measure) s += " measure=" + format_measure(*measure);
  if (c.command == "test" || c.command == "tabulate") {
    s += " grid_size=" + std::to_string(c.grid_size);
    s += " backend=" + c.backend;
    s += " kmax=" + std::to_string(c.kmax);
    s += " nodes=" + std::to_string(c.nodes);
  }
  if (!c.input.empty()) s += " input=" + c.input;
  if (c.support) s += " support=" + std::to_string(*c.support);
  if (c.command == "covcheck") {
    s += " scheme=" + c.scheme + " grid=";
    for (std::size_t i = 0; i < c.grid.size(); ++i) s += (i ? "," : "") + num(c.grid[i]);
  }
  return s;
}

std::string provenance(const RunConfig& c, const std::optional<AMeasure>& measure) {
  const std::string config = canonical(c, measure);
  return "# command=" + c.command + "\n# seed=" + std::to_string(c.seed) + "\n# config=" + config +
         "\n# config_digest=" + fnv1a_hex(config) + "\n";
}

void require_theta(const RunConfig& c) {
  if (!c.theta) throw ConfigError(c.command + ": --theta is required");
  if (!(*c.theta > 0.0 && *c.theta < 1.0)) throw ConfigError("--theta must lie in (0, 1)");
}

void require_n(const RunConfig& c) {
  if (!c.n) throw ConfigError(c.command + ": --n is required");
  if (*c.n < 1) throw ConfigError("--n must be positive");
}

std::optional<AMeasure> measure_of(const RunConfig& c) {
  if (c.measure.empty()) return std::nullopt;
  try {
    return parse_measure(c.measure);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// Writes to --output, or to `out` when no path is given.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw std::runtime_error("write failed");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

ParsedStream read_input(const RunConfig& c) {
  if (c.input.empty()) throw ConfigError(c.command + ": --input is required");
  ParsedStream parsed = read_stream_file(c.input);
  if (!c.dict_path.empty()) {
    std::ofstream dict(c.dict_path, std::ios::binary | std::ios::trunc);
    if (!dict) throw std::runtime_error("cannot open dictionary file: " + c.dict_path);
    write_dictionary(dict, parsed.dictionary);
  }
  return parsed;
}

ProbabilityLaw law_for(const RunConfig& c) {
  const std::uint64_t support = c.support ? *c.support : tail_safe_support(*c.theta, *c.n);
  if (support < 1) throw ConfigError("--support must be positive");
  return zipf_law(*c.theta, support);
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  require_theta(c);
  require_n(c);
  const ProbabilityLaw law = law_for(c);
  const Stream stream = sample_stream(law, *c.n, c.seed);
  Sink sink(c.output, out);
  sink.get() << provenance(c, std::nullopt);
  sink.get() << "# support=" << law.support() << "\n# tail_mass_bound=" << num(law.tail_mass_bound()) << '\n';
  write_stream(sink.get(), stream);
  sink.finish();
  return 0;
}

int cmd_estimate(const RunConfig& c, std::ostream& out) {
  const auto measure = measure_of(c).value_or(AMeasure::example1());
  const ParsedStream parsed = read_input(c);
  if (parsed.stream.size() < 2) throw std::runtime_error("estimate: stream of length >= 2 required");
  const ThetaEstimate est =
      theta_estimator(forward_counts(parsed.stream), backward_counts(parsed.stream), measure);
  Sink sink(c.output, out);
  auto& o = sink.get();
  if (c.format == "json") {
    nlohmann::ordered_json j;
    j["value"] = est.value;
    j["raw_value"] = est.raw_value;
    j["forward"] = est.forward;
    j["backward"] = est.backward;
    j["n"] = est.n;
    j["rn"] = est.rn;
    j["asym_sd"] = est.asym_sd;
    j["clamped"] = est.clamped;
    j["measure"] = format_measure(measure);
    j["provenance"] = {{"command", c.command}, {"seed", c.seed}, {"config", canonical(c, measure)},
                       {"config_digest", fnv1a_hex(canonical(c, measure))}};
    o << j.dump(2) << '\n';
  } else {
    o << provenance(c, measure);
    o << "value=" << num(est.value) << "\nraw_value=" << num(est.raw_value) << "\nforward=" << num(est.forward)
      << "\nbackward=" << num(est.backward) << "\nn=" << est.n << "\nrn=" << est.rn << "\nasym_sd=" << num(est.asym_sd)
      << "\nclamped=" << (est.clamped ? "true" : "false") << "\nmeasure=" << format_measure(measure) << '\n';
  }
  sink.finish();
  return 0;
}

struct Backends {
  std::shared_ptr<MonteCarloBackend> montecarlo;
  std::shared_ptr<SpectralBackend> spectral;
  std::unique_ptr<AutoBackend> automatic;

  const CdfBackend& selected(const std::string& name) const {
    if (name == "montecarlo") return *montecarlo;
    if (name == "spectral") return *spectral;
    return *automatic;
  }
};

Backends make_backends(const RunConfig& c) {
  if (c.backend != "montecarlo" && c.backend != "spectral" && c.backend != "auto")
    throw ConfigError("--backend must be montecarlo, spectral or auto");
  if (c.grid_size < 1) throw ConfigError("--grid-size must be positive");
  if (c.reps && *c.reps < 1) throw ConfigError("--reps must be positive");
  if (c.kmax < 1 || c.nodes < 4 * c.kmax) throw ConfigError("--nodes must be at least 4 * --kmax");
  Backends b;
  b.montecarlo = std::make_shared<MonteCarloBackend>(
      MonteCarloBackend::Settings{c.grid_size, c.reps.value_or(kDefaultTestReps), c.seed});
  b.spectral = std::make_shared<SpectralBackend>(SpectralBackend::Settings{c.nodes, c.kmax});
  b.automatic = std::make_unique<AutoBackend>(b.spectral, b.montecarlo);
  return b;
}

bool same_law(double theta, Variant variant, const std::optional<AMeasure>& m, const NullQuery& q) {
  if (theta != q.theta || variant != q.variant) return false;
  if (variant == Variant::known) return true;
  return m && q.measure && format_measure(*m) == format_measure(*q.measure);
}

// Loads a persisted null law into the matching backend. Returns false when
// the artifact describes a different law.
bool preload_artifact(const std::string& path, Backends& b, const NullQuery& q) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open null artifact: " + path);
  std::string magic;
  std::string line;
  while (std::getline(in, line))
    if (line == "# urns limit-sample" || line == "# urns spectral-model") {
      magic = line;
      break;
    }
  in.clear();
  in.seekg(0);
  if (magic == "# urns limit-sample") {
    LimitSample s = read_limit_sample(in);
    if (!same_law(s.theta, s.variant, s.measure, q)) return false;
    b.montecarlo->preload(std::move(s));
    return true;
  }
  if (magic == "# urns spectral-model") {
    SpectralModel m = read_spectral_model(in);
    if (!same_law(m.theta, m.variant, m.measure, q)) return false;
    b.spectral->preload(std::move(m));
    return true;
  }
  throw std::runtime_error("unrecognized null artifact: " + path);
}

void write_artifact(const std::string& path, const RunConfig& c, const std::optional<AMeasure>& measure,
                    const Backends& b, const NullQuery& q, const std::string& backend_used) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open null artifact for writing: " + path);
  out << provenance(c, measure);
  if (backend_used == "spectral") write_spectral_model(out, *b.spectral->model(q));
  else write_limit_sample(out, *b.montecarlo->tabulation(q));
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

int cmd_test(const RunConfig& c, std::ostream& out) {
  const auto measure = measure_of(c);
  if (c.theta && measure) throw ConfigError("test: give either --theta (known) or --measure (estimated), not both");
  if (!c.theta && !measure) throw ConfigError("test: --theta or --measure is required");
  if (c.theta) require_theta(c);
  if (c.format != "kv" && c.format != "json") throw ConfigError("--format must be kv or json");
  Backends b = make_backends(c);
  const ParsedStream parsed = read_input(c);
  const Stream& stream = parsed.stream;
  if (measure && stream.size() < 2) throw std::runtime_error("test: stream of length >= 2 required");

  const OccupancyPath fwd = forward_counts(stream);
  const OccupancyPath bwd = backward_counts(stream);
  NullQuery query{};
  if (c.theta) {
    query = {*c.theta, Variant::known, nullptr};
  } else {
    query = {theta_estimator(fwd, bwd, *measure).value, Variant::estimated, &*measure};
  }

  std::vector<std::string> notes;
  const bool reuse = !c.null_path.empty() && std::filesystem::exists(c.null_path);
  if (reuse && !preload_artifact(c.null_path, b, query))
    notes.push_back("null artifact " + c.null_path + " describes a different law; recomputed");

  TestReport report = c.theta ? run_known_theta_test(fwd, bwd, *c.theta, b.selected(c.backend))
                              : run_estimated_theta_test(fwd, bwd, *measure, b.selected(c.backend));
  for (auto& n : notes) report.warnings.push_back(std::move(n));
  if (!c.null_path.empty() && !reuse) write_artifact(c.null_path, c, measure, b, query, report.cdf_backend);

  Sink sink(c.output, out);
  auto& o = sink.get();
  if (c.format == "json") {
    auto j = nlohmann::ordered_json::parse(to_json(report));
    j["provenance"] = {{"command", c.command}, {"seed", c.seed}, {"config", canonical(c, measure)},
                       {"config_digest", fnv1a_hex(canonical(c, measure))}};
    o << j.dump(2) << '\n';
  } else {
    o << provenance(c, measure) << to_key_value(report);
  }
  sink.finish();
  return 0;
}

int cmd_tabulate(const RunConfig& c, std::ostream& out) {
  require_theta(c);
  const auto measure = measure_of(c);
  if (c.backend != "montecarlo" && c.backend != "spectral")
    throw ConfigError("tabulate: --backend must be montecarlo or spectral");
  Backends b = make_backends(c);
  const NullQuery q{*c.theta, measure ? Variant::estimated : Variant::known, measure ? &*measure : nullptr};
  Sink sink(c.output, out);
  sink.get() << provenance(c, measure);
  if (c.backend == "spectral") write_spectral_model(sink.get(), *b.spectral->model(q));
  else write_limit_sample(sink.get(), *b.montecarlo->tabulation(q));
  sink.finish();
  return 0;
}

int cmd_covcheck(const RunConfig& c, std::ostream& out) {
  require_theta(c);
  require_n(c);
  if (!c.reps) throw ConfigError("covcheck: --reps is required");
  if (*c.reps < 1) throw ConfigError("--reps must be positive");
  if (c.scheme != "fixed" && c.scheme != "poisson" && c.scheme != "both")
    throw ConfigError("--scheme must be fixed, poisson or both");
  for (double g : c.grid)
    if (!(g > 0.0 && g <= 1.0)) throw ConfigError("--grid points must lie in (0, 1]");
  const ProbabilityLaw law = law_for(c);
  Sink sink(c.output, out);
  auto& o = sink.get();
  o << provenance(c, std::nullopt) << "# support=" << law.support() << '\n';
  auto section = [&](const char* title, const std::vector<CovCell>& cells) {
    o << "## " << title << '\n' << format_covcheck_table(cells);
    std::size_t defined = 0;
    for (const auto& cell : cells) defined += cell.z_defined ? 1 : 0;
    o << "# cells=" << cells.size() << " z_defined=" << defined << " within_3se=" << num(fraction_within(cells, 3.0))
      << '\n';
  };
  if (c.scheme != "poisson")
    section("fixed-n scheme: Z_n vs K, K'", fixed_n_covariance_check(law, *c.n, *c.reps, c.seed, c.grid));
  if (c.scheme != "fixed")
    section("poissonized scheme: cov(R, R') vs exact",
            poissonized_covariance_check(law, *c.n, *c.reps, derive_seed(c.seed, 1, 0), c.grid));
  sink.finish();
  return 0;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Infinite urn scheme: simulation, exponent estimation and homogeneity tests", "urns"};
  app.set_config("--config", "", "INI/TOML file with option defaults; flags override it");
  app.require_subcommand(1);

  auto theta = [&](CLI::App* s) { s->add_option("--theta", cfg.theta, "Exponent in (0, 1)"); };
  auto n = [&](CLI::App* s) { s->add_option("--n", cfg.n, "Stream length / balls"); };
  auto reps = [&](CLI::App* s) { s->add_option("--reps", cfg.reps, "Monte Carlo replications"); };
  auto seed = [&](CLI::App* s) { s->add_option("--seed", cfg.seed, "Master RNG seed")->capture_default_str(); };
  auto measure = [&](CLI::App* s) {
    s->add_option("--measure", cfg.measure, "A-measure: repeated atom=t:h, or example1")->allow_extra_args(false);
  };
  auto io = [&](CLI::App* s, bool input) {
    if (input) {
      s->add_option("--input", cfg.input, "Stream file (one token per line, '#' comments)");
      s->add_option("--dict", cfg.dict_path, "Write the token dictionary (token<TAB>id) here");
    }
    s->add_option("--output", cfg.output, "Output file (default: stdout)");
  };
  auto null_law = [&](CLI::App* s, const std::string& default_backend) {
    cfg.backend = default_backend;
    s->add_option("--grid-size", cfg.grid_size, "Monte Carlo limit grid size")->capture_default_str();
    s->add_option("--backend", cfg.backend, "montecarlo | spectral | auto")->capture_default_str();
    s->add_option("--kmax", cfg.kmax, "Spectral: retained eigenvalues")->capture_default_str();
    s->add_option("--nodes", cfg.nodes, "Spectral: quadrature nodes per component")->capture_default_str();
  };

  auto* simulate = app.add_subcommand("simulate", "Sample a Zipf stream");
  theta(simulate);
  n(simulate);
  seed(simulate);
  simulate->add_option("--support", cfg.support, "Urn count N (default: tail-safe for n)");
  io(simulate, false);

  auto* estimate = app.add_subcommand("estimate", "Estimate theta from a stream");
  measure(estimate);
  seed(estimate);
  io(estimate, true);
  estimate->add_option("--format", cfg.format, "kv | json")->capture_default_str();

  auto* test = app.add_subcommand("test", "Homogeneity test (known theta or estimated by a measure)");
  theta(test);
  measure(test);
  reps(test);
  seed(test);
  io(test, true);
  test->add_option("--format", cfg.format, "kv | json")->capture_default_str();
  test->add_option("--null", cfg.null_path, "Null-law artifact: reused if present, written otherwise");

  auto* tabulate = app.add_subcommand("tabulate", "Tabulate a null law (limit sample or spectral model)");
  theta(tabulate);
  measure(tabulate);
  reps(tabulate);
  seed(tabulate);
  io(tabulate, false);

  auto* covcheck = app.add_subcommand("covcheck", "Empirical covariance diagnostics");
  theta(covcheck);
  n(covcheck);
  reps(covcheck);
  seed(covcheck);
  covcheck->add_option("--support", cfg.support, "Urn count N (default: tail-safe for n)");
  covcheck->add_option("--grid", cfg.grid, "Grid points in (0, 1]");
  covcheck->add_option("--scheme", cfg.scheme, "fixed | poisson | both")->capture_default_str();
  io(covcheck, false);

  // Backend flags differ in defaults between test and tabulate.
  null_law(test, "auto");
  std::string tab_backend = "montecarlo";
  tabulate->add_option("--grid-size", cfg.grid_size, "Monte Carlo limit grid size")->capture_default_str();
  tabulate->add_option("--backend", tab_backend, "montecarlo | spectral")->capture_default_str();
  tabulate->add_option("--kmax", cfg.kmax, "Spectral: retained eigenvalues")->capture_default_str();
  tabulate->add_option("--nodes", cfg.nodes, "Spectral: quadrature nodes per component")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      cfg.command = "simulate";
      return cmd_simulate(cfg, out);
    }
    if (estimate->parsed()) {
      cfg.command = "estimate";
      return cmd_estimate(cfg, out);
    }
    if (test->parsed()) {
      cfg.command = "test";
      return cmd_test(cfg, out);
    }
    if (tabulate->parsed()) {
      cfg.command = "tabulate";
      cfg.backend = tab_backend;
      return cmd_tabulate(cfg, out);
    }
    cfg.command = "covcheck";
    if (cfg.grid.empty()) cfg.grid = {0.25, 0.5, 0.75, 1.0};
    return cmd_covcheck(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("urns");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace urns::cli
