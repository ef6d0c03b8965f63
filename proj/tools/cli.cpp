#include "cli.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "rtge/rtge.hpp"

namespace rtge::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

class FieldError : public InvalidArgument {
 public:
  FieldError(std::string field, const std::string& message)
      : InvalidArgument(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

fs::path default_output(const std::string& stem) {
  const char* dir = std::getenv(kOutputDirEnv);
  return (dir && *dir ? fs::path(dir) : fs::path(".")) / stem;
}

// Writes through a temporary file and renames, so a failed run leaves no
// partial output behind.
class OutputFile {
 public:
  explicit OutputFile(fs::path path) : path_(std::move(path)), tmp_(path_) {
    tmp_ += ".tmp";
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    stream_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!stream_) throw FieldError("output", "cannot open " + path_.string() + " for writing");
  }

  ~OutputFile() {
    if (!committed_) {
      stream_.close();
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return stream_; }

  void commit() {
    stream_.close();
    if (!stream_) throw NumericalError("failed writing " + path_.string());
    fs::rename(tmp_, path_);
    committed_ = true;
  }

 private:
  fs::path path_;
  fs::path tmp_;
  std::ofstream stream_;
  bool committed_ = false;
};

void write_header(std::ostream& os, const std::string& command, const json& config) {
  os << "# rtge " << command << "\n# config: " << config.dump() << "\n";
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// ---------------------------------------------------------------------------
// Shared options.

struct EnsembleArgs {
  int n = 0;
  int beta = 2;
  std::string constraint = "none";
  std::optional<double> radius;
  std::string path = "tridiagonal";
  std::size_t count = 1000;
  std::optional<std::uint64_t> seed;
};

void add_ensemble_options(CLI::App* app, EnsembleArgs& a, std::size_t default_count) {
  a.count = default_count;
  app->add_option("--n", a.n, "matrix dimension N")->required();
  app->add_option("--beta", a.beta, "Dyson index (1, 2 or 4)")->capture_default_str();
  app->add_option("--constraint", a.constraint, "none, fixed or bounded")->capture_default_str();
  app->add_option("--radius", a.radius, "constraint radius (default sqrt(N)/2)");
  app->add_option("--path", a.path, "dense or tridiagonal")->capture_default_str();
  app->add_option("--count", a.count, "number of samples")->capture_default_str();
  app->add_option("--seed", a.seed, "master seed (random when omitted)");
}

Beta parse_beta(int b) {
  if (b != 1 && b != 2 && b != 4) throw FieldError("beta", "must be 1, 2 or 4 (got " + std::to_string(b) + ")");
  return beta_from_int(b);
}

Constraint parse_constraint(const std::string& c) {
  if (c == "none") return Constraint::Unconstrained;
  if (c == "fixed") return Constraint::FixedTrace;
  if (c == "bounded") return Constraint::BoundedTrace;
  throw FieldError("constraint", "must be none, fixed or bounded (got '" + c + "')");
}

SamplerPath parse_path(const std::string& p) {
  if (p == "dense") return SamplerPath::Dense;
  if (p == "tridiagonal") return SamplerPath::Tridiagonal;
  throw FieldError("path", "must be dense or tridiagonal (got '" + p + "')");
}

EnsembleSpec to_spec(const EnsembleArgs& a) {
  if (a.n < 1) throw FieldError("n", "must be >= 1");
  if (a.count < 1) throw FieldError("count", "must be >= 1");
  EnsembleSpec s{a.n, parse_beta(a.beta), parse_constraint(a.constraint), a.radius};
  if (a.radius && !(*a.radius > 0.0 && std::isfinite(*a.radius))) throw FieldError("radius", "must be positive and finite");
  return s;
}

json ensemble_json(const EnsembleArgs& a, const EnsembleSpec& spec, std::uint64_t seed) {
  return json{{"n", a.n},         {"beta", a.beta},
              {"constraint", a.constraint}, {"radius", spec.effective_radius()},
              {"path", a.path},   {"count", a.count},
              {"seed", seed}};
}

unsigned check_workers(unsigned w) {
  if (w < 1) throw FieldError("workers", "must be >= 1");
  return w;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// ---------------------------------------------------------------------------
// sample

struct SampleCmd {
  EnsembleArgs e;
  std::string output;
  unsigned workers = 1;

  void add(CLI::App* app) {
    add_ensemble_options(app, e, 100);
    app->add_option("--output", output, "output CSV path");
    app->add_option("--workers", workers, "worker threads")->capture_default_str();
  }

  int exec(Context& ctx) const {
    const EnsembleSpec spec = to_spec(e);
    BatchOptions bo;
    bo.sampler.path = parse_path(e.path);
    bo.workers = check_workers(workers);
    const std::uint64_t seed = resolve_seed(e.seed);
    json config = ensemble_json(e, spec, seed);
    config["command"] = "sample";
    const fs::path path = output.empty() ? default_output("sample-" + std::to_string(seed) + ".csv") : fs::path(output);
    OutputFile file(path);
    auto& os = file.stream();
    write_header(os, "sample", config);
    os << "seed";
    for (int i = 1; i <= spec.n; ++i) os << ",x_" << i;
    os << "\n";
    for_each_sample(spec, e.count, seed, bo, [&](const SpectrumSample& s) {
      os << s.seed;
      for (double x : s.eigenvalues) os << ',' << num(x);
      os << '\n';
    });
    file.commit();
    ctx.out << "sample: " << e.count << " draws, N=" << spec.n << " beta=" << e.beta << " " << e.constraint
            << " seed=" << seed << " -> " << path.string() << "\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// density

struct DensityCmd {
  EnsembleArgs e;
  int bins = 50;
  double lo = -1.2;
  double hi = 1.2;
  std::string output;
  unsigned workers = 1;

  void add(CLI::App* app) {
    add_ensemble_options(app, e, 2000);
    app->add_option("--bins", bins, "number of bins")->capture_default_str();
    app->add_option("--lo", lo, "left end of the histogram range")->capture_default_str();
    app->add_option("--hi", hi, "right end of the histogram range")->capture_default_str();
    app->add_option("--output", output, "output CSV path");
    app->add_option("--workers", workers, "worker threads")->capture_default_str();
  }

  int exec(Context& ctx) const {
    const EnsembleSpec spec = to_spec(e);
    if (bins < 1) throw FieldError("bins", "must be >= 1");
    if (!(hi > lo)) throw FieldError("hi", "must exceed lo");
    BatchOptions bo;
    bo.sampler.path = parse_path(e.path);
    bo.workers = check_workers(workers);
    const std::uint64_t seed = resolve_seed(e.seed);
    json config = ensemble_json(e, spec, seed);
    config["command"] = "density";
    config["bins"] = bins;
    config["lo"] = lo;
    config["hi"] = hi;
    DensityAccumulator acc(bins, {lo, hi});
    for_each_sample(spec, e.count, seed, bo, [&](const SpectrumSample& s) { acc.add(s); });
    const DensityHistogram h = acc.result();
    const fs::path path = output.empty() ? default_output("density-" + std::to_string(seed) + ".csv") : fs::path(output);
    OutputFile file(path);
    auto& os = file.stream();
    write_header(os, "density", config);
    os << "bin_center,value\n";
    for (int i = 0; i < h.bins(); ++i) os << num(h.center(i)) << ',' << num(h.values[i]) << '\n';
    file.commit();
    double sup = 0.0;
    for (int i = 0; i < h.bins(); ++i) {
      if (std::abs(h.center(i)) <= 0.8) sup = std::max(sup, std::abs(h.values[i] - semicircle_density(h.center(i))));
    }
    ctx.out << "density: " << bins << " bins from " << e.count << " draws, mass in range " << h.fraction_in_range
            << ", sup |value - semicircle| on |x|<=0.8: " << sup << " -> " << path.string() << "\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// correlate

struct CorrelateCmd {
  EnsembleArgs e;
  std::string regime = "zero";
  double u = 0.0;
  bool left = false;
  std::string f = "gauss";
  double width = 1.5;
  int arity = 1;
  bool predict = false;
  std::string output;
  unsigned workers = 1;

  void add(CLI::App* app) {
    add_ensemble_options(app, e, 10000);
    app->add_option("--regime", regime, "zero, bulk or edge")->capture_default_str();
    app->add_option("--u", u, "bulk point, |u| < 1")->capture_default_str();
    app->add_flag("--left-edge", left, "use the left edge -1");
    app->add_option("--f", f, "test function: gauss, spline or one")->capture_default_str();
    app->add_option("--width", width, "support radius of the test function")->capture_default_str();
    app->add_option("--arity", arity, "number of points n")->capture_default_str();
    app->add_flag("--predict", predict, "also evaluate the kernel prediction");
    app->add_option("--output", output, "output CSV path");
    app->add_option("--workers", workers, "worker threads")->capture_default_str();
  }

  ScalingWindow window(int n) const {
    if (regime == "zero") return ScalingWindow::zero(n);
    if (regime == "bulk") {
      if (!(std::abs(u) < 1.0)) throw FieldError("u", "bulk point must satisfy |u| < 1");
      return ScalingWindow::bulk(n, u);
    }
    if (regime == "edge") return ScalingWindow::edge(n, left);
    throw FieldError("regime", "must be zero, bulk or edge (got '" + regime + "')");
  }

  int exec(Context& ctx) const {
    const EnsembleSpec spec = to_spec(e);
    const ScalingWindow w = window(spec.n);
    if (arity < 1 || arity > spec.n) throw FieldError("arity", "must lie in [1, N]");
    if (!(width > 0.0)) throw FieldError("width", "must be positive");
    TestFunction tf;
    try {
      tf = make_test_function(f, width, arity);
    } catch (const InvalidArgument& ex) {
      throw FieldError("f", ex.what());
    }
    BatchOptions bo;
    bo.sampler.path = parse_path(e.path);
    bo.workers = check_workers(workers);
    const std::uint64_t seed = resolve_seed(e.seed);
    json config = ensemble_json(e, spec, seed);
    config["command"] = "correlate";
    config["regime"] = regime;
    config["u"] = u;
    config["left_edge"] = left;
    config["f"] = f;
    config["width"] = width;
    config["arity"] = arity;
    const CorrelationEstimate est = estimate_correlation_integral(spec, e.count, seed, tf, w, bo);
    std::optional<double> prediction;
    if (predict) prediction = predicted_integral(tf, {w.kernel_family(), spec.beta});
    const fs::path path = output.empty() ? default_output("correlate-" + std::to_string(seed) + ".csv") : fs::path(output);
    OutputFile file(path);
    auto& os = file.stream();
    write_header(os, "correlate", config);
    if (prediction) os << "# prediction: " << num(*prediction) << "\n";
    os << "estimate,stderr,n_samples,regime,beta,N,f_id\n";
    os << num(est.value) << ',' << num(est.std_error) << ',' << est.samples << ',' << regime << ',' << e.beta << ','
       << spec.n << ',' << tf.id << '\n';
    file.commit();
    ctx.out << "correlate: " << w.name() << " n=" << arity << " estimate " << est.value << " +- " << est.std_error;
    if (prediction) ctx.out << " (prediction " << *prediction << ")";
    ctx.out << " -> " << path.string() << "\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// kernel

struct KernelCmd {
  std::string family = "sine";
  int beta = 2;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> grid;  // lo, hi, count
  std::string output;

  void add(CLI::App* app) {
    app->add_option("--family", family, "sine or airy")->capture_default_str();
    app->add_option("--beta", beta, "1, 2 or 4")->capture_default_str();
    app->add_option("--x", xs, "x points")->delimiter(',');
    app->add_option("--y", ys, "y points (default: y = x)")->delimiter(',');
    app->add_option("--x-grid", grid, "lo,hi,count: uniform x grid")->delimiter(',')->expected(3);
    app->add_option("--output", output, "output CSV path");
  }

  int exec(Context& ctx) const {
    KernelKind kind{KernelFamily::Sine, parse_beta(beta)};
    if (family == "airy") {
      kind.family = KernelFamily::Airy;
    } else if (family != "sine") {
      throw FieldError("family", "must be sine or airy (got '" + family + "')");
    }
    std::vector<double> x = xs;
    if (!grid.empty()) {
      const int count = static_cast<int>(grid[2]);
      if (count < 2 || !(grid[1] > grid[0])) throw FieldError("x-grid", "expects lo < hi and count >= 2");
      for (int i = 0; i < count; ++i) x.push_back(grid[0] + (grid[1] - grid[0]) * i / (count - 1.0));
    }
    if (x.empty()) throw FieldError("x", "give --x or --x-grid");
    json config{{"command", "kernel"}, {"family", family}, {"beta", beta}, {"x", x}, {"y", ys}};
    const fs::path path = output.empty() ? default_output("kernel-" + family + "-" + std::to_string(beta) + ".csv")
                                         : fs::path(output);
    std::ostringstream os;
    write_header(os, "kernel", config);
    os << (kind.beta == Beta::Unitary ? "x,y,k,r1,r2\n" : "x,y,k11,k12,k21,k22,r1,r2\n");
    auto row = [&](double a, double b) {
      os << num(a) << ',' << num(b);
      if (kind.beta == Beta::Unitary) {
        os << ',' << num(scalar_kernel(kind.family, a, b));
      } else {
        const Block2 k = matrix_kernel(kind, a, b);
        os << ',' << num(k(0, 0)) << ',' << num(k(0, 1)) << ',' << num(k(1, 0)) << ',' << num(k(1, 1));
      }
      const double p1[1] = {a};
      const double p2[2] = {a, b};
      os << ',' << num(predicted_correlation_integrand(kind, p1)) << ','
         << num(predicted_correlation_integrand(kind, p2)) << '\n';
    };
    std::size_t rows = 0;
    for (double a : x) {
      if (ys.empty()) {
        row(a, a);
        ++rows;
      } else {
        for (double b : ys) {
          row(a, b);
          ++rows;
        }
      }
    }
    OutputFile file(path);
    file.stream() << os.str();
    file.commit();
    ctx.out << "kernel: " << rows << " rows of " << family << " beta=" << beta << " -> " << path.string() << "\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// verify

json report_json(const oracle::VerificationReport& r, const json& config) {
  json params = json::object();
  for (const auto& [k, v] : r.parameters) params[k] = v;
  json j{{"check", r.check},     {"parameters", params}, {"observed", r.observed},
         {"expected", r.expected}, {"tolerance", r.tolerance}, {"pass", r.pass}};
  if (!r.series.empty()) j["series"] = r.series;
  if (!r.note.empty()) j["note"] = r.note;
  j["config"] = config;
  return j;
}

struct VerifyCmd {
  std::string check;
  std::optional<int> n;
  int beta = 2;
  double theta = 0.8;
  double kappa = 1.5;
  std::vector<int> n_list;
  std::string tail = "lower";
  std::optional<std::size_t> count;
  std::optional<std::uint64_t> seed;
  int bins = 240;
  std::string output;
  unsigned workers = 1;

  void add(CLI::App* app) {
    app->add_option("--check", check,
                    "psi-normalization, psi-central-mass, tail-rate, radial-concentration, bridge, "
                    "scaling-relation or trace-moment")
        ->required();
    app->add_option("--n", n, "dimension N");
    app->add_option("--beta", beta, "1, 2 or 4")->capture_default_str();
    app->add_option("--theta", theta, "alpha_N = N^-theta, theta in (2/3, 1)")->capture_default_str();
    app->add_option("--kappa", kappa, "b_N = N^-kappa, kappa in (0, 2)")->capture_default_str();
    app->add_option("--n-list", n_list, "increasing list of N")->delimiter(',');
    app->add_option("--tail", tail, "lower or upper")->capture_default_str();
    app->add_option("--count", count, "Monte Carlo sample count");
    app->add_option("--seed", seed, "master seed (random when omitted)");
    app->add_option("--bins", bins, "histogram bins (bridge)")->capture_default_str();
    app->add_option("--output", output, "output JSON path");
    app->add_option("--workers", workers, "worker threads")->capture_default_str();
  }

  int exec(Context& ctx) const {
    const Beta b = parse_beta(beta);
    json config{{"command", "verify"}, {"check", check}, {"beta", beta}};
    auto n_or = [&](int fallback) {
      const int v = n.value_or(fallback);
      if (v < 1) throw FieldError("n", "must be >= 1");
      config["n"] = v;
      return v;
    };
    auto list_or = [&](std::vector<int> fallback) {
      std::vector<int> l = n_list.empty() ? std::move(fallback) : n_list;
      for (std::size_t i = 0; i < l.size(); ++i) {
        if (l[i] < 1 || (i > 0 && l[i] <= l[i - 1])) throw FieldError("n-list", "must be increasing positive integers");
      }
      config["n_list"] = l;
      return l;
    };
    auto mc = [&](std::size_t fallback) {
      const std::size_t c = count.value_or(fallback);
      if (c < 2) throw FieldError("count", "must be >= 2");
      const std::uint64_t s = resolve_seed(seed);
      config["count"] = c;
      config["seed"] = s;
      return std::pair{c, s};
    };
    check_workers(workers);
    oracle::VerificationReport r;
    if (check == "psi-normalization") {
      r = oracle::verify_psi_normalization(n_or(6), b);
    } else if (check == "psi-central-mass") {
      if (!(theta > 2.0 / 3.0 && theta < 1.0)) throw FieldError("theta", "must lie in (2/3, 1)");
      config["theta"] = theta;
      r = oracle::verify_psi_central_mass(n_or(50), b, theta);
    } else if (check == "tail-rate") {
      if (!(theta > 2.0 / 3.0 && theta < 1.0)) throw FieldError("theta", "must lie in (2/3, 1)");
      if (tail != "lower" && tail != "upper") throw FieldError("tail", "must be lower or upper");
      config["theta"] = theta;
      config["tail"] = tail;
      r = oracle::verify_tail_rate(list_or({50, 100, 200, 400}), b, theta,
                                   tail == "lower" ? oracle::Tail::Lower : oracle::Tail::Upper);
    } else if (check == "radial-concentration") {
      if (!(kappa > 0.0 && kappa < 2.0)) throw FieldError("kappa", "must lie in (0, 2)");
      config["kappa"] = kappa;
      r = oracle::verify_radial_concentration(list_or({100, 1000, 10000}), b, kappa);
    } else if (check == "bridge") {
      if (b != Beta::Unitary) throw FieldError("beta", "bridge verification is available for beta = 2 only");
      oracle::BridgeOptions o;
      o.n = n_or(6);
      if (o.n > 10) throw FieldError("n", "bridge verification requires N <= 10");
      std::tie(o.samples, o.seed) = mc(1'000'000);
      if (bins < 2) throw FieldError("bins", "must be >= 2");
      o.bins = bins;
      config["bins"] = bins;
      o.workers = workers;
      r = oracle::verify_bridge_equation(o);
    } else if (check == "scaling-relation") {
      oracle::ScalingOptions o;
      o.n = n_or(20);
      o.beta = b;
      std::tie(o.samples, o.seed) = mc(100'000);
      o.workers = workers;
      r = oracle::verify_scaling_relation(o);
    } else if (check == "trace-moment") {
      const int nn = n_or(8);
      const auto [c, s] = mc(100'000);
      BatchOptions bo;
      bo.workers = workers;
      double mean = 0.0, m2 = 0.0;
      std::size_t k = 0;
      for_each_sample({nn, b}, c, s, bo, [&](const SpectrumSample& x) {
        ++k;
        const double d = x.trace_sq - mean;
        mean += d / static_cast<double>(k);
        m2 += d * (x.trace_sq - mean);
      });
      const double se = std::sqrt(m2 / (k - 1.0) / k);
      r.check = "trace-moment";
      r.parameters = {{"N", nn}, {"beta", to_double(b)}, {"samples", static_cast<double>(c)}};
      r.observed = mean;
      r.expected = oracle::expected_trace_moment(nn, b);
      r.tolerance = 4.0 * se;
      r.pass = std::abs(mean - r.expected) <= r.tolerance;
      r.note = "tolerance is 4 standard errors";
    } else {
      throw FieldError("check", "unknown check '" + check + "'");
    }
    const json j = report_json(r, config);
    const fs::path path = output.empty() ? default_output("verify-" + check + ".json") : fs::path(output);
    OutputFile file(path);
    file.stream() << j.dump(2) << "\n";
    file.commit();
    ctx.out << "verify " << check << ": " << (r.pass ? "pass" : "FAIL") << " (observed " << r.observed << ", expected "
            << r.expected << ", tolerance " << r.tolerance << ") -> " << path.string() << "\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// sweep

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FieldError("config", "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) return num(v.get<double>());
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + scalar_text(e);
    return s;
  }
  throw FieldError("config", "unsupported value " + v.dump());
}

void append_option(std::vector<std::string>& args, const std::string& key, const json& v) {
  if (v.is_boolean()) {
    if (v.get<bool>()) args.push_back("--" + key);
    return;
  }
  args.push_back("--" + key);
  args.push_back(scalar_text(v));
}

struct SweepPoint {
  json parameters;
  std::vector<std::string> args;
  std::string file;
};

struct SweepCmd {
  std::string config_path;
  std::string output;
  unsigned workers = 1;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "sweep configuration (JSON)")->required();
    app->add_option("--output", output, "output directory");
    app->add_option("--workers", workers, "grid points run concurrently")->capture_default_str();
  }

  int exec(Context& ctx) const {
    check_workers(workers);
    json cfg;
    try {
      cfg = json::parse(read_file(config_path));
    } catch (const json::exception& ex) {
      throw FieldError("config", std::string("invalid JSON: ") + ex.what());
    }
    if (!cfg.is_object()) throw FieldError("config", "must be a JSON object");
    const std::string command = cfg.value("command", std::string("correlate"));
    if (command != "sample" && command != "density" && command != "correlate" && command != "verify") {
      throw FieldError("command", "sweeps run sample, density, correlate or verify");
    }
    const json base = cfg.value("base", json::object());
    const json grid = cfg.value("grid", json::object());
    if (!base.is_object()) throw FieldError("base", "must be an object");
    if (!grid.is_object() || grid.empty()) throw FieldError("grid", "must be a non-empty object of value lists");
    for (const auto& [k, v] : grid.items()) {
      if (!v.is_array() || v.empty()) throw FieldError("grid", "'" + k + "' must be a non-empty list");
      if (base.contains(k)) throw FieldError("grid", "'" + k + "' is also set in base");
    }
    if (base.contains("output") || base.contains("workers")) {
      throw FieldError("base", "output and workers are set by the sweep itself");
    }
    const fs::path dir = output.empty() ? default_output("sweep") : fs::path(output);
    fs::create_directories(dir);

    std::vector<SweepPoint> points;
    std::vector<std::size_t> digits(grid.size(), 0);
    const std::vector<std::pair<std::string, json>> axes = [&] {
      std::vector<std::pair<std::string, json>> a;
      for (const auto& [k, v] : grid.items()) a.emplace_back(k, v);
      return a;
    }();
    const std::string ext = command == "verify" ? ".json" : ".csv";
    for (bool done = false; !done;) {
      SweepPoint p;
      p.parameters = json::object();
      p.args = {command};
      std::string name = command;
      for (std::size_t i = 0; i < axes.size(); ++i) {
        const json& v = axes[i].second[digits[i]];
        p.parameters[axes[i].first] = v;
        append_option(p.args, axes[i].first, v);
        name += "_" + axes[i].first + "-" + scalar_text(v);
      }
      for (const auto& [k, v] : base.items()) append_option(p.args, k, v);
      p.file = name + ext;
      points.push_back(std::move(p));
      for (std::size_t i = axes.size();;) {
        if (i == 0) {
          done = true;
          break;
        }
        --i;
        if (++digits[i] < axes[i].second.size()) break;
        digits[i] = 0;
      }
    }

    const fs::path index_path = dir / "index.json";
    json previous = json::object();
    if (fs::exists(index_path)) {
      try {
        previous = json::parse(read_file(index_path));
      } catch (const json::exception&) {
        previous = json::object();
      }
    }
    auto completed = [&](const SweepPoint& p) {
      if (!previous.contains("points")) return false;
      for (const auto& e : previous["points"]) {
        if (e.value("file", "") != p.file || e.value("status", "") != "ok") continue;
        if (e.value("args", json::array()) != json(p.args)) return false;
        const fs::path f = dir / p.file;
        return fs::exists(f) && e.value("checksum", "") == hex64(fnv1a64(read_file(f)));
      }
      return false;
    };

    std::vector<json> entries(points.size());
    std::atomic<std::size_t> skipped{0};
    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t i = begin; i < points.size(); i += stride) {
        const SweepPoint& p = points[i];
        json e{{"index", i}, {"parameters", p.parameters}, {"file", p.file}, {"args", p.args}};
        if (completed(p)) {
          e["status"] = "ok";
          e["checksum"] = hex64(fnv1a64(read_file(dir / p.file)));
          e["resumed"] = true;
          ++skipped;
          entries[i] = std::move(e);
          continue;
        }
        std::vector<std::string> args = p.args;
        args.push_back("--output");
        args.push_back((dir / p.file).string());
        args.push_back("--workers");
        args.push_back("1");
        std::ostringstream o, er;
        const int code = run(args, o, er);
        e["exit_code"] = code;
        if (code == kExitOk) {
          e["status"] = "ok";
          e["checksum"] = hex64(fnv1a64(read_file(dir / p.file)));
        } else {
          e["status"] = "failed";
          e["error"] = er.str();
        }
        entries[i] = std::move(e);
      }
    };
    const unsigned w = std::min<unsigned>(workers, static_cast<unsigned>(points.size()));
    if (w <= 1) {
      work(0, 1);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned k = 0; k < w; ++k) pool.emplace_back(work, k, w);
    }

    int worst = kExitOk;
    std::size_t failed = 0;
    for (const auto& e : entries) {
      if (e["status"] != "ok") {
        ++failed;
        worst = std::max(worst, e.value("exit_code", kExitNumerical));
      }
    }
    json index{{"command", "sweep"}, {"config", cfg}, {"points", entries}, {"failed", failed}};
    {
      OutputFile file(index_path);
      file.stream() << index.dump(2) << "\n";
      file.commit();
    }
    ctx.out << "sweep: " << points.size() << " points, " << skipped.load() << " resumed, " << failed
            << " failed -> " << index_path.string() << "\n";
    return failed == 0 ? kExitOk : std::max(worst, kExitValidation);
  }
};

void report_error(std::ostream& err, const char* kind, const std::string& message, const std::string& field = {}) {
  json j{{"error", kind}, {"message", message}};
  if (!field.empty()) j["field"] = field;
  err << j.dump() << "\n";
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and verification toolkit for Gaussian beta-ensembles with trace constraints", "rtge"};
  app.require_subcommand(1);
  SampleCmd sample;
  DensityCmd density;
  CorrelateCmd correlate;
  KernelCmd kernel;
  VerifyCmd verify;
  SweepCmd sweep;
  sample.add(app.add_subcommand("sample", "draw eigenvalue samples (CSV: seed, x_1..x_N)"));
  density.add(app.add_subcommand("density", "binned level density (CSV: bin_center, value)"));
  correlate.add(app.add_subcommand("correlate", "Monte Carlo correlation integral of a test function"));
  kernel.add(app.add_subcommand("kernel", "tabulate sine / Airy kernels"));
  verify.add(app.add_subcommand("verify", "run a named identity verifier (JSON report)"));
  sweep.add(app.add_subcommand("sweep", "run a grid of commands from a JSON config"));

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("rtge");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "validation", e.what());
    return kExitValidation;
  }

  Context ctx{out, err};
  try {
    if (app.got_subcommand("sample")) return sample.exec(ctx);
    if (app.got_subcommand("density")) return density.exec(ctx);
    if (app.got_subcommand("correlate")) return correlate.exec(ctx);
    if (app.got_subcommand("kernel")) return kernel.exec(ctx);
    if (app.got_subcommand("verify")) return verify.exec(ctx);
    if (app.got_subcommand("sweep")) return sweep.exec(ctx);
  } catch (const FieldError& e) {
    report_error(err, "validation", e.what(), e.field());
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    report_error(err, "validation", e.what());
    return kExitValidation;
  } catch (const std::domain_error& e) {
    report_error(err, "validation", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    report_error(err, "numerical", e.what());
    return kExitNumerical;
  }
  return kExitValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace rtge::cli
