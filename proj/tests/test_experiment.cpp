#include "doctest.h"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdmc/analytic.hpp"
#include "kdmc/experiment.hpp"

using namespace kdmc;
namespace fs = std::filesystem;

namespace {

const double kInf = std::numeric_limits<double>::infinity();
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Unique scratch path for this test binary.
fs::path scratch_path(const std::string& stem) {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("kdmc_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir / stem;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p);
  f << content;
}

bool same_double(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return a == b;
}

ExperimentConfig tiny_put_config() {
  ExperimentConfig c;
  c.model = "bs";
  c.sigma = 0.2;
  c.payoff = "put";
  c.strike = 1.0;
  c.spot = 1.0;
  c.lower_barrier = 0.8;
  c.upper_barrier = kInf;
  c.maturity = 1.0;
  c.h_kind = "exp";
  c.schemes = {"bridge"};
  c.n_steps = {2, 4, 8, 16};
  c.paths = 2000;
  c.seed = 1357;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("apply_config_file sets every key") {
  const fs::path p = scratch_path("full.cfg");
  write_file(p,
             "# full configuration exercise\n"
             "model = hlv\n"
             "sigma = 0.35   # trailing comment\n"
             "nu = 0.25\n"
             "beta = 0.75\n"
             "payoff = call\n"
             "strike = 1.05\n"
             "spot = 1.1\n"
             "lower_barrier = 0.9\n"
             "\n"
             "upper_barrier = 1.4\n"
             "maturity = 2.5\n"
             "h = parabolic\n"
             "scheme = bem, euler,bridge\n"
             "n_steps = 4, 8,16 , 32\n"
             "paths = 12345\n"
             "seed = 987654321\n"
             "series_terms = 7\n"
             "out = /tmp/report.csv\n"
             "plot_data = /tmp/plot.csv\n"
             "threads = 3\n"
             "cache = /tmp/cache.json\n"
             "bench_steps = 128\n"
             "bench_paths = 4096\n"
             "bench_seed = 31415\n");
  ExperimentConfig c;
  apply_config_file(c, p.string());
  CHECK(c.model == "hlv");
  CHECK(c.sigma == 0.35);
  CHECK(c.nu == 0.25);
  CHECK(c.beta == 0.75);
  CHECK(c.payoff == "call");
  CHECK(c.strike == 1.05);
  CHECK(c.spot == 1.1);
  CHECK(c.lower_barrier == 0.9);
  CHECK(c.upper_barrier == 1.4);
  CHECK(c.maturity == 2.5);
  CHECK(c.h_kind == "parabolic");
  CHECK(c.schemes == std::vector<std::string>{"bem", "euler", "bridge"});
  CHECK(c.n_steps == std::vector<std::int64_t>{4, 8, 16, 32});
  CHECK(c.paths == 12345);
  CHECK(c.seed == 987654321ull);
  CHECK(c.series_terms == 7);
  CHECK(c.out == "/tmp/report.csv");
  CHECK(c.plot_data == "/tmp/plot.csv");
  CHECK(c.threads == 3);
  CHECK(c.cache_file == "/tmp/cache.json");
  CHECK(c.bench_steps == 128);
  CHECK(c.bench_paths == 4096);
  CHECK(c.bench_seed == 31415ull);
}

TEST_CASE("apply_config_file rejects bad input with precise messages") {
  ExperimentConfig c;

  const fs::path unknown = scratch_path("unknown.cfg");
  write_file(unknown, "model = bs\nwibble = 3\n");
  try {
    apply_config_file(c, unknown.string());
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("wibble") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }

  const fs::path bad_num = scratch_path("badnum.cfg");
  write_file(bad_num, "# comment\n\nsigma = 0.2x\n");
  try {
    apply_config_file(c, bad_num.string());
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("sigma") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
  }

  const fs::path no_eq = scratch_path("noeq.cfg");
  write_file(no_eq, "model bs\n");
  CHECK_THROWS_AS(apply_config_file(c, no_eq.string()), std::invalid_argument);

  CHECK_THROWS_AS(apply_config_file(c, scratch_path("absent.cfg").string()),
                  std::runtime_error);
}

TEST_CASE("validate names the offending field") {
  auto expect_fail = [](ExperimentConfig c, const std::string& needle) {
    try {
      validate(c);
      FAIL("expected invalid_argument mentioning '" << needle << "'");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  ExperimentConfig ok = tiny_put_config();
  CHECK_NOTHROW(validate(ok));

  {
    ExperimentConfig c = ok;
    c.model = "heston";
    expect_fail(c, "model");
  }
  {
    ExperimentConfig c = ok;
    c.sigma = 0.0;
    expect_fail(c, "sigma");
  }
  {
    ExperimentConfig c = ok;
    c.model = "hlv";
    c.beta = 1.5;
    expect_fail(c, "beta");
  }
  {
    ExperimentConfig c = ok;
    c.model = "hlv";
    c.nu = -0.1;
    expect_fail(c, "nu");
  }
  {
    ExperimentConfig c = ok;
    c.payoff = "digital";
    expect_fail(c, "payoff");
  }
  {
    ExperimentConfig c = ok;
    c.strike = 0.0;
    expect_fail(c, "strike");
  }
  {
    ExperimentConfig c = ok;
    c.spot = 0.5;  // below the lower barrier
    expect_fail(c, "spot");
  }
  {
    ExperimentConfig c = ok;
    c.maturity = -1.0;
    expect_fail(c, "maturity");
  }
  {
    ExperimentConfig c = ok;
    c.upper_barrier = 0.7;  // below the lower barrier
    expect_fail(c, "upper_barrier");
  }
  {
    ExperimentConfig c = ok;
    c.schemes = {"bem", "milstein"};
    expect_fail(c, "scheme");
  }
  {
    ExperimentConfig c = ok;
    c.schemes = {};
    expect_fail(c, "scheme");
  }
  {
    // h/barrier shape mismatches only matter when BEM is requested.
    ExperimentConfig c = ok;
    c.schemes = {"bem"};
    c.h_kind = "quartic";  // needs a bounded corridor
    expect_fail(c, "h");
    c.schemes = {"euler"};
    CHECK_NOTHROW(validate(c));
  }
  {
    ExperimentConfig c = ok;
    c.schemes = {"bem"};
    c.upper_barrier = 1.25;
    c.h_kind = "exp";  // needs an unbounded domain
    expect_fail(c, "h");
    c.h_kind = "banana";
    expect_fail(c, "h");
  }
  {
    ExperimentConfig c = ok;
    c.n_steps = {};
    expect_fail(c, "n_steps");
  }
  {
    ExperimentConfig c = ok;
    c.n_steps = {4, 0};
    expect_fail(c, "n_steps");
  }
  {
    ExperimentConfig c = ok;
    c.paths = 0;
    expect_fail(c, "paths");
  }
  {
    ExperimentConfig c = ok;
    c.series_terms = 0;
    expect_fail(c, "series_terms");
  }
  {
    ExperimentConfig c = ok;
    c.threads = 0;
    expect_fail(c, "threads");
  }
}

TEST_CASE("CSV round-trips exactly") {
  ConvergenceReport rep;
  rep.rows = {
      {"bem", 2, 0.1, 1.0 / 3.0, 0.019777928666020003, 1e-300},
      {"bem", 4, -123456.789, 5e-324, kNaN, 0.007},
      {"euler", 1024, 3.141592653589793, 0.0, 2.2250738585072014e-308,
       1.7976931348623157e+308},
  };
  SlopeFit s1;
  s1.scheme = "bem";
  s1.slope = 0.9517;
  s1.slope_stderr = 0.031;
  s1.n_fit_rows = 7;
  SlopeFit s2;
  s2.scheme = "euler";
  s2.slope = kNaN;
  s2.slope_stderr = kNaN;
  s2.n_fit_rows = 1;
  rep.slopes = {s1, s2};

  std::ostringstream os;
  emit_csv(rep, os);
  const std::string text = os.str();

  // Constant column count on every line.
  std::istringstream count_is(text);
  std::string line;
  int lines = 0;
  while (std::getline(count_is, line)) {
    ++lines;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
  }
  CHECK(lines == 1 + 3 + 2);  // header + rows + slope rows

  std::istringstream is(text);
  const ConvergenceReport back = parse_csv(is);
  REQUIRE(back.rows.size() == rep.rows.size());
  REQUIRE(back.slopes.size() == rep.slopes.size());
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    CHECK(back.rows[i].scheme == rep.rows[i].scheme);
    CHECK(back.rows[i].N == rep.rows[i].N);
    CHECK(same_double(back.rows[i].estimate, rep.rows[i].estimate));
    CHECK(same_double(back.rows[i].stderr_, rep.rows[i].stderr_));
    CHECK(same_double(back.rows[i].benchmark, rep.rows[i].benchmark));
    CHECK(same_double(back.rows[i].abs_error, rep.rows[i].abs_error));
  }
  for (std::size_t i = 0; i < rep.slopes.size(); ++i) {
    CHECK(back.slopes[i].scheme == rep.slopes[i].scheme);
    CHECK(same_double(back.slopes[i].slope, rep.slopes[i].slope));
    CHECK(same_double(back.slopes[i].slope_stderr, rep.slopes[i].slope_stderr));
    CHECK(back.slopes[i].n_fit_rows == rep.slopes[i].n_fit_rows);
  }

  // Empty report: header only.
  std::ostringstream empty_os;
  emit_csv(ConvergenceReport{}, empty_os);
  CHECK(empty_os.str() == "scheme,N,estimate,stderr,benchmark,abs_error\n");

  // Bad header rejected.
  std::istringstream bad("foo,bar\n");
  CHECK_THROWS_AS(parse_csv(bad), std::runtime_error);
}

TEST_CASE("identical config and seed give a byte-identical report") {
  const ExperimentConfig c = tiny_put_config();
  std::ostringstream a, b;
  emit_csv(run_convergence(c), a);
  emit_csv(run_convergence(c), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().size() > 100);

  // A different seed changes the estimates.
  ExperimentConfig c2 = c;
  c2.seed = 8642;
  std::ostringstream d;
  emit_csv(run_convergence(c2), d);
  CHECK(a.str() != d.str());
}

TEST_CASE("fit_slope against an independent least-squares oracle") {
  // Exact power law abs_error = 0.04 N^{-0.9} with negligible noise floor.
  std::vector<ConvergenceRow> rows;
  std::vector<double> lx, ly;
  for (const std::int64_t n : {2, 4, 8, 16, 32, 64, 128, 256}) {
    ConvergenceRow r;
    r.scheme = "bem";
    r.N = n;
    r.estimate = 1.0;
    r.stderr_ = 1e-12;
    r.benchmark = 1.0;
    r.abs_error = 0.04 * std::pow(static_cast<double>(n), -0.9);
    rows.push_back(r);
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(r.abs_error));
  }
  const SlopeFit fit = fit_slope("bem", rows);
  CHECK(fit.n_fit_rows == 8);
  CHECK(fit.slope == doctest::Approx(0.9).epsilon(1e-10));

  // Independent normal-equations oracle.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double oracle = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(fit.slope == doctest::Approx(oracle).epsilon(1e-10));

  // Noise-dominated rows (abs_error <= 3 stderr) are excluded from the fit.
  rows[6].stderr_ = rows[6].abs_error;        // dropped
  rows[7].stderr_ = rows[7].abs_error / 2.0;  // dropped (3x rule)
  const SlopeFit trimmed = fit_slope("bem", rows);
  CHECK(trimmed.n_fit_rows == 6);
  CHECK(trimmed.slope == doctest::Approx(0.9).epsilon(1e-10));

  // Fewer than two usable rows: no slope.
  std::vector<ConvergenceRow> thin(rows.begin(), rows.begin() + 2);
  thin[0].stderr_ = thin[0].abs_error;
  const SlopeFit none = fit_slope("bem", thin);
  CHECK(std::isnan(none.slope));
  CHECK(none.n_fit_rows == 1);

  // Rows of other schemes are ignored.
  std::vector<ConvergenceRow> mixed = rows;
  ConvergenceRow alien;
  alien.scheme = "euler";
  alien.N = 2;
  alien.abs_error = 1.0;
  alien.stderr_ = 1e-12;
  mixed.push_back(alien);
  CHECK(fit_slope("bem", mixed).n_fit_rows == trimmed.n_fit_rows);
}

TEST_CASE("run_price with a vanishing barrier reproduces the vanilla put") {
  ExperimentConfig c = tiny_put_config();
  c.schemes = {"euler"};
  c.lower_barrier = 1e-6;
  c.n_steps = {1};
  c.paths = 200000;
  c.seed = 4242;

  const std::vector<PriceResult> rs = run_price(c);
  REQUIRE(rs.size() == 1);
  const PriceResult& r = rs[0];
  CHECK(r.scheme == "euler");
  CHECK(r.benchmark_source == "analytic");

  const double vanilla = vanilla_put_price(1.0, 1.0, 1.0, 0.2);
  CHECK(r.benchmark == doctest::Approx(vanilla).epsilon(1e-9));
  CHECK(std::fabs(r.mc.mean - vanilla) < 3.0 * r.mc.stderr_);
  CHECK(r.abs_error == std::fabs(r.mc.mean - r.benchmark));
}

TEST_CASE("run_price degrades to a warning outside a formula's validity") {
  // Strike at the barrier: the factor formula refuses, the MC still runs,
  // and the price of the empty payoff region is zero.
  ExperimentConfig c = tiny_put_config();
  c.schemes = {"bem", "euler"};
  c.h_kind = "exp";
  c.strike = 0.8;  // equals lower_barrier
  c.n_steps = {4};
  c.paths = 20000;

  const std::vector<PriceResult> rs = run_price(c);
  REQUIRE(rs.size() == 2);
  for (const PriceResult& r : rs) {
    CHECK(r.mc.mean >= 0.0);
    CHECK(std::isnan(r.benchmark));
    CHECK(std::isnan(r.abs_error));
    CHECK(r.benchmark_source.find("warning") == 0);
  }
}

TEST_CASE("benchmark_key and config_hash") {
  // FNV-1a reference vectors.
  CHECK(config_hash("") == "cbf29ce484222325");
  CHECK(config_hash("a") == "af63dc4c8601ec8c");

  ExperimentConfig c;
  c.model = "hlv";
  c.nu = 0.2;
  c.beta = 0.5;
  c.payoff = "call";
  c.strike = 0.9;
  c.spot = 1.0;
  c.lower_barrier = 0.85;
  c.upper_barrier = 1.25;
  c.maturity = 1.0;

  const std::string key = benchmark_key(c);
  CHECK(config_hash(key) == config_hash(key));  // deterministic
  CHECK(config_hash(key).size() == 16);

  // The key ignores experiment-side knobs...
  {
    ExperimentConfig c2 = c;
    c2.seed = 1;
    c2.paths = 17;
    c2.n_steps = {3};
    c2.h_kind = "quartic";
    c2.schemes = {"euler"};
    c2.threads = 9;
    CHECK(benchmark_key(c2) == key);
  }
  // ...but tracks every benchmark-defining parameter.
  for (const auto& mutate :
       std::vector<std::function<void(ExperimentConfig&)>>{
           [](ExperimentConfig& x) { x.strike = 1.0; },
           [](ExperimentConfig& x) { x.nu = 0.3; },
           [](ExperimentConfig& x) { x.beta = 0.9; },
           [](ExperimentConfig& x) { x.spot = 1.01; },
           [](ExperimentConfig& x) { x.lower_barrier = 0.8; },
           [](ExperimentConfig& x) { x.upper_barrier = 1.3; },
           [](ExperimentConfig& x) { x.maturity = 2.0; },
           [](ExperimentConfig& x) { x.payoff = "put"; },
           [](ExperimentConfig& x) { x.bench_steps = 8192; },
           [](ExperimentConfig& x) { x.bench_paths = 1000; },
           [](ExperimentConfig& x) { x.bench_seed = 1; },
       }) {
    ExperimentConfig c3 = c;
    mutate(c3);
    CHECK(benchmark_key(c3) != key);
  }
}

TEST_CASE("benchmark cache write, lookup, and merge") {
  ExperimentConfig c;
  c.model = "hlv";
  c.nu = 0.2;
  c.beta = 0.5;
  c.payoff = "call";
  c.spot = 1.0;
  c.lower_barrier = 0.85;
  c.upper_barrier = 1.25;
  c.maturity = 1.0;
  c.h_kind = "parabolic";
  c.schemes = {"bem"};
  c.bench_steps = 4;
  c.bench_paths = 2048;
  c.bench_seed = 7;
  c.cache_file = scratch_path("cache.json").string();

  const std::vector<BenchmarkEntry> entries =
      run_benchmark_cache(c, {0.9, 1.0});
  REQUIRE(entries.size() == 2);
  for (const BenchmarkEntry& e : entries) {
    CHECK(std::isfinite(e.price));
    CHECK(e.price >= 0.0);
    CHECK(e.stderr_ > 0.0);
  }

  // Lookup by the canonical hash finds what was written.
  ExperimentConfig q = c;
  q.strike = 0.9;
  const auto found = cache_lookup(c.cache_file, config_hash(benchmark_key(q)));
  REQUIRE(found.has_value());
  CHECK(found->price == entries[0].price);
  CHECK(found->stderr_ == entries[0].stderr_);
  CHECK(found->key == benchmark_key(q));

  // A second run with another strike merges instead of clobbering.
  (void)run_benchmark_cache(c, {1.05});
  CHECK(cache_lookup(c.cache_file, config_hash(benchmark_key(q))).has_value());
  ExperimentConfig q2 = c;
  q2.strike = 1.05;
  CHECK(
      cache_lookup(c.cache_file, config_hash(benchmark_key(q2))).has_value());

  // Unknown hash, missing file, and corrupt file all miss without throwing.
  CHECK_FALSE(cache_lookup(c.cache_file, "0123456789abcdef").has_value());
  CHECK_FALSE(cache_lookup(scratch_path("absent.json").string(), "deadbeef")
                  .has_value());
  const fs::path corrupt = scratch_path("corrupt.json");
  write_file(corrupt, "{ not json ]");
  CHECK_FALSE(cache_lookup(corrupt.string(), "deadbeef").has_value());
}

TEST_CASE("run_convergence rejects inadequate N lists") {
  ExperimentConfig c = tiny_put_config();
  c.n_steps = {2, 4};
  CHECK_THROWS_WITH_AS(run_convergence(c),
                       doctest::Contains("insufficient-N-list"),
                       std::invalid_argument);
  c.n_steps = {2, 3, 4, 5};
  CHECK_THROWS_WITH_AS(run_convergence(c),
                       doctest::Contains("insufficient-N-list"),
                       std::invalid_argument);
}

TEST_CASE("run_convergence requires a benchmark") {
  ExperimentConfig c;
  c.model = "hlv";
  c.nu = 0.2;
  c.beta = 0.5;
  c.payoff = "call";
  c.strike = 0.9;
  c.spot = 1.0;
  c.lower_barrier = 0.85;
  c.upper_barrier = 1.25;
  c.maturity = 1.0;
  c.h_kind = "parabolic";
  c.schemes = {"bem"};
  c.n_steps = {2, 4, 8, 16};
  c.paths = 64;
  c.cache_file = scratch_path("never_written.json").string();
  CHECK_THROWS_WITH_AS(run_convergence(c),
                       doctest::Contains("missing-benchmark"),
                       std::runtime_error);
}

TEST_CASE("emit_plot_data skips zero errors and writes natural logs") {
  ConvergenceReport rep;
  rep.rows = {
      {"bem", 8, 1.0, 0.1, 1.0, 0.25},
      {"bem", 16, 1.0, 0.1, 1.0, 0.0},  // skipped: log undefined
      {"euler", 8, 1.0, 0.1, 1.0, 0.5},
  };
  const fs::path p = scratch_path("plot.csv");
  emit_plot_data(rep, p.string());

  std::ifstream f(p);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(f, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "scheme,log_N,log_abs_error");
  CHECK(lines[1].find("bem") == 0);
  // log 8 = 2.0794415416798357, log 0.25 = -1.3862943611198906
  CHECK(lines[1].find("2.0794415416798357") != std::string::npos);
  CHECK(lines[1].find("-1.3862943611198906") != std::string::npos);
  CHECK(lines[2].find("euler") == 0);
}
