#include "kdmc/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace kdmc {

namespace {

// Block size of the deterministic schedule: path indices are partitioned
// into consecutive blocks of this size, each block is reduced on its own,
// and blocks are merged in index order. Results are bit-identical for any
// worker count.
constexpr std::int64_t kBlockSize = 4096;

struct Welford {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
};

void merge(Welford& a, const Welford& b) {
  if (b.n == 0) return;
  if (a.n == 0) {
    a = b;
    return;
  }
  const std::int64_t n = a.n + b.n;
  const double delta = b.mean - a.mean;
  a.mean += delta * (static_cast<double>(b.n) / static_cast<double>(n));
  a.m2 += b.m2 + delta * delta *
                     (static_cast<double>(a.n) * static_cast<double>(b.n) /
                      static_cast<double>(n));
  a.n = n;
}

double stderr_of(const Welford& w) {
  if (w.n < 2) return 0.0;
  return std::sqrt(w.m2 / (static_cast<double>(w.n - 1) *
                           static_cast<double>(w.n)));
}

struct BlockOut {
  std::vector<Welford> acc;
  double wmin = std::numeric_limits<double>::infinity();
  double wmax = -std::numeric_limits<double>::infinity();
  std::int64_t killed = 0;
  std::int64_t bad_path = -1;  // first non-finite estimator, -1 if none
};

std::vector<McResult> run_blocks(const PathKernel& path_fn,
                                 const std::vector<Estimator>& estimators,
                                 const RngSpec& rng, std::int64_t n_paths,
                                 int n_threads) {
  if (!path_fn) throw std::invalid_argument("run_mc: empty path kernel");
  if (n_paths < 1) throw std::invalid_argument("run_mc: n_paths must be >= 1");
  if (estimators.empty()) {
    throw std::invalid_argument("run_mc: no estimators");
  }
  if (n_threads < 1) n_threads = 1;

  const std::int64_t n_blocks = (n_paths + kBlockSize - 1) / kBlockSize;
  std::vector<BlockOut> blocks(static_cast<std::size_t>(n_blocks));
  std::atomic<std::int64_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::int64_t blk = next.fetch_add(1, std::memory_order_relaxed);
      if (blk >= n_blocks) return;
      BlockOut out;
      out.acc.assign(estimators.size(), Welford{});
      const std::int64_t begin = blk * kBlockSize;
      const std::int64_t end = std::min(begin + kBlockSize, n_paths);
      for (std::int64_t p = begin; p < end; ++p) {
        NormalStream stream = make_stream(rng, static_cast<std::uint64_t>(p));
        const PathOutcome o = path_fn(stream);
        out.wmin = std::fmin(out.wmin, o.weight);
        out.wmax = std::fmax(out.wmax, o.weight);
        if (o.killed) ++out.killed;
        for (std::size_t k = 0; k < estimators.size(); ++k) {
          const double v = estimators[k].eval(o);
          if (!std::isfinite(v)) {
            if (out.bad_path < 0) out.bad_path = p;
            continue;
          }
          out.acc[k].add(v);
        }
      }
      blocks[static_cast<std::size_t>(blk)] = std::move(out);
    }
  };

  const int spawned = static_cast<int>(
      std::min<std::int64_t>(n_threads, n_blocks));
  if (spawned <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(spawned));
    for (int i = 0; i < spawned; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::int64_t bad = -1;
  for (const BlockOut& b : blocks) {
    if (b.bad_path >= 0 && (bad < 0 || b.bad_path < bad)) bad = b.bad_path;
  }
  if (bad >= 0) {
    throw std::runtime_error("non-finite-estimator: path index " +
                             std::to_string(bad));
  }

  double wmin = std::numeric_limits<double>::infinity();
  double wmax = -std::numeric_limits<double>::infinity();
  std::int64_t killed = 0;
  for (const BlockOut& b : blocks) {
    wmin = std::fmin(wmin, b.wmin);
    wmax = std::fmax(wmax, b.wmax);
    killed += b.killed;
  }

  std::vector<McResult> results(estimators.size());
  for (std::size_t k = 0; k < estimators.size(); ++k) {
    Welford total;
    for (const BlockOut& b : blocks) merge(total, b.acc[k]);
    McResult& r = results[k];
    r.mean = total.mean;
    r.stderr_ = stderr_of(total);
    r.n_paths = total.n;
    r.diagnostics["weight_min"] = wmin;
    r.diagnostics["weight_max"] = wmax;
    r.diagnostics["killed_fraction"] =
        static_cast<double>(killed) / static_cast<double>(n_paths);
    r.diagnostics["n_blocks"] = static_cast<double>(n_blocks);
  }
  return results;
}

}  // namespace

double Estimator::eval(const PathOutcome& out) const {
  if (out.weight == 0.0) return 0.0;  // killed paths contribute exactly zero
  const double g = payoff(out.terminal);
  if (h_at_terminal) {
    return prefactor * h_at_terminal->h(x0) *
           (g / h_at_terminal->h(out.terminal)) * out.weight;
  }
  return prefactor * g * out.weight;
}

McResult run_mc(const PathKernel& path_fn,
                const std::function<double(double)>& payoff, double prefactor,
                const HTransform* h_at_terminal, double x0, const RngSpec& rng,
                std::int64_t n_paths, int n_threads) {
  Estimator e;
  e.payoff = payoff;
  e.prefactor = prefactor;
  e.h_at_terminal = h_at_terminal;
  e.x0 = x0;
  return run_blocks(path_fn, {e}, rng, n_paths, n_threads).front();
}

std::vector<McResult> run_mc_multi(const PathKernel& path_fn,
                                   const std::vector<Estimator>& estimators,
                                   const RngSpec& rng, std::int64_t n_paths,
                                   int n_threads) {
  return run_blocks(path_fn, estimators, rng, n_paths, n_threads);
}

McResult combine(const std::vector<McResult>& partials) {
  if (partials.empty()) {
    throw std::invalid_argument("empty-input: combine needs at least one partial");
  }
  Welford total;
  for (const McResult& p : partials) {
    if (p.n_paths < 1) {
      throw std::invalid_argument("combine: partial with n_paths < 1");
    }
    Welford w;
    w.n = p.n_paths;
    w.mean = p.mean;
    // Invert stderr = sqrt(m2 / ((n-1) n)) to recover the second moment.
    w.m2 = p.stderr_ * p.stderr_ * static_cast<double>(p.n_paths - 1) *
           static_cast<double>(p.n_paths);
    merge(total, w);
  }
  McResult out;
  out.mean = total.mean;
  out.stderr_ = stderr_of(total);
  out.n_paths = total.n;
  out.diagnostics["n_partials"] = static_cast<double>(partials.size());
  return out;
}

}  // namespace kdmc
