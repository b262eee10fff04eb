#include "prodrm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "prodrm/errors.hpp"
#include "prodrm/kernels_limit.hpp"

namespace prodrm::experiments {

void parallel_for(long n, int threads, const std::function<void(long)>& body) {
  threads = std::max(1, std::min<int>(threads, int(std::max<long>(n, 1))));
  if (threads == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (long i; (i = next++) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

int default_threads() {
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : int(h);
}

std::vector<ReplicaResult> run_replicas(const EnsembleSpec& base, long replicas, int threads, bool with_lyapunov,
                                        EigenMethod method) {
  base.validate();
  if (replicas < 1) throw ConfigError("replicas must be >= 1");
  std::vector<ReplicaResult> out(replicas);
  parallel_for(replicas, threads, [&](long i) {
    EnsembleSpec spec = base;
    spec.replica_index = base.replica_index + std::uint64_t(i);
    ReplicaStream rng(spec);
    FactorChain chain = sample_factors(spec, rng);
    out[i].resamples = chain.resamples;
    if (with_lyapunov) out[i].lyapunov = lyapunov_spectrum_qr(chain);
    out[i].spectrum = eigenvalues(chain, method);
  });
  return out;
}

std::vector<stats::Bin> pooled_profile(const scalings::LocalChart& chart, const std::vector<ReplicaResult>& runs,
                                       const std::vector<double>& edges) {
  std::vector<double> x;
  for (const auto& r : runs)
    for (double lm : r.spectrum.eigen_log_moduli) x.push_back(chart.radial_coordinate(lm));
  return stats::radial_profile(
      x, long(runs.size()), edges, [&](double a, double b) { return chart.band_measure(a, b); },
      chart.radial_direction());
}

std::function<double(std::complex<double>)> band_average(std::function<double(std::complex<double>)> density,
                                                         std::complex<double> dir,
                                                         const std::vector<double>& edges) {
  return [=](std::complex<double> center) {
    double x = (center / dir).real();
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    if (it == edges.begin() || it == edges.end()) return density(center);
    const double lo = *(it - 1), hi = *it;
    // Simpson on 16 panels
    const int n = 16;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += w * density((lo + (hi - lo) * k / n) * dir);
    }
    return acc / (3.0 * n);
  };
}

std::function<double(std::complex<double>)> band_average(const scalings::LocalChart& chart,
                                                         const std::vector<double>& edges) {
  const auto kernel = chart.predicted();
  return band_average([kernel](cplx v) { return kernel.diagonal(v); }, chart.radial_direction(), edges);
}

namespace {

double relative_l1(const std::vector<stats::Bin>& bins, const std::function<double(cplx)>& pred) {
  double num = 0.0, den = 0.0;
  for (const auto& b : bins) {
    double p = pred(b.center);
    num += std::abs(b.density - p) * b.area;
    den += b.density * b.area;
  }
  return den > 0.0 ? num / den : INFINITY;
}

}  // namespace

ScanRow scan_cell(int M, int N, long replicas, std::uint64_t seed, int threads) {
  namespace kl = kernels_limit;
  ScanRow row;
  row.M = M;
  row.N = N;
  const double g = double(M) / N;
  row.regime = g < 0.1 ? "subcritical" : (g > 10.0 ? "supercritical" : "critical");
  try {
    scalings::RegimeSpec rs;
    rs.model = Model::A;
    rs.M = M;
    rs.N = N;
    rs.regime = scalings::Regime::Critical;
    rs.q = 0.0;
    const auto chart = scalings::LocalChart::make(rs);
    const double beta = chart.beta(), sb = std::sqrt(beta);
    row.beta = beta;

    EnsembleSpec spec{Model::A, N, M, 0, seed, 0};
    auto runs = run_replicas(spec, replicas, threads);
    std::vector<double> edges;
    for (int i = 0; i <= 20; ++i) edges.push_back(sb * (-2.5 + 0.25 * i));
    const cplx dir = chart.radial_direction();
    const auto crit = chart.predicted();
    const auto pred = band_average([crit](cplx v) { return crit.diagonal(v); }, dir, edges);
    // bins with fewer than 5 expected points are left out
    std::vector<stats::Bin> bins;
    double num = 0.0, den = 0.0;
    for (const auto& b : pooled_profile(chart, runs, edges)) {
      const double mu = pred(b.center) * b.area * double(replicas);
      if (!(mu >= 5.0)) continue;
      bins.push_back(b);
      // mean absolute deviation of a Poisson count is about sqrt(2 mu / pi)
      num += std::sqrt(2.0 * mu / std::numbers::pi);
      den += mu;
    }
    if (bins.empty()) throw InsufficientData("scan: no bin reaches 5 expected points");
    row.noise = num / den;

    auto distance = [&](std::function<double(cplx)> density) {
      return relative_l1(bins, band_average(std::move(density), dir, edges));
    };
    row.critical = distance([crit](cplx v) { return crit.diagonal(v); });
    row.ginibre = distance([=](cplx v) {
      return kl::crossover_target(kl::KernelKind::Edge, kl::Direction::SmallBeta, v / sb, v / sb).real() / beta;
    });
    row.gaussian = distance([=](cplx v) {
      return kl::crossover_target(kl::KernelKind::Edge, kl::Direction::LargeBeta, v / sb, v / sb).real() / sb;
    });

    const double slack = row.critical + row.noise;
    if (std::min(row.ginibre, row.gaussian) <= slack)
      row.best = row.ginibre <= row.gaussian ? "ginibre" : "gaussian";
    else
      row.best = "critical";
  } catch (const std::exception& e) {
    row.error = e.what();
    row.best = "none";
  }
  return row;
}

}  // namespace prodrm::experiments
