#include "prodrm/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "prodrm/errors.hpp"
#include "prodrm/experiments.hpp"
#include "prodrm/kernels_exact.hpp"
#include "prodrm/kernels_limit.hpp"
#include "prodrm/scalings.hpp"
#include "prodrm/specfun.hpp"
#include "prodrm/stats.hpp"

namespace prodrm::verify {

namespace {

constexpr double kPi = std::numbers::pi;
namespace ke = kernels_exact;
namespace kl = kernels_limit;
namespace ex = experiments;
using scalings::LocalChart;
using scalings::Regime;
using scalings::RegimeSpec;

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double threshold(const VerifyOptions& opt, const std::string& id, const std::string& name, double stated) {
  if (auto it = opt.tolerance_overrides.find(id); it != opt.tolerance_overrides.end()) return it->second;
  if (auto it = opt.tolerance_overrides.find(name); it != opt.tolerance_overrides.end()) return it->second;
  return stated;
}

long scaled(const VerifyOptions& opt, long replicas) {
  return std::max(1L, std::lround(replicas * opt.replica_scale));
}

double rel_err(double got, double want) {
  if (want == 0.0) return std::abs(got);
  return std::abs(got - want) / std::abs(want);
}

// ---- A1

CriterionResult weight_oracles(const VerifyOptions& opt) {
  CriterionResult r;
  r.threshold = threshold(opt, "A1", "weight_oracles", 1e-8);
  double worst = 0.0;
  std::string where;
  auto check = [&](const ke::ExactKernelSpec& s, double rad, double want, const char* tag) {
    double e = rel_err(ke::weight(s, rad), want);
    if (e > worst) {
      worst = e;
      where = std::string(tag) + " at |z|=" + fmt("%g", rad);
    }
  };
  ke::ExactKernelSpec a;
  for (int i = 0; i <= 24; ++i) {
    double rad = 0.25 * i;
    check(a, rad, std::exp(-rad * rad), "A");
  }
  for (int L : {1, 2, 3, 5}) {
    ke::ExactKernelSpec b;
    b.model = Model::B;
    b.L = L;
    for (int i = 0; i < 20; ++i) {
      double rad = 0.05 * i;
      check(b, rad, std::pow(1.0 - rad * rad, L - 1) / std::tgamma(L), ("B L=" + std::to_string(L)).c_str());
    }
  }
  for (int N : {1, 3, 8}) {
    ke::ExactKernelSpec c;
    c.model = Model::C;
    c.L = 1;
    c.N = N;
    for (int i = 0; i <= 24; ++i) {
      double rad = 0.25 * i;
      check(c, rad, std::tgamma(N + 1.0) / std::pow(1.0 + rad * rad, N + 1), ("C N=" + std::to_string(N)).c_str());
    }
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  r.details = "max relative error " + fmt("%.3g", worst) + " (" + where + ")";
  return r;
}

// ---- A2

CriterionResult moments(const VerifyOptions& opt) {
  CriterionResult r;
  const double tol_moment = threshold(opt, "A2", "moments", 1e-6);
  const double tol_mass = tol_moment * 10.0;
  r.threshold = tol_moment;
  double worst_m = 0.0, worst_mass = 0.0;
  std::string where_m, where_mass;
  int specs = 0;
  auto run_spec = [&](ke::ExactKernelSpec s, const std::vector<int>& masses) {
    auto rm = ke::radial_moments(s, s.N - 1);
    ++specs;
    std::string tag = to_string(s.model) + " M=" + std::to_string(s.M) + " L=" + std::to_string(s.L) +
                      " N=" + std::to_string(s.N);
    double partial = 0.0;
    for (int j = 0; j < s.N; ++j) {
      const double h = std::exp(ke::log_h(s, j));
      double e = rel_err(rm.moments[j], kPi * h);
      if (e > worst_m) worst_m = e, where_m = tag + " j=" + std::to_string(j);
      partial += rm.moments[j] / (kPi * h);
      // weights of A and B do not depend on N, so one spec covers every N
      if (std::find(masses.begin(), masses.end(), j + 1) != masses.end()) {
        double em = rel_err(partial, j + 1.0);
        if (em > worst_mass) worst_mass = em, where_mass = tag + " N'=" + std::to_string(j + 1);
      }
    }
  };
  const std::vector<int> all_n{1, 2, 3, 4, 5, 6, 7, 8};
  for (int M = 1; M <= 3; ++M) {
    ke::ExactKernelSpec a;
    a.M = M;
    a.N = 8;
    run_spec(a, all_n);
    for (int L = 1; L <= 3; ++L) {
      ke::ExactKernelSpec b = a;
      b.model = Model::B;
      b.L = L;
      run_spec(b, all_n);
      for (int N = 1; N <= 8; ++N) {
        ke::ExactKernelSpec c;
        c.model = Model::C;
        c.M = M;
        c.L = L;
        c.N = N;
        run_spec(c, {N});
      }
    }
  }
  r.measured = worst_m;
  r.pass = worst_m <= tol_moment && worst_mass <= tol_mass;
  std::ostringstream os;
  os << specs << " specs; moments max rel err " << fmt("%.3g", worst_m) << " (" << where_m << ", tol "
     << fmt("%g", tol_moment) << "); mass max rel err " << fmt("%.3g", worst_mass) << " (" << where_mass
     << ", tol " << fmt("%g", tol_mass) << ")";
  r.details = os.str();
  return r;
}

// ---- A3

std::vector<std::pair<cplx, cplx>> duality_pairs() {
  const std::vector<cplx> pts{{0.0, 0.0}, {0.5, 0.0}, {-0.3, 0.4}, {0.2, -0.7}, {1.0, 0.5}};
  std::vector<std::pair<cplx, cplx>> out;
  for (cplx a : pts)
    for (cplx b : pts) out.emplace_back(a, b);
  return out;
}

CriterionResult duality(const VerifyOptions& opt) {
  CriterionResult r;
  r.threshold = threshold(opt, "A3", "duality", 1e-10);
  double worst = 0.0;
  int n = 0;
  for (double beta : {0.5, 1.0, 2.0, 2.0 * kPi, 8.0})
    for (auto [z1, z2] : duality_pairs()) {
      worst = std::max(worst, kl::duality_residual(beta, z1, z2));
      ++n;
    }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  r.details = std::to_string(n) + " (beta, z1, z2) triples, max relative residual " + fmt("%.3g", worst);
  return r;
}

// ---- A4

CriterionResult crossovers(const VerifyOptions& opt) {
  CriterionResult r;
  const double tol_small = threshold(opt, "A4", "crossovers", 1e-3);
  const double tol_large = tol_small * 1e-3;
  r.threshold = tol_small;
  std::vector<cplx> grid;
  for (double x : {-1.5, -0.5, 0.0, 0.5, 1.5})
    for (double y : {-1.0, 0.0, 1.0}) grid.emplace_back(x, y);
  auto sup = [&](kl::KernelKind kind, kl::Direction dir, double beta) {
    double s = 0.0;
    for (cplx a : grid)
      for (cplx b : grid)
        s = std::max(s, std::abs(kl::rescaled_critical(beta, kind, dir, a, b) - kl::crossover_target(kind, dir, a, b)));
    return s;
  };
  const double bs = sup(kl::KernelKind::Bulk, kl::Direction::SmallBeta, 1e-4);
  const double bl = sup(kl::KernelKind::Bulk, kl::Direction::LargeBeta, 1e3);
  const double es = sup(kl::KernelKind::Edge, kl::Direction::SmallBeta, 1e-4);
  const double el = sup(kl::KernelKind::Edge, kl::Direction::LargeBeta, 1e3);
  r.measured = std::max(bs, es);
  r.pass = bs <= tol_small && es <= tol_small && bl <= tol_large && el <= tol_large;
  r.details = "bulk beta=1e-4 " + fmt("%.3g", bs) + ", bulk beta=1e3 " + fmt("%.3g", bl) + ", edge beta=1e-4 " +
              fmt("%.3g", es) + ", edge beta=1e3 " + fmt("%.3g", el) + " (tol " + fmt("%g", tol_small) + " / " +
              fmt("%g", tol_large) + ")";
  return r;
}

// ---- A5, A6 share one run

struct LyapunovRun {
  std::vector<ex::ReplicaResult> runs;
};

std::shared_ptr<const LyapunovRun> lyapunov_run(const VerifyOptions& opt) {
  static std::mutex mu;
  static std::map<std::pair<std::uint64_t, long>, std::shared_ptr<const LyapunovRun>> cache;
  const long reps = scaled(opt, 2000);
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(opt.seed, reps);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto run = std::make_shared<LyapunovRun>();
  EnsembleSpec spec{Model::A, 4, 4096, 0, opt.seed, 0};
  run->runs = ex::run_replicas(spec, reps, opt.threads, true);
  cache[key] = run;
  return run;
}

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / double(x.size());
}

double sd_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / double(x.size() - 1));
}

CriterionResult lyapunov(const VerifyOptions& opt) {
  CriterionResult r;
  r.threshold = threshold(opt, "A5", "lyapunov", 3.0);
  auto run = lyapunov_run(opt);
  const int N = 4, M = 4096;
  std::ostringstream os;
  double worst = 0.0, worst_eq = 0.0;
  for (int k = 1; k <= N; ++k) {
    std::vector<double> lam, mu, diff;
    for (const auto& rr : run->runs) {
      lam.push_back(rr.lyapunov[k - 1]);
      mu.push_back(stability_exponents(rr.spectrum, M)[k - 1]);
      diff.push_back(lam.back() - mu.back());
    }
    const double target = 0.5 * specfun::digamma(N - k + 1.0);
    const double se = sd_of(lam) / std::sqrt(double(lam.size()));
    const double z = std::abs(mean_of(lam) - target) / se;
    worst = std::max(worst, z);
    // Lyapunov vs stability exponents, combined standard error
    const double se_eq = std::hypot(se, sd_of(mu) / std::sqrt(double(mu.size())));
    worst_eq = std::max(worst_eq, std::abs(mean_of(lam) - mean_of(mu)) / se_eq);
    os << "k=" << k << " mean " << fmt("%.7f", mean_of(lam)) << " target " << fmt("%.7f", target) << " z "
       << fmt("%.2f", z) << "; ";
  }
  os << "lyapunov vs stability max z " << fmt("%.2f", worst_eq) << "; replicas " << run->runs.size();
  r.measured = worst;
  r.pass = worst <= r.threshold && worst_eq <= r.threshold;
  r.details = os.str();
  return r;
}

CriterionResult gaussian_fluctuations(const VerifyOptions& opt) {
  CriterionResult r;
  r.threshold = threshold(opt, "A6", "gaussian_fluctuations", 4.0);
  auto run = lyapunov_run(opt);
  std::vector<double> lam1;
  for (const auto& rr : run->runs) lam1.push_back(rr.lyapunov[0]);
  auto norm = stats::normality_report(lam1);

  RegimeSpec rs;
  rs.model = Model::A;
  rs.M = 4096;
  rs.N = 4;
  rs.regime = Regime::Supercritical;
  rs.k = 1;
  auto chart = LocalChart::make(rs);
  std::vector<double> edges;
  for (int i = 0; i <= 16; ++i) edges.push_back(-4.0 + 0.5 * i);
  auto bins = ex::pooled_profile(chart, run->runs, edges);
  stats::CompareOptions co;
  co.z_threshold = r.threshold;
  auto rep = stats::compare(bins, long(run->runs.size()), ex::band_average(chart, edges), co);
  r.measured = rep.max_z_score;
  r.pass = norm.pass && rep.max_z_score <= r.threshold && rep.bins_used > 0;
  r.details = "lambda_1 skewness " + fmt("%.3f", norm.skewness) + ", excess kurtosis " +
              fmt("%.3f", norm.excess_kurtosis) + (norm.pass ? " (normal)" : " (not normal)") + "; k=1 chart " +
              std::to_string(rep.bins_used) + " bins, max z " + fmt("%.2f", rep.max_z_score);
  return r;
}

// ---- A7

CriterionResult ginibre(const VerifyOptions& opt) {
  CriterionResult r;
  r.threshold = threshold(opt, "A7", "ginibre", 0.05);
  const int N = 256;
  const long reps = scaled(opt, 200);
  std::ostringstream os;
  double worst_bulk = 0.0, worst_edge = 0.0;
  for (int M : {1, 2, 4}) {
    EnsembleSpec spec{Model::A, N, M, 0, opt.seed + std::uint64_t(M), 0};
    auto runs = ex::run_replicas(spec, reps, opt.threads);

    RegimeSpec bulk;
    bulk.model = Model::A;
    bulk.M = M;
    bulk.N = N;
    bulk.regime = Regime::Subcritical;
    bulk.u = cplx(0.5, 0.0);
    auto bc = LocalChart::make(bulk);
    const std::vector<double> bedges{-1.0, 0.0, 1.0};
    auto bins = ex::pooled_profile(bc, runs, bedges);
    auto pred = ex::band_average(bc, bedges);
    double sb = 0.0;
    for (const auto& b : bins) sb = std::max(sb, std::abs(b.density - pred(b.center)) / pred(b.center));

    // edge: relative deviation per band; bands expecting fewer than 5 counts carry no information
    RegimeSpec edge = bulk;
    edge.u = cplx(1.0, 0.0);
    auto ec = LocalChart::make(edge);
    std::vector<double> eedges;
    for (int i = 0; i <= 8; ++i) eedges.push_back(-2.0 + 0.5 * i);
    auto ebins = ex::pooled_profile(ec, runs, eedges);
    auto epred = ex::band_average(ec, eedges);
    double se = 0.0, se_at = 0.0;
    int used = 0;
    for (const auto& b : ebins) {
      const double p = epred(b.center);
      if (p * b.area * double(reps) < 5.0) continue;
      ++used;
      const double e = std::abs(b.density - p) / p;
      if (e > se) se = e, se_at = b.center.real();
    }
    worst_bulk = std::max(worst_bulk, sb);
    worst_edge = std::max(worst_edge, se);
    os << "M=" << M << " bulk " << fmt("%.4f", sb) << " edge " << fmt("%.4f", se) << " at v=" << fmt("%.2f", se_at) << " (" << used
       << " bands); ";
  }
  os << "replicas " << reps;
  r.measured = std::max(worst_bulk, worst_edge);
  r.pass = r.measured <= r.threshold;
  r.details = os.str();
  return r;
}

// ---- A8

CriterionResult critical(const VerifyOptions& opt) {
  CriterionResult r;
  r.threshold = threshold(opt, "A8", "critical", 0.15);
  const long reps = scaled(opt, 2000);
  EnsembleSpec spec{Model::A, 48, 48, 0, opt.seed + 48, 0};
  auto runs = ex::run_replicas(spec, reps, opt.threads);
  RegimeSpec rs;
  rs.model = Model::A;
  rs.M = 48;
  rs.N = 48;
  rs.regime = Regime::Critical;
  rs.q = 0.5;
  auto chart = LocalChart::make(rs);
  std::vector<double> edges;
  for (int i = 0; i <= 8; ++i) edges.push_back(-1.0 + 0.25 * i);
  auto bins = ex::pooled_profile(chart, runs, edges);
  auto pred = ex::band_average(chart, edges);
  double worst = 0.0;
  std::ostringstream os;
  for (const auto& b : bins) {
    const double p = pred(b.center);
    const double e = std::abs(b.density - p) / p;
    worst = std::max(worst, e);
    os << fmt("%.3f", b.center.real()) << ":" << fmt("%.4f", b.density) << "/" << fmt("%.4f", p) << " ";
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  r.details = "beta " + fmt("%g", chart.beta()) + "; empirical/predicted " + os.str() + "; replicas " +
              std::to_string(reps);
  return r;
}

// ---- A9

CriterionResult model_b_c(const VerifyOptions& opt) {
  CriterionResult r;
  r.threshold = threshold(opt, "A9", "model_b_c", 3.0);
  const int N = 4, L = 4, M = 4096;
  const long reps = scaled(opt, 400);
  std::ostringstream os;
  double worst = 0.0;
  for (Model model : {Model::B, Model::C}) {
    EnsembleSpec spec{model, N, M, L, opt.seed + (model == Model::B ? 101u : 102u), 0};
    auto runs = ex::run_replicas(spec, reps, opt.threads);
    os << to_string(model) << ":";
    for (int k = 1; k <= N; ++k) {
      RegimeSpec rs;
      rs.model = model;
      rs.M = M;
      rs.N = N;
      rs.L = L;
      rs.regime = Regime::Supercritical;
      rs.k = k;
      auto chart = LocalChart::make(rs);
      std::vector<double> v;
      for (const auto& rr : runs) v.push_back(chart.radial_coordinate(rr.spectrum.eigen_log_moduli[k - 1]));
      // the chart maps the k-th exponent to a standard normal: mean 0 tests
      // the center, standard deviation 1 tests rho
      const double n = double(v.size());
      const double m = mean_of(v), sd = sd_of(v);
      const double zc = std::abs(m) / (sd / std::sqrt(n));
      const double zr = std::abs(sd - 1.0) / (sd / std::sqrt(2.0 * (n - 1.0)));
      worst = std::max({worst, zc, zr});
      os << " k=" << k << " mean " << fmt("%.3f", m) << " sd " << fmt("%.3f", sd);
    }
    os << "; ";
  }
  // unitary closure: L = 0 truncations are Haar unitaries
  double closure = 0.0;
  for (auto [n, m] : {std::pair{4, 4096}, std::pair{8, 16}, std::pair{16, 3}}) {
    EnsembleSpec spec{Model::B, n, m, 0, opt.seed + 7, 0};
    for (long i = 0; i < 5; ++i) {
      spec.replica_index = std::uint64_t(i);
      auto s = sample_spectrum(spec);
      for (double lm : s.eigen_log_moduli) closure = std::max(closure, std::abs(lm));
    }
  }
  os << "unitary closure max |log|z|| " << fmt("%.3g", closure) << "; replicas " << reps;
  r.measured = worst;
  r.pass = worst <= r.threshold && closure <= 1e-8;
  r.details = os.str();
  return r;
}

// ---- A10

double exact_bulk_sup(int N) {
  RegimeSpec rs;
  rs.model = Model::A;
  rs.M = 1;
  rs.N = N;
  rs.regime = Regime::Subcritical;
  rs.u = cplx(0.5, 0.0);
  auto chart = LocalChart::make(rs);
  ke::ExactKernelSpec ks;
  ks.N = N;
  double sup = 0.0;
  for (int i = -10; i <= 10; ++i)
    for (int j = -10; j <= 10; ++j) {
      const cplx v(0.1 * i, 0.1 * j);
      if (std::abs(v) > 1.0 + 1e-12) continue;
      auto z = chart.forward(v);
      ke::LogComplex lz{z.log_modulus, z.phase};
      const double dens = std::exp(chart.log_jacobian({v, 0.0}) + ke::kernel_log(ks, lz, lz).log_modulus);
      sup = std::max(sup, std::abs(dens * kPi - 1.0));
    }
  return sup;
}

CriterionResult exact_convergence(const VerifyOptions& opt) {
  CriterionResult r;
  r.threshold = threshold(opt, "A10", "exact_convergence", 0.03);
  const double d64 = exact_bulk_sup(64), d256 = exact_bulk_sup(256);
  r.measured = d256;
  r.pass = d256 <= r.threshold && d256 < d64;
  r.details = "relative sup |R1 - 1/pi| on |v| <= 1: N=64 " + fmt("%.3g", d64) + ", N=256 " + fmt("%.3g", d256);
  return r;
}

}  // namespace

const std::vector<Criterion>& registry() {
  static const std::vector<Criterion> all{
      {"A1", "weight_oracles", "contour weights vs closed forms", weight_oracles},
      {"A2", "moments", "radial moments and mass of R1", moments},
      {"A3", "duality", "theta duality of the critical bulk kernel", duality},
      {"A4", "crossovers", "critical kernels at small and large beta", crossovers},
      {"A5", "lyapunov", "Lyapunov spectrum, N=4, M=4096", lyapunov},
      {"A6", "gaussian_fluctuations", "normality and k=1 chart density", gaussian_fluctuations},
      {"A7", "ginibre", "Ginibre bulk and edge, N=256", ginibre},
      {"A8", "critical", "critical bulk, M=N=48", critical},
      {"A9", "model_b_c", "models B and C exponents, unitary closure", model_b_c},
      {"A10", "exact_convergence", "exact R1 vs 1/pi at N=64, 256", exact_convergence},
  };
  return all;
}

const Criterion* find(const std::string& key) {
  auto lower = [](std::string s) {
    for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  const std::string k = lower(key);
  for (const auto& c : registry())
    if (lower(c.id) == k || c.name == k) return &c;
  return nullptr;
}

std::vector<CriterionResult> run(const VerifyOptions& opt, const std::vector<std::string>& only) {
  std::vector<const Criterion*> chosen;
  if (only.empty()) {
    for (const auto& c : registry()) chosen.push_back(&c);
  } else {
    for (const auto& key : only) {
      const Criterion* c = find(key);
      if (!c) throw ConfigError("unknown criterion '" + key + "'");
      if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
    }
    std::sort(chosen.begin(), chosen.end());  // registry order
  }
  std::vector<CriterionResult> out;
  for (const Criterion* c : chosen) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = c->run(opt);
    } catch (const std::exception& e) {
      res.pass = false;
      res.error = e.what();
      res.details = std::string("error: ") + e.what();
    }
    res.id = c->id;
    res.name = c->name;
    res.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(res));
  }
  return out;
}

bool all_passed(const std::vector<CriterionResult>& results) {
  return !results.empty() &&
         std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
}

}  // namespace prodrm::verify
