#include "prodrm/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "prodrm/errors.hpp"
#include "prodrm/experiments.hpp"
#include "prodrm/kernels_exact.hpp"
#include "prodrm/kernels_limit.hpp"
#include "prodrm/verify.hpp"

namespace prodrm::cli {

using nlohmann::json;
namespace ke = kernels_exact;
namespace kl = kernels_limit;

std::string to_string(Command c) {
  switch (c) {
    case Command::Sample: return "sample";
    case Command::KernelEval: return "kernel-eval";
    case Command::Verify: return "verify";
    case Command::Scan: return "scan";
  }
  return "?";
}

Command command_from_string(const std::string& s) {
  if (s == "sample") return Command::Sample;
  if (s == "kernel-eval") return Command::KernelEval;
  if (s == "verify") return Command::Verify;
  if (s == "scan") return Command::Scan;
  throw ConfigError("unknown command '" + s + "'");
}

namespace {

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx cplx_from(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError("complex numbers are written as [re, im] or a real number");
}

kl::LimitKernel limit_kernel(const LimitRequest& r) {
  using K = kl::LimitKernel::Kind;
  kl::LimitKernel k;
  k.beta = r.beta;
  k.theta = r.theta;
  if (r.kind == "ginibre_bulk") k.kind = K::GinibreBulk;
  else if (r.kind == "ginibre_edge") k.kind = K::GinibreEdge;
  else if (r.kind == "critical_bulk") k.kind = K::CriticalBulk;
  else if (r.kind == "critical_edge") k.kind = K::CriticalEdge;
  else if (r.kind == "gaussian") k.kind = K::GaussianDensity;
  else throw ConfigError("unknown limit kernel '" + r.kind + "'");
  return k;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::ios_base::failure("cannot write " + p.string());
  return f;
}

void write_json(const std::filesystem::path& p, const json& j) {
  auto f = open_out(p);
  f << j.dump(2) << "\n";
  if (!f) throw std::ios_base::failure("write failed: " + p.string());
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Subcommand-independent guard so every entry point reports errors the same way.
template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::ios_base::failure& e) {
    log << "i/o error: " << e.what() << "\n";
    return kExitIO;
  } catch (const AccuracyError& e) {
    log << "accuracy error: " << e.what() << " (achieved " << e.achieved << ")\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace

void RunConfig::validate() const {
  ensemble.validate();
  if (ensemble.N > kMaxN) throw ConfigError("N above the envelope (" + std::to_string(kMaxN) + ")");
  if (ensemble.M > kMaxM) throw ConfigError("M above the envelope (" + std::to_string(kMaxM) + ")");
  if (ensemble.L > kMaxN) throw ConfigError("L above the envelope (" + std::to_string(kMaxN) + ")");
  if (replicas < 1) throw ConfigError("replicas must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(bin_width > 0.0)) throw ConfigError("bin_width must be positive");
  if (!(replica_scale > 0.0)) throw ConfigError("replica_scale must be positive");
  if (int(points.size()) > kMaxPoints)
    throw ConfigError("at most " + std::to_string(kMaxPoints) + " points (n-point envelope)");
  if (regime) {
    scalings::RegimeSpec r = *regime;
    r.model = ensemble.model;
    r.M = ensemble.M;
    r.N = ensemble.N;
    r.L = ensemble.L;
    r.validate();
  }
  if (limit) limit_kernel(*limit);
  for (auto [M, N] : cells) {
    if (M < 1 || N < 1) throw ConfigError("scan cells need M, N >= 1");
    if (M > kMaxM || N > kMaxN) throw ConfigError("scan cell outside the envelope");
  }
  for (const auto& key : only)
    if (!verify::find(key)) throw ConfigError("unknown criterion '" + key + "'");
}

bool RunConfig::operator==(const RunConfig& o) const { return to_json(*this) == to_json(o); }

json to_json(const RunConfig& c) {
  json j;
  j["command"] = to_string(c.command);
  j["ensemble"] = {{"model", prodrm::to_string(c.ensemble.model)},
                   {"N", c.ensemble.N},
                   {"M", c.ensemble.M},
                   {"L", c.ensemble.L},
                   {"seed", c.ensemble.seed}};
  if (c.regime) {
    const auto& r = *c.regime;
    json rj{{"regime", scalings::to_string(r.regime)}, {"theta", r.theta}, {"window_radius", r.window_radius}};
    if (r.k) rj["k"] = *r.k;
    if (r.q) rj["q"] = *r.q;
    if (r.u) rj["u"] = cplx_json(*r.u);
    j["regime"] = rj;
  }
  j["replicas"] = c.replicas;
  j["bin_width"] = c.bin_width;
  j["output_path"] = c.output_path;
  j["threads"] = c.threads;
  j["tolerances"] = c.tolerances;
  json pts = json::array();
  for (cplx z : c.points) pts.push_back(cplx_json(z));
  j["points"] = pts;
  if (c.limit) j["limit"] = {{"kind", c.limit->kind}, {"beta", c.limit->beta}, {"theta", c.limit->theta}};
  j["duality_check"] = c.duality_check;
  j["only"] = c.only;
  j["replica_scale"] = c.replica_scale;
  json cells = json::array();
  for (auto [M, N] : c.cells) cells.push_back({{"M", M}, {"N", N}});
  j["cells"] = cells;
  return j;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (j.contains("command")) c.command = command_from_string(j["command"].get<std::string>());
  if (j.contains("ensemble")) {
    const auto& e = j["ensemble"];
    if (e.contains("model")) c.ensemble.model = model_from_string(e["model"].get<std::string>());
    c.ensemble.N = e.value("N", c.ensemble.N);
    c.ensemble.M = e.value("M", c.ensemble.M);
    c.ensemble.L = e.value("L", c.ensemble.L);
    c.ensemble.seed = e.value("seed", c.ensemble.seed);
  }
  if (j.contains("regime") && !j["regime"].is_null()) {
    const auto& r = j["regime"];
    scalings::RegimeSpec rs;
    rs.regime = scalings::regime_from_string(r.at("regime").get<std::string>());
    rs.theta = r.value("theta", 0.0);
    rs.window_radius = r.value("window_radius", 3.0);
    if (r.contains("k")) rs.k = r["k"].get<int>();
    if (r.contains("q")) rs.q = r["q"].get<double>();
    if (r.contains("u")) rs.u = cplx_from(r["u"]);
    c.regime = rs;
  }
  c.replicas = j.value("replicas", c.replicas);
  c.bin_width = j.value("bin_width", c.bin_width);
  c.output_path = j.value("output_path", c.output_path);
  c.threads = j.value("threads", c.threads);
  if (j.contains("tolerances")) c.tolerances = j["tolerances"].get<std::map<std::string, double>>();
  if (j.contains("points"))
    for (const auto& p : j["points"]) c.points.push_back(cplx_from(p));
  if (j.contains("limit") && !j["limit"].is_null()) {
    const auto& l = j["limit"];
    LimitRequest lr;
    lr.kind = l.value("kind", lr.kind);
    lr.beta = l.value("beta", lr.beta);
    lr.theta = l.value("theta", lr.theta);
    c.limit = lr;
  }
  c.duality_check = j.value("duality_check", c.duality_check);
  if (j.contains("only")) c.only = j["only"].get<std::vector<std::string>>();
  c.replica_scale = j.value("replica_scale", c.replica_scale);
  if (j.contains("cells"))
    for (const auto& cell : j["cells"]) c.cells.emplace_back(cell.at("M").get<int>(), cell.at("N").get<int>());
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return from_json(j);
}

std::string output_dir(const RunConfig& c) {
  if (!c.output_path.empty()) return c.output_path;
  if (const char* env = std::getenv("PRODRM_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

namespace {

std::filesystem::path prepare_dir(const RunConfig& c) {
  std::filesystem::path dir = output_dir(c);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::ios_base::failure("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

scalings::RegimeSpec regime_for(const RunConfig& c) {
  scalings::RegimeSpec r = *c.regime;
  r.model = c.ensemble.model;
  r.M = c.ensemble.M;
  r.N = c.ensemble.N;
  r.L = c.ensemble.L;
  return r;
}

}  // namespace

int run_sample(const RunConfig& c, std::ostream& log) {
  return guarded(log, [&] {
    c.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto runs = experiments::run_replicas(c.ensemble, c.replicas, c.threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto dir = prepare_dir(c);
    long rows = 0, resamples = 0;
    {
      auto f = open_out(dir / "eigenvalues.csv");
      f << "replica,index,log_modulus,phase\n";
      for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& s = runs[r].spectrum;
        resamples += runs[r].resamples;
        for (std::size_t i = 0; i < s.size(); ++i, ++rows)
          f << r << ',' << i << ',' << num(s.eigen_log_moduli[i]) << ',' << num(s.eigen_phases[i]) << '\n';
      }
      if (!f) throw std::ios_base::failure("write failed: eigenvalues.csv");
    }
    json summary{{"spec", to_json(c)["ensemble"]},
                 {"seed", c.ensemble.seed},
                 {"runtime_seconds", secs},
                 {"replicas", c.replicas},
                 {"eigenvalues", rows},
                 {"resamples", resamples},
                 {"method", auto_method(c.ensemble) == EigenMethod::Direct ? "direct" : "periodic"},
                 {"threads", c.threads}};
    write_json(dir / "sample_summary.json", summary);
    log << "wrote " << rows << " eigenvalues to " << (dir / "eigenvalues.csv").string() << "\n";
    return 0;
  });
}

int run_kernel_eval(const RunConfig& c, std::ostream& log) {
  return guarded(log, [&] {
    c.validate();
    json out;
    out["ensemble"] = to_json(c)["ensemble"];

    std::optional<scalings::LocalChart> chart;
    if (c.regime) chart = scalings::LocalChart::make(regime_for(c));

    const bool exact = c.ensemble.model != Model::D && !c.points.empty();
    ke::ExactKernelSpec ks;
    ks.model = c.ensemble.model;
    ks.M = c.ensemble.M;
    ks.N = c.ensemble.N;
    ks.L = c.ensemble.L;

    json pts = json::array();
    std::vector<ke::LogComplex> zs;
    for (cplx p : c.points) {
      json pj;
      ke::LogComplex z;
      if (chart) {
        auto g = chart->forward(p);
        z = {g.log_modulus, g.phase};
        pj["v"] = cplx_json(p);
        pj["log_modulus"] = g.log_modulus;
        pj["phase"] = g.phase;
        pj["predicted"] = chart->predicted().diagonal(p);
        pj["predicted_kernel"] = chart->predicted().name();
      } else {
        z = ke::LogComplex::from(p);
        pj["z"] = cplx_json(p);
      }
      if (exact) {
        auto w = ke::weight_detail(ks, z.log_modulus);
        auto k = ke::kernel_log(ks, z, z);
        pj["density"] = std::exp(k.log_modulus);
        pj["log_density"] = k.log_modulus;
        pj["weight_error_bound"] = w.error_bound;
        pj["weight_clamped"] = w.clamped;
        if (chart) pj["unfolded_density"] = std::exp(chart->log_jacobian({p, 0.0}) + k.log_modulus);
      }
      if (c.limit) pj["limit"] = limit_kernel(*c.limit).diagonal(p);
      zs.push_back(z);
      pts.push_back(pj);
    }
    out["points"] = pts;
    if (exact && zs.size() >= 2) {
      auto r = ke::correlation_detail(ks, zs);
      out["correlation"] = {{"n", zs.size()}, {"value", r.value}, {"raw", r.raw}, {"clamped", r.clamped}};
    }
    if (c.limit) {
      auto lk = limit_kernel(*c.limit);
      out["limit"] = {{"kernel", lk.name()}, {"beta", lk.beta}, {"theta", lk.theta}};
      if (c.points.size() >= 2) {
        json pairs = json::array();
        for (std::size_t a = 0; a < c.points.size(); ++a)
          for (std::size_t b = 0; b < c.points.size(); ++b) {
            cplx v = lk(c.points[a], c.points[b]);
            pairs.push_back({{"i", a}, {"j", b}, {"value", cplx_json(v)}});
          }
        out["limit"]["matrix"] = pairs;
      }
    }
    if (c.duality_check) {
      double worst = 0.0;
      int n = 0;
      const std::vector<cplx> grid = c.points.empty()
                                         ? std::vector<cplx>{{0.0, 0.0}, {0.5, 0.0}, {-0.3, 0.4}, {0.2, -0.7}, {1.0, 0.5}}
                                         : c.points;
      const std::vector<double> betas =
          c.limit ? std::vector<double>{c.limit->beta} : std::vector<double>{0.5, 1.0, 2.0, 2.0 * std::numbers::pi, 8.0};
      for (double b : betas)
        for (cplx z1 : grid)
          for (cplx z2 : grid) {
            worst = std::max(worst, kl::duality_residual(b, z1, z2));
            ++n;
          }
      out["duality"] = {{"max_residual", worst}, {"evaluations", n}};
    }
    const auto dir = prepare_dir(c);
    write_json(dir / "kernel_eval.json", out);
    log << out.dump(2) << "\n";
    return 0;
  });
}

int run_verify(const RunConfig& c, std::ostream& log) {
  return guarded(log, [&] {
    c.validate();
    verify::VerifyOptions opt;
    opt.seed = c.ensemble.seed;
    opt.threads = c.threads;
    opt.tolerance_overrides = c.tolerances;
    opt.replica_scale = c.replica_scale;
    auto results = verify::run(opt, c.only);
    const bool ok = verify::all_passed(results);
    json crit = json::array();
    for (const auto& r : results) {
      crit.push_back({{"id", r.id},
                      {"name", r.name},
                      {"pass", r.pass},
                      {"measured", r.measured},
                      {"threshold", r.threshold},
                      {"details", r.details},
                      {"runtime_seconds", r.runtime_seconds},
                      {"error", r.error}});
      log << r.id << " " << r.name << ": " << (r.pass ? "PASS" : "FAIL") << " measured " << r.measured
          << " threshold " << r.threshold << "\n";
    }
    json report{{"pass", ok},
                {"seed", opt.seed},
                {"replica_scale", opt.replica_scale},
                {"ginibre_bulk_bias", kl::ginibre_bulk_bias()},
                {"criteria", crit}};
    const auto dir = prepare_dir(c);
    write_json(dir / "verify_report.json", report);
    return ok ? 0 : 1;
  });
}

int run_scan(const RunConfig& c, std::ostream& log) {
  return guarded(log, [&] {
    c.validate();
    auto cells = c.cells;
    if (cells.empty()) cells = {{1, 256}, {48, 48}, {4096, 4}};
    const auto dir = prepare_dir(c);
    auto f = open_out(dir / "scan.csv");
    f << "M,N,regime,beta,ginibre,critical,gaussian,noise,best,error\n";
    for (auto [M, N] : cells) {
      auto row = experiments::scan_cell(M, N, c.replicas, c.ensemble.seed, c.threads);
      if (!row.error.empty()) log << "cell M=" << M << " N=" << N << " failed: " << row.error << "\n";
      std::string err = row.error;
      for (char& ch : err)
        if (ch == ',' || ch == '\n') ch = ';';
      f << M << ',' << N << ',' << row.regime << ',' << num(row.beta) << ',' << num(row.ginibre) << ','
        << num(row.critical) << ',' << num(row.gaussian) << ',' << num(row.noise) << ',' << row.best << ','
        << err << '\n';
      f.flush();
      log << "M=" << M << " N=" << N << " best " << row.best << "\n";
    }
    if (!f) throw std::ios_base::failure("write failed: scan.csv");
    return 0;
  });
}

int run(const RunConfig& c, std::ostream& log) {
  switch (c.command) {
    case Command::Sample: return run_sample(c, log);
    case Command::KernelEval: return run_kernel_eval(c, log);
    case Command::Verify: return run_verify(c, log);
    case Command::Scan: return run_scan(c, log);
  }
  return kExitConfig;
}

}  // namespace prodrm::cli
