// prodrm: sample | kernel-eval | verify | scan
//
// A JSON config (--config) sets everything; flags given on the command line
// override it. Outputs go to --out, else $PRODRM_OUTPUT_DIR, else ".".

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "prodrm/cli.hpp"
#include "prodrm/errors.hpp"
#include "prodrm/kernels_limit.hpp"

namespace {

using prodrm::cplx;

cplx parse_cplx(const std::string& s) {
  std::istringstream in(s);
  double re = 0.0, im = 0.0;
  char comma = 0;
  in >> re;
  if (!in) throw prodrm::ConfigError("bad complex number '" + s + "' (want re or re,im)");
  if (in >> comma) {
    if (comma != ',' || !(in >> im)) throw prodrm::ConfigError("bad complex number '" + s + "' (want re,im)");
  }
  return {re, im};
}

std::pair<int, int> parse_cell(const std::string& s) {
  auto c = parse_cplx(s);
  return {int(c.real()), int(c.imag())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Products of random matrices: sampling, kernels, verification"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out, model, regime;
  std::uint64_t seed = 0;
  int threads = 1, N = 1, M = 1, L = 0, k = 1;
  long replicas = 1;
  double bin_width = 0.25, q = 0.0, theta = 0.0, beta = 1.0, replica_scale = 1.0, bias = 0.0;
  std::string u, limit;
  std::vector<std::string> points, only, tolerances, cells;
  bool duality = false;

  auto* o_config = app.add_option("--config", config_path, "JSON run configuration");
  auto* o_seed = app.add_option("--seed", seed, "master seed");
  auto* o_threads = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_model = app.add_option("--model", model, "A, B, C or D");
  auto* o_N = app.add_option("-N", N, "matrix size");
  auto* o_M = app.add_option("-M", M, "number of factors");
  auto* o_L = app.add_option("-L", L, "truncation / inverse factors");
  auto* o_reps = app.add_option("--replicas", replicas, "independent replicas");
  auto* o_bw = app.add_option("--bin-width", bin_width, "histogram bin width");
  auto* o_regime = app.add_option("--regime", regime, "supercritical, critical or subcritical");
  auto* o_k = app.add_option("--k", k, "exponent index (supercritical)");
  auto* o_q = app.add_option("--q", q, "bulk position (critical; subcritical B/C/D)");
  auto* o_u = app.add_option("--u", u, "re,im (subcritical A)");
  auto* o_theta = app.add_option("--theta", theta, "angle");

  auto* sample = app.add_subcommand("sample", "write eigenvalues.csv and sample_summary.json");
  auto* keval = app.add_subcommand("kernel-eval", "exact and limit kernels at points, kernel_eval.json");
  auto* o_points = keval->add_option("--point", points, "re,im (repeatable; chart coordinates if --regime)");
  auto* o_limit = keval->add_option("--limit", limit,
                                    "ginibre_bulk, ginibre_edge, critical_bulk, critical_edge or gaussian");
  auto* o_beta = keval->add_option("--beta", beta, "beta of a critical kernel");
  auto* o_dual = keval->add_flag("--duality-check", duality, "max duality residual over the point grid");
  auto* ver = app.add_subcommand("verify", "run acceptance criteria, verify_report.json; exit 1 on failure");
  auto* o_only = ver->add_option("--only", only, "criterion id or name (repeatable)");
  ver->add_option("--tolerance", tolerances, "id=value threshold override (repeatable)");
  auto* o_scale = ver->add_option("--replica-scale", replica_scale, "multiply Monte Carlo replica counts");
  ver->add_option("--test-ginibre-bias", bias, "test hook: scale ginibre_bulk by (1 + bias)");
  auto* scan = app.add_subcommand("scan", "phase-diagram scan, scan.csv");
  auto* o_cells = scan->add_option("--cell", cells, "M,N (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : prodrm::cli::kExitConfig;
  }

  using namespace prodrm::cli;
  RunConfig cfg;
  try {
    if (o_config->count()) cfg = load_config(config_path);
    if (sample->parsed()) cfg.command = Command::Sample;
    if (keval->parsed()) cfg.command = Command::KernelEval;
    if (ver->parsed()) cfg.command = Command::Verify;
    if (scan->parsed()) cfg.command = Command::Scan;
    if (o_seed->count()) cfg.ensemble.seed = seed;
    if (o_threads->count()) cfg.threads = threads;
    if (o_out->count()) cfg.output_path = out;
    if (o_model->count()) cfg.ensemble.model = prodrm::model_from_string(model);
    if (o_N->count()) cfg.ensemble.N = N;
    if (o_M->count()) cfg.ensemble.M = M;
    if (o_L->count()) cfg.ensemble.L = L;
    if (o_reps->count()) cfg.replicas = replicas;
    if (o_bw->count()) cfg.bin_width = bin_width;
    if (o_regime->count() || o_k->count() || o_q->count() || o_u->count() || o_theta->count()) {
      auto r = cfg.regime.value_or(prodrm::scalings::RegimeSpec{});
      if (o_regime->count()) r.regime = prodrm::scalings::regime_from_string(regime);
      if (o_k->count()) r.k = k, r.q.reset(), r.u.reset();
      if (o_q->count()) r.q = q, r.k.reset(), r.u.reset();
      if (o_u->count()) r.u = parse_cplx(u), r.k.reset(), r.q.reset();
      if (o_theta->count()) r.theta = theta;
      cfg.regime = r;
    }
    if (o_points->count()) {
      cfg.points.clear();
      for (const auto& p : points) cfg.points.push_back(parse_cplx(p));
    }
    if (o_limit->count() || o_beta->count()) {
      auto lr = cfg.limit.value_or(LimitRequest{});
      if (o_limit->count()) lr.kind = limit;
      if (o_beta->count()) lr.beta = beta;
      if (o_theta->count()) lr.theta = theta;
      cfg.limit = lr;
    }
    if (o_dual->count()) cfg.duality_check = true;
    if (o_only->count()) cfg.only = only;
    for (const auto& t : tolerances) {
      auto eq = t.find('=');
      if (eq == std::string::npos) throw prodrm::ConfigError("--tolerance wants id=value, got '" + t + "'");
      cfg.tolerances[t.substr(0, eq)] = std::stod(t.substr(eq + 1));
    }
    if (o_scale->count()) cfg.replica_scale = replica_scale;
    if (o_cells->count()) {
      cfg.cells.clear();
      for (const auto& c : cells) cfg.cells.push_back(parse_cell(c));
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  prodrm::kernels_limit::set_ginibre_bulk_bias(bias);

  const bool report = cfg.command == Command::KernelEval || cfg.command == Command::Verify;
  return run(cfg, report ? std::cout : std::cerr);
}
