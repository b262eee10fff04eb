#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prodrm/ensembles.hpp"
#include "prodrm/scalings.hpp"

namespace prodrm::cli {

// Size envelope for anything the tool will run.
inline constexpr int kMaxN = 1024;
inline constexpr int kMaxM = 8192;
inline constexpr int kMaxPoints = 8;

enum class Command { Sample, KernelEval, Verify, Scan };
std::string to_string(Command c);
Command command_from_string(const std::string& s);

struct LimitRequest {
  std::string kind = "ginibre_bulk";  // ginibre_bulk | ginibre_edge | critical_bulk | critical_edge | gaussian
  double beta = 1.0;
  double theta = 0.0;
};

struct RunConfig {
  Command command = Command::Sample;
  EnsembleSpec ensemble;
  std::optional<scalings::RegimeSpec> regime;  // M, N, L, model copied from ensemble
  long replicas = 1;
  double bin_width = 0.25;
  std::string output_path;  // directory; empty = $PRODRM_OUTPUT_DIR or "."
  int threads = 1;
  std::map<std::string, double> tolerances;  // verify overrides by criterion id or name

  // kernel-eval
  std::vector<cplx> points;
  std::optional<LimitRequest> limit;
  bool duality_check = false;

  // verify
  std::vector<std::string> only;
  double replica_scale = 1.0;

  // scan
  std::vector<std::pair<int, int>> cells;  // (M, N)

  void validate() const;
  bool operator==(const RunConfig&) const;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig from_json(const nlohmann::json& j);  // missing fields keep defaults
RunConfig load_config(const std::string& path);

std::string output_dir(const RunConfig& c);

// Each writes its files into output_dir(c) and a short report to `log`.
// The return value is the process exit code.
int run_sample(const RunConfig& c, std::ostream& log);
int run_kernel_eval(const RunConfig& c, std::ostream& log);
int run_verify(const RunConfig& c, std::ostream& log);
int run_scan(const RunConfig& c, std::ostream& log);
int run(const RunConfig& c, std::ostream& log);

// Exit codes besides 0 (success) and 1 (verification failed).
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIO = 3;
inline constexpr int kExitNumeric = 4;

}  // namespace prodrm::cli
