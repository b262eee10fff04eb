#pragma once

#include <functional>
#include <string>
#include <vector>

#include "prodrm/ensembles.hpp"
#include "prodrm/scalings.hpp"
#include "prodrm/stats.hpp"

namespace prodrm::experiments {

// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
// written to slot i so the schedule never shows up in the output.
void parallel_for(long n, int threads, const std::function<void(long)>& body);

int default_threads();

struct ReplicaResult {
  SpectrumSample spectrum;
  std::vector<double> lyapunov;  // empty unless requested
  int resamples = 0;
};

// Replica i uses stream (base.seed, base.replica_index + i).
std::vector<ReplicaResult> run_replicas(const EnsembleSpec& base, long replicas, int threads,
                                        bool with_lyapunov = false,
                                        EigenMethod method = EigenMethod::Auto);

// Rotation-pooled density along the chart's radial direction.
std::vector<stats::Bin> pooled_profile(const scalings::LocalChart& chart,
                                       const std::vector<ReplicaResult>& runs,
                                       const std::vector<double>& edges);

// Prediction averaged over each band rather than read at its midpoint.
std::function<double(std::complex<double>)> band_average(const scalings::LocalChart& chart,
                                                         const std::vector<double>& edges);
std::function<double(std::complex<double>)> band_average(std::function<double(std::complex<double>)> density,
                                                         std::complex<double> direction,
                                                         const std::vector<double>& edges);

struct ScanRow {
  int M = 0, N = 0;
  std::string regime;  // by M/N
  double beta = 0.0;
  double ginibre = 0.0, critical = 0.0, gaussian = 0.0;  // relative L1 distances
  double noise = 0.0;  // expected L1 distance from counting noise alone
  std::string best;
  std::string error;  // non-empty if the cell failed
};

// One histogram of the outer edge in the critical chart (q = 0), bins of
// width sqrt(beta)/4 on |x| <= 2.5 sqrt(beta). Predictions: the critical edge
// kernel and its two crossover limits (Ginibre edge, Gaussian). A limit family
// is reported as best when it is within one noise level of the critical one.
ScanRow scan_cell(int M, int N, long replicas, std::uint64_t seed, int threads);

}  // namespace prodrm::experiments
