#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "prodrm/kernels_exact.hpp"

namespace prodrm::stats {

using cplx = std::complex<double>;

struct PointCloud {
  std::vector<cplx> points;
  long replica_count = 1;
  double points_per_replica_expected = 0.0;

  // commutative merge of per-replica clouds
  void merge(const PointCloud& other);
};

// One cell of any estimate: 2-D square bins or pooled radial bands.
struct Bin {
  cplx center;
  double area = 0.0;  // v-area per replica (per eigenvalue for bands)
  long count = 0;
  double density = 0.0;
  double std_error = 0.0;
};

struct DensityEstimate {
  double x_min = 0.0, y_min = 0.0, bin_width = 0.0;
  int nx = 0, ny = 0;
  long replicas = 1;
  bool degenerate = false;  // empty cloud: std errors are infinite
  std::vector<Bin> bins;    // row-major, x fastest
};

// Square bins covering [-window, window]^2.
DensityEstimate estimate_density(const PointCloud& cloud, double bin_width, double window_radius = 3.0);

// Counts of a radial coordinate in bands [edges[i], edges[i+1]); measure(lo, hi)
// is the v-area each observation stands for. Bin centers sit at
// ((lo + hi) / 2) * direction.
std::vector<Bin> radial_profile(const std::vector<double>& x, long replicas,
                                const std::vector<double>& edges,
                                const std::function<double(double, double)>& measure,
                                cplx direction = 1.0);

struct CompareOptions {
  double z_threshold = 4.0;
  double sup_tolerance = std::numeric_limits<double>::infinity();
  bool relative = false;      // sup_tolerance applies to the relative sup
  double min_expected = 5.0;  // per bin, from the prediction
  std::function<bool(cplx)> region;  // bins outside are skipped; empty = all
};

struct BinComparison {
  cplx center;
  double empirical, predicted, std_error, z;
  bool used;
};

struct ComparisonReport {
  double sup_distance = 0.0;
  double relative_sup = 0.0;
  double l1_distance = 0.0;
  double max_z_score = 0.0;
  double mean_z = 0.0;
  int bins_used = 0;
  std::vector<BinComparison> table;
  bool pass = false;
};

ComparisonReport compare(const std::vector<Bin>& bins, long replicas,
                         const std::function<double(cplx)>& predicted, const CompareOptions& opt = {});
inline ComparisonReport compare(const DensityEstimate& est, const std::function<double(cplx)>& predicted,
                                const CompareOptions& opt = {}) {
  return compare(est.bins, est.replicas, predicted, opt);
}

// Kolmogorov-Smirnov distance of radii (|z| / sqrt N) to F(r) = min(r^2, 1).
ComparisonReport radial_cdf_check(std::vector<double> radii, double ks_tolerance = 0.02);

struct NormalityReport {
  double mean = 0.0, variance = 0.0, skewness = 0.0, excess_kurtosis = 0.0;
  std::size_t count = 0;
  bool pass = false;
};
NormalityReport normality_report(const std::vector<double>& samples, double max_skew = 0.25,
                                 double max_excess_kurtosis = 0.5);

double weight_moment_check(const kernels_exact::ExactKernelSpec& spec, int j);

}  // namespace prodrm::stats
