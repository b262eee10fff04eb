#include "prodrm/stats.hpp"

#include <algorithm>
#include <boost/math/statistics/univariate_statistics.hpp>
#include <cmath>
#include <numbers>

#include "prodrm/errors.hpp"

namespace prodrm::stats {

void PointCloud::merge(const PointCloud& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
  replica_count += other.replica_count;
}

DensityEstimate estimate_density(const PointCloud& cloud, double bin_width, double window_radius) {
  if (!(bin_width > 0.0)) throw DomainError("estimate_density: bin width must be positive");
  if (cloud.replica_count < 1) throw DomainError("estimate_density: replica count must be >= 1");
  DensityEstimate est;
  est.bin_width = bin_width;
  est.replicas = cloud.replica_count;
  const int half = int(std::ceil(window_radius / bin_width - 1e-12));
  est.nx = est.ny = 2 * half;
  est.x_min = est.y_min = -half * bin_width;
  est.bins.resize(std::size_t(est.nx) * est.ny);
  const double area = bin_width * bin_width;
  for (int iy = 0; iy < est.ny; ++iy)
    for (int ix = 0; ix < est.nx; ++ix) {
      Bin& b = est.bins[std::size_t(iy) * est.nx + ix];
      b.center = cplx(est.x_min + (ix + 0.5) * bin_width, est.y_min + (iy + 0.5) * bin_width);
      b.area = area;
    }
  for (cplx p : cloud.points) {
    int ix = int(std::floor((p.real() - est.x_min) / bin_width));
    int iy = int(std::floor((p.imag() - est.y_min) / bin_width));
    if (ix < 0 || iy < 0 || ix >= est.nx || iy >= est.ny) continue;
    ++est.bins[std::size_t(iy) * est.nx + ix].count;
  }
  est.degenerate = cloud.points.empty();
  const double exposure = double(cloud.replica_count) * area;
  for (Bin& b : est.bins) {
    b.density = b.count / exposure;
    b.std_error = est.degenerate ? INFINITY : std::sqrt(double(b.count)) / exposure;
  }
  return est;
}

std::vector<Bin> radial_profile(const std::vector<double>& x, long replicas, const std::vector<double>& edges,
                                const std::function<double(double, double)>& measure, cplx direction) {
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
    throw DomainError("radial_profile: need at least two increasing edges");
  std::vector<Bin> bins(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    bins[i].center = 0.5 * (edges[i] + edges[i + 1]) * direction;
    bins[i].area = measure(edges[i], edges[i + 1]);
  }
  for (double v : x) {
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    if (it == edges.begin() || it == edges.end()) continue;
    ++bins[std::size_t(it - edges.begin()) - 1].count;
  }
  for (Bin& b : bins) {
    double exposure = double(replicas) * b.area;
    if (exposure <= 0.0) {  // band lies outside the chart image
      b.density = 0.0;
      b.std_error = 0.0;
      continue;
    }
    b.density = b.count / exposure;
    b.std_error = x.empty() ? INFINITY : std::sqrt(double(b.count)) / exposure;
  }
  return bins;
}

ComparisonReport compare(const std::vector<Bin>& bins, long replicas, const std::function<double(cplx)>& predicted,
                         const CompareOptions& opt) {
  ComparisonReport rep;
  double zsum = 0.0;
  for (const Bin& b : bins) {
    BinComparison row{b.center, b.density, predicted(b.center), b.std_error, 0.0, false};
    const double expected = row.predicted * b.area * double(replicas);
    const bool inside = !opt.region || opt.region(b.center);
    // Poisson error from the prediction so empty bins still get a finite z
    const double sigma = std::sqrt(std::max(expected, 0.0)) / (b.area * double(replicas));
    row.z = sigma > 0.0 ? (row.empirical - row.predicted) / sigma : 0.0;
    row.used = inside && expected >= opt.min_expected;
    if (row.used) {
      const double d = std::abs(row.empirical - row.predicted);
      rep.sup_distance = std::max(rep.sup_distance, d);
      rep.relative_sup = std::max(rep.relative_sup, d / std::abs(row.predicted));
      rep.l1_distance += d * b.area;
      rep.max_z_score = std::max(rep.max_z_score, std::abs(row.z));
      zsum += row.z;
      ++rep.bins_used;
    }
    rep.table.push_back(row);
  }
  rep.mean_z = rep.bins_used ? zsum / rep.bins_used : 0.0;
  const double dist = opt.relative ? rep.relative_sup : rep.sup_distance;
  rep.pass = rep.bins_used > 0 && rep.max_z_score <= opt.z_threshold && dist <= opt.sup_tolerance;
  return rep;
}

ComparisonReport radial_cdf_check(std::vector<double> radii, double ks_tolerance) {
  ComparisonReport rep;
  if (radii.empty()) throw InsufficientData("radial_cdf_check: no radii");
  std::sort(radii.begin(), radii.end());
  const double n = double(radii.size());
  double d = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    double f = std::min(radii[i] * radii[i], 1.0);
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(i / n - f)});
  }
  rep.sup_distance = rep.relative_sup = d;
  rep.bins_used = int(radii.size());
  rep.pass = d <= ks_tolerance;
  return rep;
}

NormalityReport normality_report(const std::vector<double>& samples, double max_skew, double max_excess_kurtosis) {
  namespace bms = boost::math::statistics;
  if (samples.size() < 200) throw InsufficientData("normality_report: need at least 200 samples");
  NormalityReport r;
  r.count = samples.size();
  auto [mean, var] = bms::mean_and_sample_variance(samples);
  if (!(var > 0.0)) throw DegenerateData("normality_report: zero variance");
  r.mean = mean;
  r.variance = var;
  r.skewness = bms::skewness(samples);
  r.excess_kurtosis = bms::excess_kurtosis(samples);
  r.pass = std::abs(r.skewness) <= max_skew && std::abs(r.excess_kurtosis) <= max_excess_kurtosis;
  return r;
}

double weight_moment_check(const kernels_exact::ExactKernelSpec& spec, int j) {
  auto m = kernels_exact::radial_moments(spec, j);
  const double target = std::numbers::pi * std::exp(kernels_exact::log_h(spec, j));
  return std::abs(m.moments[j] - target) / target;
}

}  // namespace prodrm::stats
