#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "prodrm/ensembles.hpp"

namespace prodrm::kernels_exact {

using cplx = std::complex<double>;

struct LogComplex {
  double log_modulus = -INFINITY;
  double phase = 0.0;

  static LogComplex from(cplx z);
  cplx value() const { return std::polar(std::exp(log_modulus), phase); }
};

// Unset contour controls are chosen per evaluation point: the offset sits
// at the real saddle of the integrand, the step resolves its width.
struct ExactKernelSpec {
  Model model = Model::A;
  int M = 1;
  int N = 1;
  int L = 0;
  std::optional<double> contour_offset;
  std::optional<double> contour_half_width;
  std::optional<double> quadrature_step;  // step in Im s
  double target_tolerance = 1e-12;

  void validate() const;
};

struct WeightResult {
  double value = 0.0;  // max(raw, 0)
  double log_value = -INFINITY;
  double raw = 0.0;
  double error_bound = 0.0;  // relative
  double offset = 0.0;
  double step = 0.0;
  long nodes = 0;
  bool clamped = false;
};

// w at |z| = exp(log_r); log_r = -inf means r = 0.
WeightResult weight_detail(const ExactKernelSpec& spec, double log_r);
double weight(const ExactKernelSpec& spec, double r);
double log_weight(const ExactKernelSpec& spec, double log_r);

// log of the orthogonality mass h_j
double log_h(const ExactKernelSpec& spec, int j);

LogComplex truncated_sum(const ExactKernelSpec& spec, LogComplex z1, LogComplex z2);
LogComplex truncated_sum(const ExactKernelSpec& spec, cplx z1, cplx z2);

LogComplex kernel_log(const ExactKernelSpec& spec, LogComplex z1, LogComplex z2);
cplx kernel(const ExactKernelSpec& spec, cplx z1, cplx z2);

struct CorrelationResult {
  double value = 0.0;
  double raw = 0.0;
  double log_value = -INFINITY;
  bool clamped = false;
};

CorrelationResult correlation_detail(const ExactKernelSpec& spec, const std::vector<LogComplex>& points);
double correlation(const ExactKernelSpec& spec, const std::vector<cplx>& points);

// Radial integrals on a fixed node set, reused for all moments of one spec.
struct RadialMoments {
  std::vector<double> moments;  // integral of w |z|^{2j} dA, j = 0..N-1
  double mass = 0.0;            // integral of R^(1) dA
};
RadialMoments radial_moments(const ExactKernelSpec& spec, int max_j);

}  // namespace prodrm::kernels_exact
