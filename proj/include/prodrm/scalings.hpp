#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "prodrm/ensembles.hpp"
#include "prodrm/kernels_limit.hpp"

namespace prodrm::scalings {

enum class Regime { Supercritical, Critical, Subcritical };
std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

// Which base fields are needed:
//   Supercritical: k.   Critical: q (and theta).
//   Subcritical: u for model A, q (and theta) for B, C, D.
struct RegimeSpec {
  Model model = Model::A;
  int M = 1;
  int N = 1;
  int L = 0;
  Regime regime = Regime::Subcritical;
  std::optional<int> k;
  std::optional<double> q;
  std::optional<cplx> u;
  double theta = 0.0;
  double window_radius = 3.0;

  double gamma() const { return double(M) / N; }
  double tau() const { return double(L) / N; }
  double gamma1() const { return double(M) / N; }
  double gamma2() const { return double(L) / N; }
  void validate() const;
};

// A point in local coordinates. Supercritical charts use (Re v, phi);
// the others use complex v and ignore phi.
struct LocalPoint {
  cplx v;
  double phi = 0.0;
};

// Eigenvalue coordinate in log form, since |z| overflows for large M.
struct GlobalPoint {
  double log_modulus;
  double phase;
};

class LocalChart {
 public:
  enum class Shape { Radial, RootAffine };

  static LocalChart make(const RegimeSpec& spec);

  GlobalPoint forward(LocalPoint p) const;
  GlobalPoint forward(cplx v) const { return forward(LocalPoint{v, 0.0}); }

  // log |dz/dv|^2 (RootAffine) or log(|z|^2 d log|z| / dv) per unit phi (Radial)
  double log_jacobian(LocalPoint p) const;

  // log of the prefactor the limit statement multiplies R^(n) by
  double unfold_prefactor(const std::vector<GlobalPoint>& points) const;

  std::vector<LocalPoint> pullback(const SpectrumSample& sample) const;

  // Rotation-pooled coordinates. x is the radial component of v: the
  // chart's density along v = x * radial_direction() is compared with
  // eigenvalue counts in the band between x_lo and x_hi, which covers
  // band_measure(x_lo, x_hi) units of v-area per eigenvalue.
  double radial_coordinate(double log_modulus) const;
  double band_measure(double x_lo, double x_hi) const;
  cplx radial_direction() const;
  void pullback_into(const SpectrumSample& sample, std::vector<LocalPoint>& out) const;

  const kernels_limit::LimitKernel& predicted() const { return predicted_; }
  Shape shape() const { return shape_; }
  double rho() const { return rho_; }
  double beta() const { return predicted_.beta; }
  double window_radius() const { return window_; }
  const RegimeSpec& spec() const { return spec_; }

  // RootAffine: z = exp(log_extra) * (c0 + c1 v)^power
  int power() const { return power_; }
  cplx c0() const { return c0_; }
  cplx c1() const { return c1_; }
  double log_extra() const { return log_extra_; }
  // Radial: log|z| = center + slope v, arg z = theta + phi
  double center() const { return center_; }
  double slope() const { return slope_; }

 private:
  RegimeSpec spec_;
  Shape shape_ = Shape::RootAffine;
  kernels_limit::LimitKernel predicted_;
  double rho_ = 0.0;
  double window_ = 3.0;
  double log_point_factor_ = 0.0;  // per-point prefactor besides |z|^2
  int power_ = 1;
  cplx c0_ = 1.0, c1_ = 1.0;
  double log_extra_ = 0.0;
  double center_ = 0.0, slope_ = 1.0, theta_ = 0.0;
};

}  // namespace prodrm::scalings
