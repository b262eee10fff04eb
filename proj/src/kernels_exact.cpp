#include "prodrm/kernels_exact.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "prodrm/errors.hpp"
#include "prodrm/specfun.hpp"

namespace prodrm::kernels_exact {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTilt = 0.5;        // leftward bend of the Model B contour
constexpr long kMaxNodes = 400000;
}  // namespace

LogComplex LogComplex::from(cplx z) {
  double a = std::abs(z);
  return {a > 0.0 ? std::log(a) : -INFINITY, a > 0.0 ? std::arg(z) : 0.0};
}

void ExactKernelSpec::validate() const {
  if (model == Model::D) throw DomainError("exact kernels exist for models A, B, C only");
  if (M < 1 || N < 1) throw DomainError("ExactKernelSpec: M, N must be >= 1");
  if (L < 0) throw DomainError("ExactKernelSpec: L must be >= 0");
  if (model == Model::B && L < 1) throw DomainError("ExactKernelSpec: model B needs L >= 1");
  if (!(target_tolerance > 0.0)) throw DomainError("ExactKernelSpec: target_tolerance must be > 0");
  if (contour_offset) {
    double c = *contour_offset;
    bool ok = c > 0.0 && (model != Model::C || L == 0 || c < N + 1.0);
    if (!ok) throw DomainError("ExactKernelSpec: contour offset outside the legal strip");
  }
  if (contour_half_width && !(*contour_half_width > 0.0))
    throw DomainError("ExactKernelSpec: contour half width must be > 0");
  if (quadrature_step && !(*quadrature_step > 0.0))
    throw DomainError("ExactKernelSpec: quadrature step must be > 0");
}

namespace {

// Integrand exponent phi(sigma) after sigma = -s, without the -2 sigma log r term.
struct Integrand {
  const ExactKernelSpec& s;

  cplx phi(cplx sg) const {
    switch (s.model) {
      case Model::A: return double(s.M) * specfun::log_gamma(sg);
      case Model::B: {
        cplx acc = 0.0;
        for (int k = 0; k < s.L; ++k) acc += std::log(sg + double(k));
        return -double(s.M) * acc;
      }
      default: {
        cplx v = double(s.M) * specfun::log_gamma(sg);
        if (s.L > 0) v += double(s.L) * specfun::log_gamma(double(s.N + 1) - sg);
        return v;
      }
    }
  }
  double dphi(double c) const {
    switch (s.model) {
      case Model::A: return s.M * specfun::digamma(c);
      case Model::B: {
        double acc = 0.0;
        for (int k = 0; k < s.L; ++k) acc += 1.0 / (c + k);
        return -s.M * acc;
      }
      default: {
        double v = s.M * specfun::digamma(c);
        if (s.L > 0) v -= s.L * specfun::digamma(s.N + 1.0 - c);
        return v;
      }
    }
  }
  double ddphi(double c) const {
    switch (s.model) {
      case Model::A: return s.M * specfun::trigamma(c);
      case Model::B: {
        double acc = 0.0;
        for (int k = 0; k < s.L; ++k) acc += 1.0 / ((c + k) * (c + k));
        return s.M * acc;
      }
      default: {
        double v = s.M * specfun::trigamma(c);
        if (s.L > 0) v += s.L * specfun::trigamma(s.N + 1.0 - c);
        return v;
      }
    }
  }
  bool bounded_right() const { return s.model == Model::C && s.L > 0; }

  // real saddle: dphi(c) = 2 log r
  double saddle(double log_r) const {
    const double target = 2.0 * log_r;
    if (bounded_right()) {
      const double W = s.N + 1.0;
      double lo = -700.0, hi = 700.0;  // logit of c / W
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double c = W / (1.0 + std::exp(-mid));
        if (c <= 0.0 || c >= W) { (c <= 0.0 ? lo : hi) = mid; continue; }
        (dphi(c) < target ? lo : hi) = mid;
      }
      return W / (1.0 + std::exp(-0.5 * (lo + hi)));
    }
    double lo = -690.0, hi = 690.0;  // log c
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (dphi(std::exp(mid)) < target ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
  }
};

}  // namespace

WeightResult weight_detail(const ExactKernelSpec& spec, double log_r) {
  spec.validate();
  WeightResult out;
  if (std::isnan(log_r)) throw DomainError("weight: NaN radius");
  if (spec.model == Model::B && log_r >= 0.0) {
    out.log_value = -INFINITY;
    return out;
  }
  if (log_r == -INFINITY) {
    if (spec.M >= 2) {
      out.value = out.raw = INFINITY;
      out.log_value = INFINITY;
      return out;
    }
    switch (spec.model) {
      case Model::A: out.log_value = 0.0; break;
      case Model::B: out.log_value = -std::lgamma(double(spec.L)); break;
      default: out.log_value = spec.L * std::lgamma(spec.N + 1.0); break;
    }
    out.value = out.raw = std::exp(out.log_value);
    return out;
  }

  Integrand f{spec};
  const double c = spec.contour_offset ? *spec.contour_offset : f.saddle(log_r);
  const double width = 1.0 / std::sqrt(f.ddphi(c));
  // trapezoid error ~ exp(-2 pi d / h) for a pole at distance d, and
  // exp(-2 pi^2 s^2 / h^2) for a Gaussian core of width s
  double pole = c;
  if (f.bounded_right()) pole = std::min(pole, spec.N + 1.0 - c);
  const double digits = std::log(1.0 / spec.target_tolerance) + 10.0;
  const double h = spec.quadrature_step
                       ? *spec.quadrature_step
                       : std::min(1.6 * kPi * pole / digits, kPi * std::sqrt(2.0 / digits) * width);
  const double tmax = spec.contour_half_width ? *spec.contour_half_width : INFINITY;
  const double tilt = spec.model == Model::B ? kTilt : 0.0;
  const double t0 = std::max(c, width);

  const cplx phi_c = f.phi(c) - 2.0 * c * log_r;
  auto node = [&](double t) {
    double bend = tilt * (std::hypot(t, t0) - t0);
    cplx sg(c - bend, t);
    cplx dsig = cplx(1.0, tilt * t / std::hypot(t, t0));
    return std::exp(f.phi(sg) - 2.0 * sg * log_r - phi_c) * dsig;
  };

  double sum = node(0.0).real();
  long count = 1;
  int quiet = 0;
  double last = 0.0;
  const double stop = 1e-3 * spec.target_tolerance;
  for (long k = 1;; ++k) {
    double t = k * h;
    if (t > tmax) break;
    double g = node(t).real();
    sum += 2.0 * g;
    ++count;
    last = std::abs(g);
    if (last <= stop * std::abs(sum) && t > 2.0 * width) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
    if (count > kMaxNodes) throw AccuracyError("weight: node budget exhausted", last / std::abs(sum));
  }
  out.offset = c;
  out.step = h;
  out.nodes = count;
  out.error_bound = 4.0 * last / std::abs(sum);
  const double log_pref = phi_c.real() + std::log(h / (2.0 * kPi));
  out.raw = sum * std::exp(log_pref);
  if (sum <= 0.0) {
    out.clamped = true;
    out.value = 0.0;
    out.log_value = -INFINITY;
  } else {
    out.log_value = log_pref + std::log(sum);
    out.value = std::exp(out.log_value);
  }
  if (out.error_bound > spec.target_tolerance && !spec.contour_half_width)
    throw AccuracyError("weight: tail bound above tolerance", out.error_bound);
  return out;
}

double weight(const ExactKernelSpec& spec, double r) {
  if (r < 0.0) throw DomainError("weight: r must be >= 0");
  return weight_detail(spec, r > 0.0 ? std::log(r) : -INFINITY).value;
}

double log_weight(const ExactKernelSpec& spec, double log_r) {
  return weight_detail(spec, log_r).log_value;
}

double log_h(const ExactKernelSpec& spec, int j) {
  const double lj = std::lgamma(j + 1.0);
  switch (spec.model) {
    case Model::A: return spec.M * lj;
    case Model::B: return spec.M * (lj - std::lgamma(spec.L + j + 1.0));
    default: return spec.M * lj + spec.L * std::lgamma(double(spec.N - j));
  }
}

namespace {

LogComplex logsum(const std::vector<double>& lm, const std::vector<double>& ph) {
  double mx = -INFINITY;
  for (double x : lm) mx = std::max(mx, x);
  if (mx == -INFINITY) return {};
  cplx acc = 0.0;
  for (std::size_t k = 0; k < lm.size(); ++k)
    if (lm[k] > -INFINITY) acc += std::polar(std::exp(lm[k] - mx), ph[k]);
  LogComplex r = LogComplex::from(acc);
  r.log_modulus += mx;
  return r;
}

}  // namespace

LogComplex truncated_sum(const ExactKernelSpec& spec, LogComplex z1, LogComplex z2) {
  spec.validate();
  const double lx = z1.log_modulus + z2.log_modulus;
  const double th = z1.phase - z2.phase;
  std::vector<double> lm(spec.N), ph(spec.N);
  for (int j = 0; j < spec.N; ++j) {
    lm[j] = (j == 0 ? 0.0 : j * lx) - log_h(spec, j);
    ph[j] = j * th;
  }
  return logsum(lm, ph);
}

LogComplex truncated_sum(const ExactKernelSpec& spec, cplx z1, cplx z2) {
  return truncated_sum(spec, LogComplex::from(z1), LogComplex::from(z2));
}

LogComplex kernel_log(const ExactKernelSpec& spec, LogComplex z1, LogComplex z2) {
  const double w1 = log_weight(spec, z1.log_modulus);
  const double w2 = z2.log_modulus == z1.log_modulus ? w1 : log_weight(spec, z2.log_modulus);
  if (w1 == -INFINITY || w2 == -INFINITY) return {};
  LogComplex t = truncated_sum(spec, z1, z2);
  t.log_modulus += 0.5 * (w1 + w2) - std::log(kPi);
  return t;
}

cplx kernel(const ExactKernelSpec& spec, cplx z1, cplx z2) {
  return kernel_log(spec, LogComplex::from(z1), LogComplex::from(z2)).value();
}

CorrelationResult correlation_detail(const ExactKernelSpec& spec,
                                     const std::vector<LogComplex>& pts) {
  const int n = int(pts.size());
  if (n < 1 || n > 8) throw DomainError("correlation: need 1..8 points");
  std::vector<double> lw(n);
  for (int i = 0; i < n; ++i) lw[i] = log_weight(spec, pts[i].log_modulus);
  CorrelationResult out;
  for (double x : lw)
    if (x == -INFINITY) return out;
  std::vector<std::vector<LogComplex>> T(n, std::vector<LogComplex>(n));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      T[i][j] = truncated_sum(spec, pts[i], pts[j]);
      T[j][i] = {T[i][j].log_modulus, -T[i][j].phase};
    }
  Eigen::MatrixXcd B(n, n);
  double log_rows = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = -INFINITY;
    for (int j = 0; j < n; ++j) s = std::max(s, T[i][j].log_modulus);
    log_rows += s;
    for (int j = 0; j < n; ++j) B(i, j) = std::polar(std::exp(T[i][j].log_modulus - s), T[i][j].phase);
  }
  const double det = Eigen::FullPivLU<Eigen::MatrixXcd>(B).determinant().real();
  double log_pref = log_rows;
  for (double x : lw) log_pref += x - std::log(kPi);
  out.raw = det * std::exp(log_pref);
  if (det <= 0.0) {
    out.clamped = true;
    return out;
  }
  out.log_value = log_pref + std::log(det);
  out.value = std::exp(out.log_value);
  return out;
}

double correlation(const ExactKernelSpec& spec, const std::vector<cplx>& points) {
  std::vector<LogComplex> lp;
  for (auto z : points) lp.push_back(LogComplex::from(z));
  return correlation_detail(spec, lp).value;
}

RadialMoments radial_moments(const ExactKernelSpec& spec, int max_j) {
  spec.validate();
  if (max_j < 0 || max_j > spec.N - 1) throw DomainError("radial_moments: j out of range");
  RadialMoments out;
  out.moments.assign(max_j + 1, 0.0);
  // integral of w(sqrt x) x^j dx, times pi
  auto add = [&](double log_x, double dx_weight) {
    double lw = log_weight(spec, 0.5 * log_x);
    if (lw == -INFINITY) return;
    for (int j = 0; j <= max_j; ++j) out.moments[j] += kPi * std::exp(lw + j * log_x) * dx_weight;
  };
  if (spec.model == Model::B) {
    // tanh-sinh on (0, 1)
    const double h = 1.0 / 32.0;
    for (int k = -160; k <= 160; ++k) {
      double u = k * h;
      double v = 0.5 * kPi * std::sinh(u);
      double one_minus = 1.0 / (1.0 + std::exp(2.0 * v));
      double x = 1.0 / (1.0 + std::exp(-2.0 * v));
      if (one_minus < 1e-13 || x < 1e-300) continue;
      double dx = h * 0.25 * kPi * std::cosh(u) / (std::cosh(v) * std::cosh(v));
      add(x < 0.5 ? std::log(x) : std::log1p(-one_minus), dx);
    }
  } else {
    // trapezoid in y = log x over the whole line; the integrand is analytic
    // in |Im y| < pi/2, so the error is about exp(-pi^2 / h)
    const double h = 1.0 / 4.0;
    double peak = -INFINITY;
    for (int k = int(-40.0 / h);; ++k) {
      double y = k * h;
      double lw = log_weight(spec, 0.5 * y);
      double top = lw + (max_j + 1) * y;
      double low = lw + y;
      peak = std::max({peak, top, low});
      for (int j = 0; j <= max_j; ++j) out.moments[j] += kPi * std::exp(lw + (j + 1) * y) * h;
      if (y > 0.0 && std::max(top, low) < peak - 45.0) break;
      if (y > 400.0) throw AccuracyError("radial_moments: integrand does not decay", 1.0);
    }
  }
  for (int j = 0; j <= max_j; ++j) out.mass += out.moments[j] / (kPi * std::exp(log_h(spec, j)));
  return out;
}

}  // namespace prodrm::kernels_exact
