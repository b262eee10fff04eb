#include "prodrm/scalings.hpp"

#include <cmath>
#include <numbers>

#include "prodrm/errors.hpp"
#include "prodrm/specfun.hpp"

namespace prodrm::scalings {

namespace {
constexpr double kPi = std::numbers::pi;
using specfun::digamma;
using specfun::trigamma;
using Kind = kernels_limit::LimitKernel::Kind;

double wrap(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}
}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Supercritical: return "supercritical";
    case Regime::Critical: return "critical";
    case Regime::Subcritical: return "subcritical";
  }
  return "?";
}

Regime regime_from_string(const std::string& s) {
  if (s == "supercritical") return Regime::Supercritical;
  if (s == "critical") return Regime::Critical;
  if (s == "subcritical") return Regime::Subcritical;
  throw ConfigError("unknown regime '" + s + "'");
}

void RegimeSpec::validate() const {
  if (N < 1 || M < 1 || L < 0) throw DomainError("RegimeSpec: need N, M >= 1 and L >= 0");
  const bool with_l = model != Model::A;
  if (with_l && L < 1) throw DomainError("RegimeSpec: models B, C, D need L >= 1 here");
  if (!(window_radius > 0.0)) throw ConfigError("RegimeSpec: window radius must be positive");
  switch (regime) {
    case Regime::Supercritical:
      if (!k || q || u) throw ConfigError("supercritical chart takes k only");
      if (*k < 1 || *k > N) throw DomainError("k must lie in [1, N]");
      break;
    case Regime::Critical:
      if (!q || k || u) throw ConfigError("critical chart takes q (and theta)");
      if (model == Model::C || model == Model::D) {
        if (!(*q > 0.0 && *q < 1.0)) throw DomainError("critical chart for models C, D needs q in (0, 1)");
      } else if (!(*q >= 0.0 && *q < 1.0)) {
        throw DomainError("critical chart needs q in [0, 1)");
      }
      break;
    case Regime::Subcritical:
      if (model == Model::A) {
        if (!u || k || q) throw ConfigError("model A subcritical chart takes u");
        double a = std::abs(*u);
        if (!(a > 0.0 && a <= 1.0)) throw DomainError("|u| must lie in (0, 1]");
      } else {
        if (!q || k || u) throw ConfigError("subcritical chart for models B, C, D takes q (and theta)");
        bool ok = model == Model::B ? (*q > 0.0 && *q <= 1.0) : (*q > 0.0 && *q < 1.0);
        if (!ok) throw DomainError("subcritical q out of range");
      }
      break;
  }
}

LocalChart LocalChart::make(const RegimeSpec& s) {
  s.validate();
  LocalChart c;
  c.spec_ = s;
  c.window_ = s.window_radius;
  c.theta_ = s.theta;
  const double N = s.N, M = s.M, L = s.L;

  if (s.regime == Regime::Supercritical) {
    const double j = N - *s.k + 1;
    c.shape_ = Shape::Radial;
    c.predicted_.kind = Kind::GaussianDensity;
    if (s.model == Model::A) {
      c.rho_ = 2.0 / std::sqrt(N * trigamma(j));
      c.center_ = 0.5 * M * digamma(j);
      c.slope_ = std::sqrt(M) / (c.rho_ * std::sqrt(N));
      c.log_point_factor_ = std::log(c.slope_);
    } else if (s.model == Model::B) {
      c.rho_ = 2.0 / std::sqrt(N * (trigamma(j) - trigamma(L + j)));
      c.center_ = 0.5 * M * (digamma(j) - digamma(L + j));
      c.slope_ = std::sqrt(M) / (c.rho_ * std::sqrt(N));
      c.log_point_factor_ = std::log(c.slope_);
    } else {
      const double k = *s.k;
      c.rho_ = 2.0 / std::sqrt(M * trigamma(j) + L * trigamma(k));
      c.center_ = 0.5 * (M * digamma(j) - L * digamma(k));
      c.slope_ = 1.0 / c.rho_;
      c.log_point_factor_ = -std::log(c.rho_);
    }
    return c;
  }

  c.shape_ = Shape::RootAffine;
  const cplx phase = std::polar(1.0, s.theta);
  if (s.regime == Regime::Critical) {
    const double q = *s.q;
    const double fl = std::floor(q * N);
    double u2 = 0.0, shift = 0.0, scale = 0.0;
    c.log_point_factor_ = 0.0;
    if (s.model == Model::A || s.model == Model::B) {
      const double g = s.gamma();
      c.power_ = s.M;
      scale = 1.0 / std::sqrt(g * M * N);
      if (s.model == Model::A) {
        u2 = 1.0 - fl / N;
        shift = g / (4.0 * (1.0 - q));
        c.predicted_.beta = q > 0.0 ? g / (1.0 - q) : g;
        c.c0_ = std::sqrt(N * u2) * phase;
      } else {
        const double t = s.tau();
        const double a = N - fl;
        u2 = a / (a + L);
        shift = g * t / (4.0 * (1.0 - q) * (1.0 - q + t));
        c.predicted_.beta = g * t / ((1.0 - q) * (1.0 - q + t));
        c.c0_ = std::sqrt(u2) * phase;
      }
      c.predicted_.kind = q > 0.0 ? Kind::CriticalBulk : Kind::CriticalEdge;
    } else {
      const double g1 = s.gamma1(), g2 = s.gamma2();
      const double p = M + L;
      c.power_ = s.M + s.L;
      c.log_extra_ = 0.5 * (M - L) * std::log(N);
      u2 = std::pow(1.0 - fl / N, M / p) * std::pow((1.0 + fl) / N, -L / p);
      scale = 1.0 / std::sqrt((g1 + g2) * p * N);
      shift = g1 / (4.0 * (1.0 - q)) - g2 / (4.0 * q);
      c.predicted_.kind = Kind::CriticalBulk;
      c.predicted_.beta = g1 / (1.0 - q) + g2 / q;
      c.c0_ = std::sqrt(u2) * phase;
    }
    c.c1_ = c.c0_ * scale;
    c.c0_ = c.c0_ * (1.0 - shift * scale);
    return c;
  }

  // subcritical
  if (s.model == Model::A) {
    const cplx u = *s.u;
    c.power_ = s.M;
    c.c0_ = std::sqrt(N) * u;
    c.c1_ = 1.0 / std::sqrt(M);
    c.rho_ = 1.0;
    c.log_point_factor_ = std::log(M / (N * std::norm(u)));
    c.theta_ = std::arg(u);
    bool edge = std::abs(std::abs(u) - 1.0) < 1e-12;
    c.predicted_.kind = edge ? Kind::GinibreEdge : Kind::GinibreBulk;
    c.predicted_.theta = std::arg(u);
  } else if (s.model == Model::B) {
    const double q = *s.q;
    const double u2 = q * N / (q * N + L);
    c.power_ = s.M;
    c.rho_ = std::sqrt(s.tau()) / (1.0 - u2);
    c.c0_ = std::sqrt(u2) * phase;
    c.c1_ = 1.0 / (c.rho_ * std::sqrt(M * N));
    c.log_point_factor_ = std::log(M / (c.rho_ * c.rho_ * u2 * N));
    c.predicted_.kind = q == 1.0 ? Kind::GinibreEdge : Kind::GinibreBulk;
    c.predicted_.theta = s.theta;
  } else {
    const double q = *s.q;
    const double p = M + L;
    const double u2 = std::pow(q, M / p) * std::pow(1.0 - q, -L / p);
    const double au = std::sqrt(u2);
    c.power_ = s.M + s.L;
    c.log_extra_ = 0.5 * (M - L) * std::log(N);
    c.rho_ = std::sqrt(q * (1.0 - q) * p / ((1.0 - q) * M + q * L)) / au;
    c.c0_ = au * phase;
    c.c1_ = 1.0 / (c.rho_ * std::sqrt(p * N));
    c.log_point_factor_ = std::log(p / (c.rho_ * c.rho_ * u2 * N));
    c.predicted_.kind = Kind::GinibreBulk;
  }
  return c;
}

GlobalPoint LocalChart::forward(LocalPoint p) const {
  if (shape_ == Shape::Radial) return {center_ + slope_ * p.v.real(), wrap(theta_ + p.phi)};
  const cplx zeta = c0_ + c1_ * p.v;
  return {log_extra_ + power_ * std::log(std::abs(zeta)), wrap(power_ * std::arg(zeta))};
}

double LocalChart::log_jacobian(LocalPoint p) const {
  if (shape_ == Shape::Radial) return 2.0 * (center_ + slope_ * p.v.real()) + std::log(slope_);
  const cplx zeta = c0_ + c1_ * p.v;
  return 2.0 * log_extra_ + 2.0 * (power_ - 1) * std::log(std::abs(zeta)) +
         2.0 * std::log(power_ * std::abs(c1_));
}

double LocalChart::unfold_prefactor(const std::vector<GlobalPoint>& points) const {
  double acc = 0.0;
  for (const auto& z : points) acc += log_point_factor_ + 2.0 * z.log_modulus;
  return acc;
}

double LocalChart::radial_coordinate(double log_modulus) const {
  if (shape_ == Shape::Radial) return (log_modulus - center_) / slope_;
  const double r = std::exp((log_modulus - log_extra_) / power_);
  return (r - std::abs(c0_)) / std::abs(c1_);
}

double LocalChart::band_measure(double x_lo, double x_hi) const {
  if (shape_ == Shape::Radial) return 2.0 * kPi * (x_hi - x_lo);
  const double r0 = std::abs(c0_), s = std::abs(c1_);
  const double a = std::max(r0 + x_lo * s, 0.0), b = std::max(r0 + x_hi * s, 0.0);
  return kPi * (b * b - a * a) / (s * s * power_);
}

cplx LocalChart::radial_direction() const {
  if (shape_ == Shape::Radial) return 1.0;
  return (c0_ / std::abs(c0_)) / (c1_ / std::abs(c1_));
}

std::vector<LocalPoint> LocalChart::pullback(const SpectrumSample& sample) const {
  std::vector<LocalPoint> out;
  pullback_into(sample, out);
  return out;
}

void LocalChart::pullback_into(const SpectrumSample& sample, std::vector<LocalPoint>& out) const {
  const std::size_t n = sample.size();
  if (shape_ == Shape::Radial) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = (sample.eigen_log_moduli[i] - center_) / slope_;
      if (std::abs(v) <= window_) out.push_back({cplx(v, 0.0), wrap(sample.eigen_phases[i] - theta_)});
    }
    return;
  }
  const double reach = window_ * std::abs(c1_);
  const double r0 = std::abs(c0_);
  const double a0 = std::arg(c0_);
  const double p = power_;
  // branches whose argument can land within reach of c0
  long half;
  if (reach >= r0) {
    half = power_;
  } else {
    double da = std::asin(reach / r0);
    half = long(std::ceil(p * da / (2.0 * kPi))) + 1;
  }
  const double lo_mod = std::log(std::max(r0 - reach, 0.0)), hi_mod = std::log(r0 + reach);
  for (std::size_t i = 0; i < n; ++i) {
    const double lz = (sample.eigen_log_moduli[i] - log_extra_) / p;
    if (lz < lo_mod - 1e-12 || lz > hi_mod + 1e-12) continue;
    const double ph = sample.eigen_phases[i];
    const long mid = std::lround((p * a0 - ph) / (2.0 * kPi));
    long mlo = mid - half, mhi = mid + half;
    if (mhi - mlo + 1 > power_) mhi = mlo + power_ - 1;
    const double mod = std::exp(lz);
    for (long m = mlo; m <= mhi; ++m) {
      cplx zeta = std::polar(mod, (ph + 2.0 * kPi * double(m)) / p);
      cplx v = (zeta - c0_) / c1_;
      if (std::abs(v) <= window_) out.push_back({v, 0.0});
    }
  }
}

}  // namespace prodrm::scalings
