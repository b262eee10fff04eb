#include "prodrm/specfun.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "prodrm/errors.hpp"

namespace prodrm::specfun {

namespace {

constexpr double kPi = std::numbers::pi;

// B_{2k} / (2k (2k-1)), k = 1..8
constexpr double kStirling[] = {
    1.0 / 12.0,        -1.0 / 360.0,     1.0 / 1260.0,       -1.0 / 1680.0,
    1.0 / 1188.0,      -691.0 / 360360.0, 1.0 / 156.0,       -3617.0 / 122400.0,
};

cplx stirling(cplx z) {
  cplx inv = 1.0 / z;
  cplx inv2 = inv * inv;
  cplx corr = 0.0;
  cplx p = inv;
  for (double c : kStirling) {
    corr += c * p;
    p *= inv2;
  }
  return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * kPi) + corr;
}

bool is_pole(cplx z) {
  return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real());
}

}  // namespace

cplx log_gamma(cplx z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError("log_gamma: non-finite argument");
  if (is_pole(z)) throw DomainError("log_gamma: pole of Gamma");
  if (z.real() < -50.0) {
    // reflection; only exp() of the result is meaningful here
    return std::log(kPi) - std::log(std::sin(kPi * z)) - log_gamma(1.0 - z);
  }
  if (std::abs(z.imag()) >= 10.0 && z.real() >= 0.0) return stirling(z);
  cplx shift = 0.0;
  while (z.real() < 10.0) {
    shift += std::log(z);
    z += 1.0;
  }
  return stirling(z) - shift;
}

double digamma(double x) {
  if (!(x > 0.0)) throw DomainError("digamma: argument must be positive");
  return boost::math::digamma(x);
}

double trigamma(double x) {
  if (!(x > 0.0)) throw DomainError("trigamma: argument must be positive");
  return boost::math::trigamma(x);
}

namespace {

cplx erf_taylor(cplx z) {
  cplx z2 = z * z;
  cplx term = z;  // (-1)^n z^{2n+1} / n!
  cplx sum = z;
  for (int n = 1; n < 5000; ++n) {
    term *= -z2 / double(n);
    cplx t = term / double(2 * n + 1);
    sum += t;
    if (std::abs(t) < 1e-17 * std::abs(sum) && n > std::norm(z)) break;
  }
  return sum * (2.0 / std::sqrt(kPi));
}

// Laplace continued fraction, Re z >= 2 or far from the origin.
cplx erfc_cf(cplx z) {
  const double tiny = 1e-300;
  cplx f = z;
  cplx C = z, D = 0.0;
  for (int n = 1; n < 20000; ++n) {
    double a = 0.5 * n;
    D = z + a * D;
    if (std::abs(D) < tiny) D = tiny;
    C = z + a / C;
    if (std::abs(C) < tiny) C = tiny;
    D = 1.0 / D;
    cplx delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-z * z) / (std::sqrt(kPi) * f);
}

}  // namespace

cplx erfc(cplx z) {
  if (z.real() < 0.0) return 2.0 - erfc(-z);
  if (z.real() >= 2.0 || std::abs(z) > 25.0) return erfc_cf(z);
  return 1.0 - erf_taylor(z);
}

ThetaSum theta_sum_parts(double beta, cplx w, Lattice support,
                         const SeriesControl& ctl) {
  if (!(beta > 0.0)) throw DomainError("theta_sum: beta must be positive");
  // -beta/2 j^2 - w j = -beta/2 (j + a)^2 + beta a^2 / 2, a = w / beta
  const cplx a = w / beta;
  auto term = [&](long j) {
    cplx s = double(j) + a;
    return std::exp(-0.5 * beta * s * s);
  };
  long lo_limit = support == Lattice::Half ? 0 : std::numeric_limits<long>::min();
  long peak = std::lround(-a.real());
  if (peak < lo_limit) peak = lo_limit;

  ThetaSum out;
  out.log_factor = 0.5 * beta * a * a;
  cplx sum = term(peak);
  long count = 1;
  double tail = 0.0;
  // walk outward; on each side moduli decrease monotonically once past the peak
  for (int dir : {+1, -1}) {
    long j = peak;
    double prev = std::abs(term(peak));
    while (true) {
      j += dir;
      if (j < lo_limit) break;
      cplx t = term(j);
      double m = std::abs(t);
      sum += t;
      if (++count > ctl.max_terms)
        throw AccuracyError("theta_sum: max_terms exceeded", m / std::abs(sum));
      double dist = std::abs(double(j) + a.real());
      if (m <= ctl.relative_tolerance * std::abs(sum) && m <= prev) {
        // successive modulus ratio is exp(-beta (dist + 1/2)) from here on
        double ratio = std::exp(-beta * (dist + 0.5));
        tail += ratio < 1.0 ? m * ratio / (1.0 - ratio) : m;
        break;
      }
      prev = m;
    }
  }
  out.scaled = sum;
  out.terms = count;
  out.tail_bound = tail / std::abs(sum);
  return out;
}

}  // namespace prodrm::specfun
