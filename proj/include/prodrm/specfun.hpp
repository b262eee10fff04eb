#pragma once

#include <complex>

namespace prodrm::specfun {

using cplx = std::complex<double>;

struct SeriesControl {
  double relative_tolerance = 1e-14;
  long max_terms = 10'000'000;
};

// Analytic continuation of log Gamma from the positive axis (the branch
// scipy calls loggamma). For Re z < -50 the imaginary part is only
// defined modulo 2*pi.
cplx log_gamma(cplx z);

double digamma(double x);
double trigamma(double x);

cplx erfc(cplx z);

enum class Lattice { Full, Half };

// Theta sums are kept as exp(log_factor) * scaled so that large |w|
// does not overflow before the caller combines it with its prefactor.
struct ThetaSum {
  cplx scaled;
  cplx log_factor;
  long terms = 0;
  double tail_bound = 0.0;  // relative to |scaled|
  cplx value() const { return std::exp(log_factor) * scaled; }
};

ThetaSum theta_sum_parts(double beta, cplx w, Lattice support,
                         const SeriesControl& ctl = {});

inline cplx theta_sum(double beta, cplx w, Lattice support,
                      const SeriesControl& ctl = {}) {
  return theta_sum_parts(beta, w, support, ctl).value();
}

}  // namespace prodrm::specfun
