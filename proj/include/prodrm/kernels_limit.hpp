#pragma once

#include <complex>
#include <string>

namespace prodrm::kernels_limit {

using cplx = std::complex<double>;

cplx ginibre_bulk(cplx v1, cplx v2);
cplx ginibre_edge(double theta, cplx v1, cplx v2);

// Direct sums the beta-lattice; Dual sums the 4 pi^2 / beta lattice.
// Auto picks Dual below beta = 2 pi.
enum class Representation { Auto, Direct, Dual };

cplx critical_bulk(double beta, cplx z1, cplx z2, Representation rep = Representation::Auto);
cplx critical_edge(double beta, cplx z1, cplx z2);

struct DualPoint {
  double beta;
  cplx z1;
  cplx z2;
};
// beta' = 4 pi^2 / beta, z1' = -(2 pi i / beta) z1, z2' = +(2 pi i / beta) z2.
// Applying it twice gives (beta, -z1, -z2); the bulk kernel is even under that.
DualPoint duality_transform(double beta, cplx z1, cplx z2);

// Relative residual of the duality identity, both sides summed directly.
double duality_residual(double beta, cplx z1, cplx z2);

double gaussian_limit_density(double v);

enum class KernelKind { Bulk, Edge };
enum class Direction { SmallBeta, LargeBeta };

cplx rescaled_critical(double beta, KernelKind kind, Direction dir, cplx z1, cplx z2);
// the beta -> 0 or beta -> infinity limit of rescaled_critical
cplx crossover_target(KernelKind kind, Direction dir, cplx z1, cplx z2);

struct LimitKernel {
  enum class Kind { GinibreBulk, GinibreEdge, CriticalBulk, CriticalEdge, GaussianDensity };
  Kind kind = Kind::GinibreBulk;
  double theta = 0.0;
  double beta = 1.0;

  // GaussianDensity has no two-point form; it reads Re v1 only.
  cplx operator()(cplx v1, cplx v2) const;
  double diagonal(cplx v) const { return (*this)(v, v).real(); }
  std::string name() const;
};

// Multiplies ginibre_bulk by (1 + bias). Verification hook; 0 in normal use.
void set_ginibre_bulk_bias(double bias);
double ginibre_bulk_bias();

}  // namespace prodrm::kernels_limit
