#include "prodrm/kernels_limit.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include "prodrm/errors.hpp"
#include "prodrm/specfun.hpp"

namespace prodrm::kernels_limit {

namespace {
constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);
std::atomic<double> g_bulk_bias{0.0};

void check_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive and finite");
}

// log of K_crit summed directly on the beta-lattice
cplx critical_log(double beta, cplx z1, cplx z2, specfun::Lattice lat) {
  const cplx z2b = std::conj(z2);
  const cplx e = -(std::norm(z1) + std::norm(z2) + z1 * z1 + z2b * z2b) / (2.0 * beta);
  auto th = specfun::theta_sum_parts(beta, z1 + z2b, lat);
  return -0.5 * std::log(2.0 * kPi * kPi * kPi * beta) + e + th.log_factor + std::log(th.scaled);
}

cplx dual_log(double beta, cplx z1, cplx z2) {
  DualPoint d = duality_transform(beta, z1, z2);
  const cplx lhs = (z1 - std::conj(z2)) * (z1 - std::conj(z2)) / (4.0 * beta);
  const cplx rhs = (d.z1 - std::conj(d.z2)) * (d.z1 - std::conj(d.z2)) / (4.0 * d.beta);
  return 0.75 * std::log(d.beta / beta) + rhs - lhs + critical_log(d.beta, d.z1, d.z2, specfun::Lattice::Full);
}
}  // namespace

void set_ginibre_bulk_bias(double bias) { g_bulk_bias = bias; }
double ginibre_bulk_bias() { return g_bulk_bias; }

cplx ginibre_bulk(cplx v1, cplx v2) {
  cplx e = -0.5 * (std::norm(v1) + std::norm(v2) - 2.0 * v1 * std::conj(v2));
  return (1.0 + g_bulk_bias.load()) * std::exp(e) / kPi;
}

cplx ginibre_edge(double theta, cplx v1, cplx v2) {
  cplx e = -0.5 * (std::norm(v1) + std::norm(v2) - 2.0 * v1 * std::conj(v2));
  cplx arg = (std::polar(1.0, -theta) * v1 + std::polar(1.0, theta) * std::conj(v2)) / std::sqrt(2.0);
  return std::exp(e) * specfun::erfc(arg) / (2.0 * kPi);
}

cplx critical_bulk(double beta, cplx z1, cplx z2, Representation rep) {
  check_beta(beta);
  bool dual = rep == Representation::Dual || (rep == Representation::Auto && beta < 2.0 * kPi);
  return std::exp(dual ? dual_log(beta, z1, z2) : critical_log(beta, z1, z2, specfun::Lattice::Full));
}

cplx critical_edge(double beta, cplx z1, cplx z2) {
  check_beta(beta);
  return std::exp(critical_log(beta, z1, z2, specfun::Lattice::Half));
}

DualPoint duality_transform(double beta, cplx z1, cplx z2) {
  check_beta(beta);
  const cplx f = 2.0 * kPi * kI / beta;
  return {4.0 * kPi * kPi / beta, -f * z1, f * z2};
}

double duality_residual(double beta, cplx z1, cplx z2) {
  DualPoint d = duality_transform(beta, z1, z2);
  auto side = [](double b, cplx a1, cplx a2) {
    cplx e = (a1 - std::conj(a2)) * (a1 - std::conj(a2)) / (4.0 * b);
    return std::exp(0.75 * std::log(b) + e + critical_log(b, a1, a2, specfun::Lattice::Full));
  };
  cplx l = side(beta, z1, z2);
  cplx r = side(d.beta, d.z1, d.z2);
  return std::abs(l - r) / std::abs(l);
}

double gaussian_limit_density(double v) { return std::exp(-0.5 * v * v) / std::pow(2.0 * kPi, 1.5); }

cplx rescaled_critical(double beta, KernelKind kind, Direction dir, cplx z1, cplx z2) {
  check_beta(beta);
  const double s = std::sqrt(beta);
  cplx k = kind == KernelKind::Bulk ? critical_bulk(beta, s * z1, s * z2) : critical_edge(beta, s * z1, s * z2);
  return (dir == Direction::SmallBeta ? beta : s) * k;
}

cplx crossover_target(KernelKind kind, Direction dir, cplx z1, cplx z2) {
  if (dir == Direction::SmallBeta)
    return kind == KernelKind::Bulk ? ginibre_bulk(z1, z2) : ginibre_edge(0.0, z1, z2);
  const cplx z2b = std::conj(z2);
  return std::exp(-0.5 * (std::norm(z1) + std::norm(z2) + z1 * z1 + z2b * z2b)) / std::sqrt(2.0 * kPi * kPi * kPi);
}

cplx LimitKernel::operator()(cplx v1, cplx v2) const {
  switch (kind) {
    case Kind::GinibreBulk: return ginibre_bulk(v1, v2);
    case Kind::GinibreEdge: return ginibre_edge(theta, v1, v2);
    case Kind::CriticalBulk: return critical_bulk(beta, v1, v2);
    case Kind::CriticalEdge: return critical_edge(beta, v1, v2);
    case Kind::GaussianDensity: return gaussian_limit_density(v1.real());
  }
  return 0.0;
}

std::string LimitKernel::name() const {
  switch (kind) {
    case Kind::GinibreBulk: return "ginibre_bulk";
    case Kind::GinibreEdge: return "ginibre_edge";
    case Kind::CriticalBulk: return "critical_bulk";
    case Kind::CriticalEdge: return "critical_edge";
    case Kind::GaussianDensity: return "gaussian_density";
  }
  return "?";
}

}  // namespace prodrm::kernels_limit
