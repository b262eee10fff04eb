#include "prodrm/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <complex>
#include <vector>

#define LAPACK_COMPLEX_CPP
#include <lapacke.h>

#include "prodrm/errors.hpp"
#include "prodrm/specfun.hpp"

namespace prodrm {

std::string to_string(Model m) {
  switch (m) {
    case Model::A: return "A";
    case Model::B: return "B";
    case Model::C: return "C";
    case Model::D: return "D";
  }
  return "?";
}

Model model_from_string(const std::string& s) {
  if (s == "A" || s == "a") return Model::A;
  if (s == "B" || s == "b") return Model::B;
  if (s == "C" || s == "c") return Model::C;
  if (s == "D" || s == "d") return Model::D;
  throw ConfigError("unknown model '" + s + "'");
}

void EnsembleSpec::validate() const {
  if (N < 1) throw DomainError("EnsembleSpec: N must be >= 1");
  if (M < 1) throw DomainError("EnsembleSpec: M must be >= 1");
  if (L < 0) throw DomainError("EnsembleSpec: L must be >= 0");
}

ReplicaStream::ReplicaStream(std::uint64_t seed, std::uint64_t replica_index)
    : normal_(0.0, std::sqrt(0.5)) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32),
                    std::uint32_t(replica_index), std::uint32_t(replica_index >> 32)};
  eng_.seed(seq);
}

cplx ReplicaStream::complex_normal() {
  double re = normal_(eng_);
  double im = normal_(eng_);
  return {re, im};
}

ComplexMatrix sample_ginibre(int n, ReplicaStream& rng) {
  if (n < 1) throw DomainError("sample_ginibre: n must be >= 1");
  ComplexMatrix X(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) X(r, c) = rng.complex_normal();
  return X;
}

ComplexMatrix sample_haar_truncation(int n, int l, ReplicaStream& rng) {
  if (n < 1 || l < 0) throw DomainError("sample_haar_truncation: need n >= 1, l >= 0");
  const int m = n + l;
  ComplexMatrix G = sample_ginibre(m, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(G);
  ComplexMatrix Q = qr.householderQ();
  const auto& R = qr.matrixQR();
  for (int k = 0; k < m; ++k) {
    double a = std::abs(R(k, k));
    if (a > 0.0) Q.col(k) *= R(k, k) / a;
  }
  return Q.topLeftCorner(n, n);
}

namespace {

ComplexMatrix forward_factor(const EnsembleSpec& s, ReplicaStream& rng) {
  if (s.model == Model::A || s.model == Model::C) return sample_ginibre(s.N, rng);
  return sample_haar_truncation(s.N, s.L, rng);
}

}  // namespace

FactorChain sample_factors(const EnsembleSpec& spec, ReplicaStream& rng) {
  spec.validate();
  FactorChain ch;
  ch.n = spec.N;
  const bool has_inverse = spec.model == Model::C || spec.model == Model::D;
  const int inv = has_inverse ? spec.L : 0;
  ch.factors.reserve(spec.M + inv);
  for (int i = 0; i < spec.M; ++i) {
    ch.factors.push_back(forward_factor(spec, rng));
    ch.signature.push_back(+1);
  }
  // Y_1..Y_L drawn in that order, stored so that Y_1^{-1} is applied last
  std::vector<ComplexMatrix> ys;
  for (int i = 0; i < inv; ++i) {
    for (int attempt = 0;; ++attempt) {
      ComplexMatrix Y = forward_factor(spec, rng);
      Eigen::PartialPivLU<ComplexMatrix> lu(Y);
      if (lu.rcond() > 1e-13) {
        ys.push_back(std::move(Y));
        break;
      }
      ++ch.resamples;
      if (attempt + 1 >= 8) throw SamplingError("inverse factor singular after 8 attempts");
    }
  }
  for (int i = inv - 1; i >= 0; --i) {
    ch.factors.push_back(std::move(ys[i]));
    ch.signature.push_back(-1);
  }
  return ch;
}

namespace {

void renormalize(ScaledProduct& sp) {
  const double n = double(sp.matrix.rows());
  double f = sp.matrix.norm();
  if (!(f > 0.0) || !std::isfinite(f)) throw NumericError("product became singular or non-finite");
  sp.matrix *= n / f;
  sp.log_scale += std::log(f / n);
}

}  // namespace

ScaledProduct scaled_product(const FactorChain& chain) {
  ScaledProduct sp;
  sp.matrix = ComplexMatrix::Identity(chain.n, chain.n);
  for (std::size_t i = 0; i < chain.factors.size(); ++i) {
    if (chain.signature[i] > 0) {
      sp.matrix = chain.factors[i] * sp.matrix;
    } else {
      sp.matrix = chain.factors[i].partialPivLu().solve(sp.matrix);
    }
    renormalize(sp);
  }
  return sp;
}

ScaledProduct sample_product(const EnsembleSpec& spec, ReplicaStream& rng) {
  return scaled_product(sample_factors(spec, rng));
}

namespace {

SpectrumSample to_sample(std::vector<std::pair<double, double>> ev) {
  std::stable_sort(ev.begin(), ev.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  SpectrumSample s;
  for (auto& [lm, ph] : ev) {
    s.eigen_log_moduli.push_back(lm);
    s.eigen_phases.push_back(ph);
  }
  return s;
}

double wrap_phase(double x) {
  constexpr double pi = std::numbers::pi;
  x = std::remainder(x, 2.0 * pi);
  if (x <= -pi) x += 2.0 * pi;
  return x;
}

}  // namespace

SpectrumSample eigenvalues(const ScaledProduct& sp) {
  if (!sp.matrix.allFinite()) throw NumericError("eigenvalues: non-finite matrix");
  const lapack_int n = lapack_int(sp.matrix.rows());
  ComplexMatrix a = sp.matrix;  // zgeev overwrites its input
  std::vector<cplx> w(std::size_t(std::max<lapack_int>(n, 1)));
  lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n,
                                  reinterpret_cast<lapack_complex_double*>(a.data()), n,
                                  reinterpret_cast<lapack_complex_double*>(w.data()),
                                  nullptr, 1, nullptr, 1);
  if (info != 0)
    throw NumericError("eigenvalues: zgeev failed (info=" + std::to_string(info) +
                       ", n=" + std::to_string(n) + ")");
  std::vector<std::pair<double, double>> ev;
  for (lapack_int k = 0; k < n; ++k) {
    cplx z = w[std::size_t(k)];
    double a = std::abs(z);
    ev.emplace_back(a > 0.0 ? std::log(a) + sp.log_scale : -INFINITY,
                    a > 0.0 ? wrap_phase(std::arg(z)) : 0.0);
  }
  return to_sample(std::move(ev));
}

EigenMethod auto_method(const EnsembleSpec& spec) {
  if (spec.N < 2) return EigenMethod::Periodic;
  int count = spec.M + ((spec.model == Model::C || spec.model == Model::D) ? spec.L : 0);
  // expected log-modulus spread between the largest and smallest eigenvalue
  double spread = 0.5 * count * (specfun::digamma(spec.N) - specfun::digamma(1.0));
  return spread < 18.0 ? EigenMethod::Direct : EigenMethod::Periodic;
}

SpectrumSample eigenvalues(const FactorChain& chain, EigenMethod method) {
  if (method == EigenMethod::Auto) {
    int count = int(chain.factors.size());
    double spread = chain.n < 2 ? 1e9
                                : 0.5 * count * (specfun::digamma(chain.n) - specfun::digamma(1.0));
    method = spread < 18.0 ? EigenMethod::Direct : EigenMethod::Periodic;
  }
  if (method == EigenMethod::Direct) return eigenvalues(scaled_product(chain));
  auto ev = periodic_eigenvalues(chain.factors, chain.signature);
  for (auto& e : ev) e.second = wrap_phase(e.second);
  return to_sample(std::move(ev));
}

SpectrumSample sample_spectrum(const EnsembleSpec& spec, EigenMethod method) {
  ReplicaStream rng(spec);
  return eigenvalues(sample_factors(spec, rng), method);
}

std::vector<double> lyapunov_spectrum_qr(const FactorChain& chain) {
  for (int s : chain.signature)
    if (s < 0) throw DomainError("lyapunov_spectrum_qr: forward products only (models A/B)");
  const int n = chain.n;
  std::vector<double> acc(n, 0.0);
  ComplexMatrix Q = ComplexMatrix::Identity(n, n);
  ComplexMatrix Y(n, n);
  for (const auto& X : chain.factors) {
    Y.noalias() = X * Q;
    Eigen::HouseholderQR<ComplexMatrix> qr(Y);
    for (int k = 0; k < n; ++k) acc[k] += std::log(std::abs(qr.matrixQR()(k, k)));
    Q = qr.householderQ();
  }
  const double M = double(chain.factors.size());
  for (double& a : acc) a /= M;
  std::sort(acc.begin(), acc.end(), std::greater<>());
  return acc;
}

std::vector<double> lyapunov_spectrum_qr(const EnsembleSpec& spec, ReplicaStream& rng) {
  if (spec.model != Model::A && spec.model != Model::B)
    throw DomainError("lyapunov_spectrum_qr: models A/B only");
  return lyapunov_spectrum_qr(sample_factors(spec, rng));
}

std::vector<double> stability_exponents(const SpectrumSample& sample, int M) {
  if (M < 1) throw DomainError("stability_exponents: M must be >= 1");
  std::vector<double> out(sample.eigen_log_moduli);
  for (double& x : out) x /= M;
  return out;
}

}  // namespace prodrm
