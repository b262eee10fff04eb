#include <doctest.h>

#include <cmath>
#include <numbers>

#include "prodrm/ensembles.hpp"
#include "prodrm/errors.hpp"
#include "prodrm/experiments.hpp"
#include "prodrm/specfun.hpp"

using namespace prodrm;
using doctest::Approx;

namespace {

std::vector<cplx> direct_eigs(const ComplexMatrix& A) {
  Eigen::ComplexEigenSolver<ComplexMatrix> es(A, false);
  std::vector<cplx> out(es.eigenvalues().data(), es.eigenvalues().data() + A.rows());
  std::sort(out.begin(), out.end(), [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
  return out;
}

ComplexMatrix multiply(const FactorChain& c) {
  ComplexMatrix P = ComplexMatrix::Identity(c.n, c.n);
  for (std::size_t i = 0; i < c.factors.size(); ++i)
    P = (c.signature[i] > 0 ? c.factors[i] : ComplexMatrix(c.factors[i].inverse())) * P;
  return P;
}

}  // namespace

TEST_CASE("complex normal normalization") {
  ReplicaStream rng(1, 0);
  double m2 = 0.0, mre = 0.0, mim = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    cplx x = sample_ginibre(1, rng)(0, 0);
    m2 += std::norm(x);
    mre += x.real();
    mim += x.imag();
  }
  CHECK(m2 / n == Approx(1.0).epsilon(0.005));
  CHECK(std::abs(mre / n) < 0.003);
  CHECK(std::abs(mim / n) < 0.003);
  CHECK_THROWS_AS(sample_ginibre(0, rng), DomainError);
}

TEST_CASE("streams are deterministic per (seed, replica)") {
  ReplicaStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  ComplexMatrix A = sample_ginibre(2, a), B = sample_ginibre(2, b), C = sample_ginibre(2, c), D = sample_ginibre(2, d);
  CHECK(A == B);
  CHECK(A != C);
  CHECK(A != D);
}

TEST_CASE("Haar truncations") {
  ReplicaStream rng(3, 0);
  for (int n : {1, 3, 6}) {
    Eigen::JacobiSVD<ComplexMatrix> svd(sample_haar_truncation(n, 0, rng));
    CHECK((svd.singularValues().array() - 1.0).abs().maxCoeff() < 1e-10);
  }
  double tr = 0.0;
  const int reps = 100000;
  for (int i = 0; i < reps; ++i) {
    ComplexMatrix T = sample_haar_truncation(4, 4, rng);
    if (i < 100) CHECK(Eigen::JacobiSVD<ComplexMatrix>(T).singularValues()(0) <= 1.0 + 1e-10);
    tr += T.squaredNorm();
  }
  CHECK(tr / reps == Approx(2.0).epsilon(0.01));
}

TEST_CASE("Haar phases are uniform") {
  // without the diagonal phase fix U(0,0) would be biased towards the positive real axis
  ReplicaStream rng(11, 0);
  cplx mean = 0.0;
  const int reps = 20000;
  for (int i = 0; i < reps; ++i) mean += sample_haar_truncation(3, 0, rng)(0, 0);
  CHECK(std::abs(mean) / reps < 0.02);
}

TEST_CASE("scaled product reproduces the plain product") {
  EnsembleSpec spec{Model::A, 3, 4, 0, 5, 0};
  ReplicaStream rng(spec);
  FactorChain chain = sample_factors(spec, rng);
  ScaledProduct sp = scaled_product(chain);
  const double fn = sp.matrix.norm() / 3.0;
  CHECK(fn >= 1.0 / 256.0);
  CHECK(fn <= 256.0);
  ComplexMatrix P = multiply(chain);
  CHECK((sp.matrix * std::exp(sp.log_scale) - P).norm() / P.norm() < 1e-12);

  auto got = eigenvalues(sp);
  auto want = direct_eigs(P);
  for (int k = 0; k < 3; ++k) {
    cplx z = std::polar(std::exp(got.eigen_log_moduli[k]), got.eigen_phases[k]);
    CHECK(std::abs(z - want[k]) / std::abs(want[k]) < 1e-8);
  }
}

TEST_CASE("single factor: scale and eigenvalues") {
  EnsembleSpec spec{Model::A, 5, 1, 0, 9, 2};
  ReplicaStream rng(spec);
  FactorChain chain = sample_factors(spec, rng);
  ScaledProduct sp = scaled_product(chain);
  CHECK((sp.matrix * std::exp(sp.log_scale) - chain.factors[0]).norm() < 1e-12 * chain.factors[0].norm());
}

TEST_CASE("inverse factors for models C and D") {
  for (Model m : {Model::C, Model::D}) {
    EnsembleSpec spec{m, 3, 2, 2, 17, 0};
    ReplicaStream rng(spec);
    FactorChain chain = sample_factors(spec, rng);
    CHECK(chain.factors.size() == 4);
    ComplexMatrix P = multiply(chain);
    auto got = eigenvalues(chain, EigenMethod::Direct);
    auto per = eigenvalues(chain, EigenMethod::Periodic);
    auto want = direct_eigs(P);
    for (int k = 0; k < 3; ++k) {
      CHECK(got.eigen_log_moduli[k] == Approx(std::log(std::abs(want[k]))).epsilon(1e-9));
      CHECK(per.eigen_log_moduli[k] == Approx(std::log(std::abs(want[k]))).epsilon(1e-9));
    }
  }
}

TEST_CASE("eigenvalues of simple matrices") {
  ScaledProduct id{ComplexMatrix::Identity(3, 3), 0.0};
  auto s = eigenvalues(id);
  REQUIRE(s.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(s.eigen_log_moduli[k]) < 1e-15);
    CHECK(std::abs(s.eigen_phases[k]) < 1e-15);
  }
  ComplexMatrix D = ComplexMatrix::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = cplx(0.0, 0.5);
  auto t = eigenvalues(ScaledProduct{D, std::log(3.0)});
  CHECK(t.eigen_log_moduli[0] == Approx(std::log(6.0)));
  CHECK(t.eigen_log_moduli[1] == Approx(std::log(1.5)));
  CHECK(std::abs(t.eigen_phases[0]) < 1e-15);
  CHECK(t.eigen_phases[1] == Approx(std::numbers::pi / 2));
  ComplexMatrix bad = ComplexMatrix::Identity(2, 2);
  bad(0, 1) = NAN;
  CHECK_THROWS_AS(eigenvalues(ScaledProduct{bad, 0.0}), NumericError);
}

TEST_CASE("random 3x3 eigenvalues are roots of the characteristic polynomial") {
  ReplicaStream rng(21, 0);
  ComplexMatrix A = sample_ginibre(3, rng);
  // coefficients of det(lambda I - A) from traces
  const cplx t1 = A.trace(), t2 = (A * A).trace(), t3 = (A * A * A).trace();
  const cplx c2 = -t1, c1 = 0.5 * (t1 * t1 - t2), c0 = -(t1 * t1 * t1 - 3.0 * t1 * t2 + 2.0 * t3) / 6.0;
  auto s = eigenvalues(ScaledProduct{A, 0.0});
  for (std::size_t k = 0; k < 3; ++k) {
    cplx z = std::polar(std::exp(s.eigen_log_moduli[k]), s.eigen_phases[k]);
    cplx p = ((z + c2) * z + c1) * z + c0;
    CHECK(std::abs(p) < 1e-8 * (1.0 + std::pow(std::abs(z), 3)));
  }
  CHECK(s.eigen_log_moduli[0] >= s.eigen_log_moduli[1]);
  CHECK(s.eigen_log_moduli[1] >= s.eigen_log_moduli[2]);
}

TEST_CASE("unitary closure") {
  for (int N : {1, 4, 16})
    for (int M : {1, 3, 40}) {
      EnsembleSpec spec{Model::B, N, M, 0, 13, 0};
      auto s = sample_spectrum(spec);
      for (double lm : s.eigen_log_moduli) CHECK(std::abs(lm) < 1e-8);
      ReplicaStream rng(spec);
      for (double l : lyapunov_spectrum_qr(spec, rng)) CHECK(std::abs(l) < 1e-10);
    }
}

TEST_CASE("Lyapunov exponents") {
  SUBCASE("scalar case") {
    EnsembleSpec spec{Model::A, 1, 50, 0, 4, 0};
    ReplicaStream rng(spec);
    FactorChain chain = sample_factors(spec, rng);
    double s = 0.0;
    for (const auto& X : chain.factors) s += std::log(std::abs(X(0, 0)));
    CHECK(lyapunov_spectrum_qr(chain)[0] == Approx(s / 50));
  }
  SUBCASE("QR log-diagonal sum equals log |det|") {
    for (int N : {2, 8})
      for (int M : {1, 16, 64}) {
        EnsembleSpec spec{Model::A, N, M, 0, 8, 0};
        ReplicaStream rng(spec);
        FactorChain chain = sample_factors(spec, rng);
        auto lam = lyapunov_spectrum_qr(chain);
        auto s = eigenvalues(chain);
        double a = 0.0, b = 0.0;
        for (int k = 0; k < N; ++k) a += M * lam[k], b += s.eigen_log_moduli[k];
        CHECK(a == Approx(b).epsilon(1e-6));
      }
  }
  SUBCASE("mean top exponent, N=4") {
    EnsembleSpec spec{Model::A, 4, 4000, 0, 77, 0};
    const int reps = 200;
    std::vector<std::vector<double>> lam(4), mu(4);
    for (int r = 0; r < reps; ++r) {
      spec.replica_index = r;
      ReplicaStream rng(spec);
      FactorChain chain = sample_factors(spec, rng);
      auto l = lyapunov_spectrum_qr(chain);
      auto m = stability_exponents(eigenvalues(chain), spec.M);
      for (int k = 0; k < 4; ++k) lam[k].push_back(l[k]), mu[k].push_back(m[k]);
    }
    auto mean = [](const std::vector<double>& x) {
      double s = 0.0;
      for (double v : x) s += v;
      return s / x.size();
    };
    auto se = [&](const std::vector<double>& x) {
      double m = mean(x), s = 0.0;
      for (double v : x) s += (v - m) * (v - m);
      return std::sqrt(s / (x.size() - 1) / x.size());
    };
    CHECK(std::abs(mean(lam[0]) - 0.6280588) <= 3 * se(lam[0]));
    for (int k = 0; k < 4; ++k)
      CHECK(std::abs(mean(lam[k]) - mean(mu[k])) <= 3 * std::hypot(se(lam[k]), se(mu[k])));
  }
  SUBCASE("models C and D are rejected") {
    EnsembleSpec spec{Model::C, 2, 2, 1, 4, 0};
    ReplicaStream rng(spec);
    CHECK_THROWS_AS(lyapunov_spectrum_qr(spec, rng), DomainError);
  }
}

TEST_CASE("stability exponents") {
  SpectrumSample s;
  s.eigen_log_moduli = {0.0, 0.0};
  s.eigen_phases = {0.0, 0.0};
  CHECK(stability_exponents(s, 5) == std::vector<double>{0.0, 0.0});
  s.eigen_log_moduli = {10 * 0.3, 10 * -0.2};
  auto m = stability_exponents(s, 10);
  CHECK(m[0] == Approx(0.3));
  CHECK(m[1] == Approx(-0.2));
  CHECK_THROWS_AS(stability_exponents(s, 0), DomainError);
}

TEST_CASE("periodic Schur agrees with the dense product") {
  for (auto [N, M] : {std::pair{4, 6}, std::pair{6, 3}, std::pair{3, 20}}) {
    EnsembleSpec spec{Model::A, N, M, 0, 31, 0};
    ReplicaStream rng(spec);
    FactorChain chain = sample_factors(spec, rng);
    auto a = eigenvalues(chain, EigenMethod::Direct);
    auto b = eigenvalues(chain, EigenMethod::Periodic);
    for (int k = 0; k < N; ++k) {
      CHECK(a.eigen_log_moduli[k] == Approx(b.eigen_log_moduli[k]).epsilon(1e-8));
      CHECK(std::abs(std::remainder(a.eigen_phases[k] - b.eigen_phases[k], 2 * std::numbers::pi)) < 1e-6);
    }
  }
  // far beyond double range for the dense product
  EnsembleSpec big{Model::A, 4, 4096, 0, 7, 25};
  auto s = sample_spectrum(big, EigenMethod::Periodic);
  for (int k = 0; k < 4; ++k) CHECK(std::isfinite(s.eigen_log_moduli[k]));
  CHECK(s.eigen_log_moduli[0] / 4096 == Approx(0.5 * specfun::digamma(4.0)).epsilon(0.1));
}

TEST_CASE("replica results do not depend on the thread count") {
  EnsembleSpec spec{Model::A, 6, 3, 0, 99, 0};
  auto one = experiments::run_replicas(spec, 12, 1);
  auto four = experiments::run_replicas(spec, 12, 4);
  for (int r = 0; r < 12; ++r) CHECK(one[r].spectrum.eigen_log_moduli == four[r].spectrum.eigen_log_moduli);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS((EnsembleSpec{Model::A, 0, 1, 0, 0, 0}.validate()), DomainError);
  CHECK_THROWS_AS((EnsembleSpec{Model::A, 2, 0, 0, 0, 0}.validate()), DomainError);
  CHECK_THROWS_AS((EnsembleSpec{Model::B, 2, 1, -1, 0, 0}.validate()), DomainError);
  CHECK_THROWS_AS(model_from_string("E"), ConfigError);
}
