#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "prodrm/errors.hpp"
#include "prodrm/kernels_exact.hpp"
#include "prodrm/scalings.hpp"
#include "prodrm/specfun.hpp"

using namespace prodrm;
using namespace prodrm::scalings;
namespace ke = prodrm::kernels_exact;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

RegimeSpec make(Model m, int M, int N, int L, Regime r) {
  RegimeSpec s;
  s.model = m;
  s.M = M;
  s.N = N;
  s.L = L;
  s.regime = r;
  return s;
}

// R1 pulled back to chart coordinates
double exact_density(const LocalChart& ch, const ke::ExactKernelSpec& ks, cplx v) {
  auto z = ch.forward(v);
  ke::LogComplex lz{z.log_modulus, z.phase};
  return std::exp(ch.log_jacobian({v, 0.0}) + ke::kernel_log(ks, lz, lz).log_modulus);
}

bool contains(const std::vector<LocalPoint>& pts, cplx v, double tol) {
  return std::any_of(pts.begin(), pts.end(), [&](const LocalPoint& p) { return std::abs(p.v - v) < tol; });
}

SpectrumSample synthetic(const LocalChart& ch, const std::vector<cplx>& vs) {
  SpectrumSample s;
  for (cplx v : vs) {
    auto z = ch.forward(v);
    s.eigen_log_moduli.push_back(z.log_modulus);
    s.eigen_phases.push_back(z.phase);
  }
  return s;
}
}  // namespace

TEST_CASE("supercritical model A chart") {
  auto s = make(Model::A, 1024, 4, 0, Regime::Supercritical);
  s.k = 1;
  auto ch = LocalChart::make(s);
  CHECK(ch.rho() == Approx(1.8770515).epsilon(1e-7));
  CHECK(ch.forward(LocalPoint{0.0, 0.0}).log_modulus == Approx(1024 * 0.6280588).epsilon(1e-7));
  CHECK(ch.forward(LocalPoint{0.0, 0.0}).log_modulus == Approx(512 * specfun::digamma(4.0)).epsilon(1e-14));
  CHECK(ch.predicted().kind == kernels_limit::LimitKernel::Kind::GaussianDensity);
  auto z = ch.forward(LocalPoint{1.0, 0.0});
  const double slope = std::sqrt(1024.0) / (ch.rho() * 2.0);
  CHECK(z.log_modulus - ch.forward(LocalPoint{0.0, 0.0}).log_modulus == Approx(slope));
  CHECK(ch.unfold_prefactor({z}) == Approx(std::log(slope) + 2 * z.log_modulus));
}

TEST_CASE("supercritical models B and C") {
  auto b = make(Model::B, 100, 4, 4, Regime::Supercritical);
  b.k = 2;
  auto cb = LocalChart::make(b);
  using specfun::digamma;
  using specfun::trigamma;
  CHECK(cb.center() == Approx(50 * (digamma(3.0) - digamma(7.0))));
  CHECK(cb.rho() == Approx(2.0 / std::sqrt(4 * (trigamma(3.0) - trigamma(7.0)))));
  auto c = make(Model::C, 100, 4, 3, Regime::Supercritical);
  c.k = 2;
  auto cc = LocalChart::make(c);
  CHECK(cc.center() == Approx(0.5 * (100 * digamma(3.0) - 3 * digamma(2.0))));
  CHECK(cc.rho() == Approx(2.0 / std::sqrt(100 * trigamma(3.0) + 3 * trigamma(2.0))));
}

TEST_CASE("critical and subcritical model A charts") {
  auto c = make(Model::A, 16, 16, 0, Regime::Critical);
  c.q = 0.0;
  auto cc = LocalChart::make(c);
  // |u_N| = 1: the shifted origin lands on |z| = sqrt(N)^M
  auto z = cc.forward(cplx(0.25, 0.0));
  CHECK(z.log_modulus == Approx(8 * std::log(16.0)).epsilon(1e-14));
  CHECK(cc.predicted().kind == kernels_limit::LimitKernel::Kind::CriticalEdge);
  CHECK(cc.beta() == Approx(1.0));

  c.q = 0.5;
  auto half = LocalChart::make(c);
  CHECK(half.beta() == Approx(2.0));
  CHECK(half.predicted().kind == kernels_limit::LimitKernel::Kind::CriticalBulk);

  auto s = make(Model::A, 3, 16, 0, Regime::Subcritical);
  s.u = cplx(1.0, 0.0);
  auto sc = LocalChart::make(s);
  auto z0 = sc.forward(cplx(0.0));
  CHECK(z0.log_modulus == Approx(1.5 * std::log(16.0)));
  CHECK(std::abs(z0.phase) < 1e-15);
  CHECK(sc.predicted().kind == kernels_limit::LimitKernel::Kind::GinibreEdge);
  s.u = cplx(0.5, 0.0);
  CHECK(LocalChart::make(s).predicted().kind == kernels_limit::LimitKernel::Kind::GinibreBulk);
}

TEST_CASE("model B and C critical beta") {
  auto b = make(Model::B, 8, 16, 16, Regime::Critical);
  b.q = 0.25;
  const double g = 0.5, t = 1.0, q = 0.25;
  CHECK(LocalChart::make(b).beta() == Approx(g * t / ((1 - q) * (1 - q + t))));
  auto c = make(Model::C, 8, 16, 4, Regime::Critical);
  c.q = 0.25;
  CHECK(LocalChart::make(c).beta() == Approx(0.5 / 0.75 + 0.25 / 0.25));
}

TEST_CASE("unfolding prefactors") {
  auto c = make(Model::A, 4, 4, 0, Regime::Critical);
  c.q = 0.5;
  CHECK(LocalChart::make(c).unfold_prefactor({GlobalPoint{0.0, 0.3}}) == 0.0);
  auto s = make(Model::A, 2, 16, 0, Regime::Subcritical);
  s.u = cplx(0.3, 0.4);
  auto sc = LocalChart::make(s);
  GlobalPoint a{1.5, 0.1}, b{-0.5, 2.0};
  CHECK(sc.unfold_prefactor({a, b}) == Approx(2 * std::log(2.0 / (16 * 0.25)) + 2 * (1.5 - 0.5)));
}

TEST_CASE("pullback inverts forward") {
  SUBCASE("M = 1") {
    auto s = make(Model::A, 1, 9, 0, Regime::Subcritical);
    s.u = cplx(0.2, 0.5);
    auto ch = LocalChart::make(s);
    for (cplx v : {cplx(0.0), cplx(0.4, -1.1), cplx(-2.0, 2.0)}) {
      auto pts = ch.pullback(synthetic(ch, {v}));
      REQUIRE(pts.size() == 1);
      CHECK(std::abs(pts[0].v - v) < 1e-12);
    }
  }
  SUBCASE("M = 4 fixed point") {
    auto s = make(Model::A, 4, 6, 0, Regime::Critical);
    s.q = 0.5;
    auto ch = LocalChart::make(s);
    const cplx v0(0.7, -0.3);
    auto pts = ch.pullback(synthetic(ch, {v0}));
    CHECK(pts.size() <= 4);
    CHECK(contains(pts, v0, 1e-10));
  }
  SUBCASE("grid round trip, M = 8, N = 16") {
    for (Regime r : {Regime::Critical, Regime::Subcritical}) {
      auto s = make(Model::A, 8, 16, 0, r);
      if (r == Regime::Critical) s.q = 0.5;
      else s.u = cplx(0.6, 0.0);
      auto ch = LocalChart::make(s);
      std::vector<cplx> grid;
      for (double x = -2.0; x <= 2.0; x += 0.5)
        for (double y = -2.0; y <= 2.0; y += 0.5) grid.emplace_back(x, y);
      auto pts = ch.pullback(synthetic(ch, grid));
      for (cplx v : grid) CHECK(contains(pts, v, 1e-8));
      // any extra branch must also map onto one of the inputs
      for (const auto& p : pts) {
        auto z = ch.forward(p.v);
        bool hit = false;
        for (cplx v : grid) {
          auto w = ch.forward(v);
          hit = hit || (std::abs(z.log_modulus - w.log_modulus) < 1e-8 &&
                        std::abs(std::remainder(z.phase - w.phase, 2 * kPi)) < 1e-8);
        }
        CHECK(hit);
      }
    }
  }
  SUBCASE("supercritical") {
    auto s = make(Model::A, 256, 4, 0, Regime::Supercritical);
    s.k = 2;
    auto ch = LocalChart::make(s);
    auto pts = ch.pullback(synthetic(ch, {cplx(1.25), cplx(-0.5), cplx(7.0)}));
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].v.real() == Approx(1.25));
    CHECK(pts[1].v.real() == Approx(-0.5));
    CHECK(ch.radial_coordinate(ch.forward(LocalPoint{0.8, 0.0}).log_modulus) == Approx(0.8));
  }
}

TEST_CASE("band measure agrees with the Jacobian") {
  auto s = make(Model::A, 3, 32, 0, Regime::Subcritical);
  s.u = cplx(0.5, 0.0);
  auto ch = LocalChart::make(s);
  // area of the annulus in z, divided over M branches, per unit density in v
  const double x0 = -0.5, x1 = 0.5;
  double num = 0.0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const double x = x0 + (i + 0.5) * (x1 - x0) / n;
    const double r = std::abs(ch.c0()) + x * std::abs(ch.c1());
    num += 2 * kPi * r * (x1 - x0) / n / std::abs(ch.c1());
  }
  CHECK(ch.band_measure(x0, x1) * ch.power() == Approx(num).epsilon(1e-6));
}

TEST_CASE("exact kernels converge to the Ginibre bulk in the chart") {
  auto s = make(Model::A, 1, 256, 0, Regime::Subcritical);
  s.u = cplx(0.5, 0.0);
  auto ch = LocalChart::make(s);
  ke::ExactKernelSpec ks;
  ks.N = 256;
  double sup = 0.0;
  for (double x = -1.0; x <= 1.0; x += 0.25)
    for (double y = -1.0; y <= 1.0; y += 0.25)
      if (std::hypot(x, y) <= 1.0) sup = std::max(sup, std::abs(exact_density(ch, ks, {x, y}) * kPi - 1.0));
  CHECK(sup <= 0.03);
}

TEST_CASE("exact kernels approach the edge profile") {
  // The finite-N correction to the erfc profile is relative O(N^{-1/2}) and
  // grows in the outer tail, so the 5% pointwise bound holds where the
  // density is not yet exponentially small; past that, only convergence in N
  // is checked.
  auto rel = [](int N, double lo, double hi) {
    auto s = make(Model::A, 1, N, 0, Regime::Subcritical);
    s.u = cplx(1.0, 0.0);
    auto ch = LocalChart::make(s);
    ke::ExactKernelSpec ks;
    ks.N = N;
    double w = 0.0;
    for (double x = lo; x <= hi + 1e-12; x += 0.125)
      w = std::max(w, std::abs(exact_density(ch, ks, x) / ch.predicted().diagonal(x) - 1.0));
    return w;
  };
  CHECK(rel(256, -2.0, 1.0) <= 0.05);
  const double t64 = rel(64, -2.0, 2.0), t256 = rel(256, -2.0, 2.0);
  CHECK(t256 < 0.6 * t64);
}

TEST_CASE("exact kernels match the critical bulk kernel") {
  auto s = make(Model::A, 48, 48, 0, Regime::Critical);
  s.q = 0.5;
  auto ch = LocalChart::make(s);
  ke::ExactKernelSpec ks;
  ks.M = 48;
  ks.N = 48;
  double sup = 0.0;
  for (double x = -1.0; x <= 1.0; x += 0.25)
    for (double y = -1.0; y <= 1.0; y += 0.25)
      if (std::hypot(x, y) <= 1.0) {
        const cplx v(x, y);
        sup = std::max(sup, std::abs(exact_density(ch, ks, v) / ch.predicted().diagonal(v) - 1.0));
      }
  CHECK(sup <= 0.10);
}

TEST_CASE("regime validation") {
  auto s = make(Model::A, 4, 4, 0, Regime::Critical);
  CHECK_THROWS_AS(LocalChart::make(s), ConfigError);
  s.q = 0.5;
  s.k = 1;
  CHECK_THROWS_AS(LocalChart::make(s), ConfigError);
  auto c = make(Model::C, 4, 4, 2, Regime::Critical);
  c.q = 0.0;
  CHECK_THROWS_AS(LocalChart::make(c), DomainError);
  auto k = make(Model::A, 4, 4, 0, Regime::Supercritical);
  k.k = 5;
  CHECK_THROWS_AS(LocalChart::make(k), DomainError);
  CHECK_THROWS_AS(regime_from_string("hyper"), ConfigError);
  CHECK(regime_from_string(to_string(Regime::Subcritical)) == Regime::Subcritical);
}
