// Periodic QR for products F_{p-1}^{s_{p-1}} ... F_0^{s_0} with s_0 = +1.
// Factor 0 is kept upper Hessenberg, all others upper triangular; a unitary
// change of basis in "space k" sits between factors k-1 and k.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "prodrm/ensembles.hpp"
#include "prodrm/errors.hpp"

namespace prodrm {

namespace {

struct Rot {
  cplx g00, g01, g10, g11;
};

const Rot kIdentity{1.0, 0.0, 0.0, 1.0};

// G^H [a; b] = [r; 0]; first column of G is proportional to (a, b)
Rot row_zero(cplx a, cplx b) {
  double n = std::hypot(std::abs(a), std::abs(b));
  if (n == 0.0) return kIdentity;
  return {a / n, -std::conj(b) / n, b / n, std::conj(a) / n};
}

// [x, y] G = [0, r]
Rot col_zero(cplx x, cplx y) {
  double n = std::hypot(std::abs(x), std::abs(y));
  if (n == 0.0) return kIdentity;
  return {y / n, std::conj(x) / n, -x / n, std::conj(y) / n};
}

void rot_rows(ComplexMatrix& A, int j, const Rot& G, int c0, int c1) {
  const cplx h00 = std::conj(G.g00), h01 = std::conj(G.g10);
  const cplx h10 = std::conj(G.g01), h11 = std::conj(G.g11);
  for (int c = c0; c < c1; ++c) {
    cplx a = A(j, c), b = A(j + 1, c);
    A(j, c) = h00 * a + h01 * b;
    A(j + 1, c) = h10 * a + h11 * b;
  }
}

void rot_cols(ComplexMatrix& A, int j, const Rot& G, int r0, int r1) {
  cplx* cj = &A(0, j);
  cplx* cj1 = &A(0, j + 1);
  for (int r = r0; r < r1; ++r) {
    cplx a = cj[r], b = cj1[r];
    cj[r] = a * G.g00 + b * G.g10;
    cj1[r] = a * G.g01 + b * G.g11;
  }
}

class PeriodicQR {
 public:
  PeriodicQR(std::vector<ComplexMatrix> f, const std::vector<int>& sig)
      : A_(std::move(f)), s_(sig), p_(int(A_.size())), n_(int(A_[0].rows())) {}

  std::vector<std::pair<double, double>> run() {
    normalize();
    const std::vector<ComplexMatrix> original = A_;
    reduce(0);
    int passes = graded() ? 2 : 0;
    if (passes > 0) {
      A_ = original;
      reduce(passes);
    }
    while (true) {
      try {
        iterate();
        break;
      } catch (const NumericError&) {
        if (passes >= 128 || p_ == 1) throw;
        passes = std::max(2, passes * 4);
        A_ = original;
        reduce(passes);
      }
    }
    std::vector<std::pair<double, double>> ev(n_);
    for (int k = 0; k < n_; ++k) {
      double lm = scale_, ph = 0.0;
      for (int i = 0; i < p_; ++i) {
        cplx d = A_[i](k, k);
        lm += s_[i] * std::log(std::abs(d));
        ph += s_[i] * std::arg(d);
      }
      ev[k] = {lm, ph};
    }
    return ev;
  }

 private:
  std::vector<ComplexMatrix> A_;
  std::vector<int> s_;
  int p_, n_;
  double scale_ = 0.0;
  int r0_ = 0, r1_ = 0;  // active index range [r0_, r1_)
  double small_ = 0.0;   // backward-stable negligibility threshold for factor 0

  // True when some adjacent eigenvalue moduli differ by more than e^300;
  // estimated from the diagonals after one reduction pass.
  bool graded() const {
    if (p_ == 1 || n_ == 1) return false;
    std::vector<double> est(n_, 0.0);
    for (int i = 0; i < p_; ++i)
      for (int k = 0; k < n_; ++k) est[k] += s_[i] * std::log(std::abs(A_[i](k, k)) + 1e-300);
    std::sort(est.begin(), est.end());
    for (int k = 1; k < n_; ++k)
      if (est[k] - est[k - 1] > 300.0) return true;
    return false;
  }

  void normalize() {
    for (int i = 0; i < p_; ++i) {
      double f = A_[i].norm() / std::sqrt(double(n_));
      if (!(f > 0.0) || !std::isfinite(f)) throw NumericError("periodic QR: degenerate factor");
      A_[i] /= f;
      scale_ += s_[i] * std::log(f);
    }
  }

  // Rotate the basis of space k (input of factor k, output of factor k-1).
  void rotate_space(int k, int j, const Rot& G) {
    k %= p_;
    const int km = (k + p_ - 1) % p_;
    if (s_[k] > 0) rot_cols(A_[k], j, G, r0_, r1_);
    else rot_rows(A_[k], j, G, r0_, r1_);
    if (s_[km] > 0) rot_rows(A_[km], j, G, r0_, r1_);
    else rot_cols(A_[km], j, G, r0_, r1_);
  }

  // Restore the triangular factor i after fill at (j+1, j) introduced through
  // its input (from_input) or output space; fix through the other space.
  void fix_input_side(int i, int j) {
    auto& T = A_[i];
    Rot G = s_[i] > 0 ? col_zero(T(j + 1, j), T(j + 1, j + 1)) : row_zero(T(j, j), T(j + 1, j));
    rotate_space(i, j, G);
    T(j + 1, j) = 0.0;
  }
  void fix_output_side(int i, int j) {
    auto& T = A_[i];
    Rot G = s_[i] > 0 ? row_zero(T(j, j), T(j + 1, j)) : col_zero(T(j + 1, j), T(j + 1, j + 1));
    rotate_space(i + 1, j, G);
    T(j + 1, j) = 0.0;
  }

  // Orthogonal iteration on the product, carried out factor by factor with
  // QR steps (the Lyapunov recurrence). Afterwards factors 1..p-1 are
  // triangular and factor 0 is W R_0 with W close to diagonal wherever the
  // eigenvalue moduli are well separated. Without this, steps of the shifted
  // iteration stall when moduli ratios underflow.
  void reduce(int passes) {
    if (p_ > 1) {
      std::vector<Eigen::PartialPivLU<ComplexMatrix>> lu(p_);
      for (int i = 1; i < p_; ++i)
        if (s_[i] < 0) lu[i].compute(A_[i]);
      ComplexMatrix U1 = ComplexMatrix::Identity(n_, n_);
      std::vector<ComplexMatrix> T(p_);
      for (int pass = 0; pass <= passes; ++pass) {
        const bool last = pass == passes;
        ComplexMatrix U = U1;
        for (int i = 1; i < p_; ++i) {
          ComplexMatrix Y = s_[i] > 0 ? ComplexMatrix(A_[i] * U) : ComplexMatrix(lu[i].solve(U));
          Eigen::HouseholderQR<ComplexMatrix> qr(Y);
          ComplexMatrix Unext = qr.householderQ();
          if (last) {
            if (s_[i] > 0) T[i] = qr.matrixQR().triangularView<Eigen::Upper>();
            else T[i] = U.adjoint() * A_[i] * Unext;
            T[i].triangularView<Eigen::StrictlyLower>().setZero();
          }
          U = std::move(Unext);
        }
        if (last) {
          T[0] = U1.adjoint() * A_[0] * U;
        } else {
          Eigen::HouseholderQR<ComplexMatrix> qr(A_[0] * U);
          U1 = qr.householderQ();
        }
      }
      A_ = std::move(T);
    }
    // Hessenberg form of factor 0 by Givens rotations. Rounding-level entries
    // are dropped first; rotating on them would mix strongly graded directions.
    r0_ = 0;
    r1_ = n_;
    auto& H = A_[0];
    small_ = 64.0 * std::numeric_limits<double>::epsilon() * H.norm();
    for (int c = 0; c < n_; ++c)
      for (int r = c + 1; r < n_; ++r)
        if (std::abs(H(r, c)) <= small_) H(r, c) = 0.0;
    for (int c = 0; c + 2 < n_; ++c) {
      for (int r = n_ - 1; r >= c + 2; --r) {
        if (H(r, c) == 0.0) continue;
        Rot G = row_zero(H(r - 1, c), H(r, c));
        rotate_space(1, r - 1, G);
        H(r, c) = 0.0;
        for (int i = 1; i < p_; ++i) fix_output_side(i, r - 1);
      }
    }
  }

  // x <- (2x2 diagonal block of factor i at j)^{s_i} x
  void triangular_block_apply(int i, int j, cplx& x0, cplx& x1) const {
    const auto& T = A_[i];
    cplx a = T(j, j), b = T(j, j + 1), d = T(j + 1, j + 1);
    if (s_[i] > 0) {
      x0 = a * x0 + b * x1;
      x1 = d * x1;
    } else {
      x0 = (x0 - b * x1 / d) / a;
      x1 = x1 / d;
    }
  }

  // Bottom 2x2 block of the product as C * exp(log_scale).
  void trailing_block(int j, cplx C[2][2], double& log_scale) const {
    const auto& H = A_[0];
    C[0][0] = H(j, j);
    C[0][1] = H(j, j + 1);
    C[1][0] = H(j + 1, j);
    C[1][1] = H(j + 1, j + 1);
    log_scale = 0.0;
    for (int i = 1; i < p_; ++i) {
      for (int col = 0; col < 2; ++col) {
        cplx x0 = C[0][col], x1 = C[1][col];
        triangular_block_apply(i, j, x0, x1);
        C[0][col] = x0;
        C[1][col] = x1;
      }
      double m = std::max({std::abs(C[0][0]), std::abs(C[0][1]), std::abs(C[1][0]), std::abs(C[1][1])});
      if (m > 0.0 && std::isfinite(m)) {
        for (auto& row : {0, 1})
          for (auto& col : {0, 1}) C[row][col] /= m;
        log_scale += std::log(m);
      }
    }
  }

  void sweep(int lo, int hi, bool exceptional, int iter) {
    r0_ = lo;
    r1_ = hi + 1;
    auto& H = A_[0];
    // shift from the trailing 2x2 block of the product
    cplx C[2][2];
    double ls;
    trailing_block(hi - 1, C, ls);
    cplx mu;
    if (exceptional) {
      double ang = 0.7 + 1.3 * iter;
      mu = (std::abs(C[1][1]) + std::abs(C[1][0])) * std::polar(1.0, ang);
    } else {
      cplx tr = C[0][0] + C[1][1];
      cplx det = C[0][0] * C[1][1] - C[0][1] * C[1][0];
      cplx disc = std::sqrt(tr * tr / 4.0 - det);
      cplx m1 = tr / 2.0 + disc, m2 = tr / 2.0 - disc;
      mu = std::abs(m1 - C[1][1]) < std::abs(m2 - C[1][1]) ? m1 : m2;
      // strongly graded block: the small eigenvalue is not resolved, and an
      // unshifted step already converges at that ratio
      double a1 = std::abs(m1), a2 = std::abs(m2);
      if (std::min(a1, a2) < 1e-6 * std::max(a1, a2)) mu = 0.0;
    }
    // first column of the product at lo, lo+1
    cplx x0 = H(lo, lo), x1 = H(lo + 1, lo);
    double lx = 0.0;
    for (int i = 1; i < p_; ++i) {
      triangular_block_apply(i, lo, x0, x1);
      double m = std::max(std::abs(x0), std::abs(x1));
      if (m > 0.0 && std::isfinite(m)) {
        x0 /= m;
        x1 /= m;
        lx += std::log(m);
      }
    }
    double d = lx - ls;
    cplx y0, y1;
    if (d <= 0.0) {
      double e = d < -700.0 ? 0.0 : std::exp(d);
      y0 = x0 * e - mu;
      y1 = x1 * e;
    } else {
      double e = d > 700.0 ? 0.0 : std::exp(-d);
      y0 = x0 - mu * e;
      y1 = x1;
    }
    Rot G0 = row_zero(y0, y1);
    rotate_space(0, lo, G0);
    for (int i = p_ - 1; i >= 1; --i) fix_input_side(i, lo);
    // chase the bulge in factor 0 down the block
    for (int j = lo; j + 2 <= hi; ++j) {
      Rot G = row_zero(H(j + 1, j), H(j + 2, j));
      rotate_space(1, j + 1, G);
      H(j + 2, j) = 0.0;
      for (int i = 1; i < p_; ++i) fix_output_side(i, j + 1);
    }
  }

  // Once the product is triangular to far below rounding at (l, l-1), shifted
  // steps no longer move H(l, l-1); dropping it is a small relative
  // perturbation of factor 0.
  bool graded_negligible(int l, double sub) const {
    const auto& H = A_[0];
    if (sub > 1e-10 * std::min(std::abs(H(l, l)), std::abs(H(l - 1, l - 1)))) return false;
    double gap = 0.0;
    for (int i = 0; i < p_; ++i)
      gap += s_[i] * (std::log(std::abs(A_[i](l - 1, l - 1))) - std::log(std::abs(A_[i](l, l))));
    return std::abs(gap) > 40.0;
  }

  void iterate() {
    auto& H = A_[0];
    const double eps = std::numeric_limits<double>::epsilon();
    int hi = n_ - 1;
    int iter = 0, total = 0;
    const int max_total = 40 * std::max(n_, 1);
    while (hi > 0) {
      int l = hi;
      while (l > 0) {
        double sub = std::abs(H(l, l - 1));
        double ref = std::abs(H(l, l)) + std::abs(H(l - 1, l - 1));
        if (sub <= eps * ref || sub <= small_ || graded_negligible(l, sub)) {
          H(l, l - 1) = 0.0;
          break;
        }
        --l;
      }
      if (l == hi) {
        --hi;
        iter = 0;
        continue;
      }
      ++iter;
      ++total;
      if (total > max_total)
        throw NumericError("periodic QR did not converge: n=" + std::to_string(n_) +
                           " p=" + std::to_string(p_) + " active block [" + std::to_string(l) +
                           "," + std::to_string(hi) + "]");
      sweep(l, hi, iter % 11 == 10, iter);
    }
  }
};

}  // namespace

std::vector<std::pair<double, double>> periodic_eigenvalues(std::vector<ComplexMatrix> factors,
                                                            const std::vector<int>& signature) {
  if (factors.empty()) throw DomainError("periodic_eigenvalues: no factors");
  if (signature.size() != factors.size()) throw DomainError("periodic_eigenvalues: signature size");
  if (signature[0] != 1) throw DomainError("periodic_eigenvalues: first factor must be forward");
  for (auto& f : factors)
    if (!f.allFinite()) throw NumericError("periodic_eigenvalues: non-finite factor");
  return PeriodicQR(std::move(factors), signature).run();
}

}  // namespace prodrm
