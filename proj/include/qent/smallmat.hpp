#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <utility>

#include "qent/errors.hpp"

namespace qent {

using cplx = std::complex<double>;

inline constexpr double kHermitianTol = 1e-9;    // max deviation ‖m - m†‖_max
inline constexpr double kEigClipTol = 1e-10;     // negative eigenvalues above this are rounding
inline constexpr double kJacobiOffTol = 1e-13;   // off-diagonal Frobenius norm at convergence
inline constexpr int kJacobiMaxSweeps = 100;

/// Dense complex square matrix at a fixed small size (2, 3 or 4).
/// Row-major storage, value semantics.
template <int N>
class CMat {
  static_assert(N >= 2 && N <= 4);

 public:
  CMat() : e_{} {}

  static CMat identity() {
    CMat m;
    for (int i = 0; i < N; ++i) m(i, i) = 1.0;
    return m;
  }

  cplx& operator()(int r, int c) { return e_[static_cast<std::size_t>(r) * N + c]; }
  const cplx& operator()(int r, int c) const { return e_[static_cast<std::size_t>(r) * N + c]; }

  CMat& operator+=(const CMat& o) {
    for (std::size_t k = 0; k < e_.size(); ++k) e_[k] += o.e_[k];
    return *this;
  }
  CMat& operator-=(const CMat& o) {
    for (std::size_t k = 0; k < e_.size(); ++k) e_[k] -= o.e_[k];
    return *this;
  }
  CMat& operator*=(cplx z) {
    for (auto& e : e_) e *= z;
    return *this;
  }

  friend CMat operator+(CMat a, const CMat& b) { return a += b; }
  friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
  friend CMat operator*(cplx z, CMat a) { return a *= z; }
  friend CMat operator*(CMat a, cplx z) { return a *= z; }

  friend CMat operator*(const CMat& a, const CMat& b) {
    CMat r;
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < N; ++k) {
        const cplx aik = a(i, k);
        for (int j = 0; j < N; ++j) r(i, j) += aik * b(k, j);
      }
    return r;
  }

  CMat adjoint() const {
    CMat r;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) r(i, j) = std::conj((*this)(j, i));
    return r;
  }

  CMat conjugate() const {
    CMat r;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) r(i, j) = std::conj((*this)(i, j));
    return r;
  }

  CMat transpose() const {
    CMat r;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  cplx trace() const {
    cplx t = 0.0;
    for (int i = 0; i < N; ++i) t += (*this)(i, i);
    return t;
  }

  /// ‖·‖_max over entries.
  double max_abs() const {
    double m = 0.0;
    for (const auto& e : e_) m = std::max(m, std::abs(e));
    return m;
  }

  /// max_ij |a_ij - conj(a_ji)|
  double hermiticity_defect() const {
    double d = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j)
        d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return d;
  }

  bool all_finite() const {
    for (const auto& e : e_)
      if (!std::isfinite(e.real()) || !std::isfinite(e.imag())) return false;
    return true;
  }

 private:
  std::array<cplx, static_cast<std::size_t>(N) * N> e_;
};

using CMat2 = CMat<2>;
using CMat3 = CMat<3>;
using CMat4 = CMat<4>;

template <int N>
double max_abs_diff(const CMat<N>& a, const CMat<N>& b) {
  return (a - b).max_abs();
}

/// Kronecker product of two 2x2 blocks into a 4x4 matrix,
/// index convention out(2i+k, 2j+l) = a(i,j) * b(k,l).
inline CMat4 kron(const CMat2& a, const CMat2& b) {
  CMat4 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) r(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return r;
}

// ---------------------------------------------------------------------------
// Real 3-vectors and 3x3 matrices (Bloch vectors and correlation matrices).

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline Vec3 scaled(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

inline Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  if (n == 0.0) throw ZeroVectorError("cannot normalize a zero 3-vector");
  return scaled(a, 1.0 / n);
}

/// Real 3x3 matrix, row-major.
class Mat3 {
 public:
  Mat3() : e_{} {}

  static Mat3 identity() {
    Mat3 m;
    m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
    return m;
  }

  double& operator()(int r, int c) { return e_[static_cast<std::size_t>(r) * 3 + c]; }
  const double& operator()(int r, int c) const { return e_[static_cast<std::size_t>(r) * 3 + c]; }

  Mat3 transpose() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  double max_abs() const {
    double m = 0.0;
    for (double e : e_) m = std::max(m, std::abs(e));
    return m;
  }

  double sum_sq() const {
    double s = 0.0;
    for (double e : e_) s += e * e;
    return s;
  }

  friend Vec3 operator*(const Mat3& m, const Vec3& v) {
    Vec3 r{};
    for (int i = 0; i < 3; ++i) r[i] = m(i, 0) * v[0] + m(i, 1) * v[1] + m(i, 2) * v[2];
    return r;
  }

 private:
  std::array<double, 9> e_;
};

/// Real symmetric 3x3 matrix; entries (i,j) and (j,i) are equal exactly
/// because both are written from the same computed value.
class SymMat3 {
 public:
  SymMat3() : e_{} {}

  /// Gram matrix mᵀm (positive semidefinite).
  static SymMat3 gram(const Mat3& m) {
    SymMat3 g;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += m(k, i) * m(k, j);
        g.set(i, j, s);
      }
    return g;
  }

  static SymMat3 symmetrized(const Mat3& m) {
    SymMat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) r.set(i, j, 0.5 * (m(i, j) + m(j, i)));
    return r;
  }

  static SymMat3 diagonal(double a, double b, double c) {
    SymMat3 r;
    r.set(0, 0, a);
    r.set(1, 1, b);
    r.set(2, 2, c);
    return r;
  }

  const double& operator()(int r, int c) const { return e_[static_cast<std::size_t>(r) * 3 + c]; }

  void set(int r, int c, double v) {
    e_[static_cast<std::size_t>(r) * 3 + c] = v;
    e_[static_cast<std::size_t>(c) * 3 + r] = v;
  }

  double trace() const { return e_[0] + e_[4] + e_[8]; }

 private:
  std::array<double, 9> e_;
};

// ---------------------------------------------------------------------------
// Eigendecomposition.

/// Eigenvalues (descending) with orthonormal eigenvectors as matrix columns;
/// column i pairs with eigenvalues[i].
template <int N>
struct Spectrum {
  std::array<double, N> eigenvalues;
  CMat<N> eigenvectors;

  std::array<cplx, N> eigenvector(int i) const {
    std::array<cplx, N> v;
    for (int r = 0; r < N; ++r) v[r] = eigenvectors(r, i);
    return v;
  }
};

/// Spectrum of a real symmetric 3x3 matrix; eigenvectors are real columns.
struct SymSpectrum3 {
  std::array<double, 3> eigenvalues;  // descending
  Mat3 eigenvectors;

  Vec3 eigenvector(int i) const {
    return {eigenvectors(0, i), eigenvectors(1, i), eigenvectors(2, i)};
  }
};

namespace detail {

template <int N>
double off_diagonal_norm(const CMat<N>& a) {
  double s = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

/// One cyclic Jacobi rotation zeroing the (p,q) entry of the Hermitian
/// working matrix `a`, accumulating the unitary into `v` (columns).
///
/// The complex rotation is a diagonal phase times a real Givens rotation:
/// with a(p,q) = g·e^{iφ}, the 2x2 unitary
///   u = [ c        s      ]
///       [-s·w      c·w    ],  w = e^{-iφ} computed as conj(a_pq)/|a_pq|,
/// diagonalizes the (p,q) block exactly (Golub & Van Loan sect. 8.4 form).
template <int N>
void jacobi_rotate(CMat<N>& a, CMat<N>& v, int p, int q) {
  const cplx apq = a(p, q);
  const double g = std::abs(apq);
  if (g == 0.0) return;
  const cplx w = std::conj(apq) / g;  // unit modulus, exact -1 for negative reals

  const double alpha = a(p, p).real();
  const double beta = a(q, q).real();
  const double theta = (beta - alpha) / (2.0 * g);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  const cplx upp = c, upq = s;
  const cplx uqp = -s * w, uqq = c * w;

  // Rows p,q from the left by u†.
  for (int j = 0; j < N; ++j) {
    if (j == p || j == q) continue;
    const cplx apj = a(p, j), aqj = a(q, j);
    a(p, j) = std::conj(upp) * apj + std::conj(uqp) * aqj;
    a(q, j) = std::conj(upq) * apj + std::conj(uqq) * aqj;
  }
  // Columns p,q from the right by u.
  for (int i = 0; i < N; ++i) {
    if (i == p || i == q) continue;
    const cplx aip = a(i, p), aiq = a(i, q);
    a(i, p) = aip * upp + aiq * uqp;
    a(i, q) = aip * upq + aiq * uqq;
  }
  // The 2x2 block in closed form.
  a(p, p) = alpha - t * g;
  a(q, q) = beta + t * g;
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  for (int i = 0; i < N; ++i) {
    const cplx vip = v(i, p), viq = v(i, q);
    v(i, p) = vip * upp + viq * uqp;
    v(i, q) = vip * upq + viq * uqq;
  }
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Requires ‖m - m†‖_max <= 1e-9; works on the symmetrized (m+m†)/2.
/// Converged when the off-diagonal Frobenius norm drops below 1e-13,
/// within a hard cap of 100 sweeps.
template <int N>
Spectrum<N> eig_hermitian(const CMat<N>& m) {
  const double defect = m.hermiticity_defect();
  if (!(defect <= kHermitianTol)) {
    std::ostringstream os;
    os << "eig_hermitian: input is not Hermitian, max |m - m†| = " << defect;
    throw NotHermitianError(os.str());
  }

  CMat<N> a;
  for (int i = 0; i < N; ++i) {
    a(i, i) = m(i, i).real();
    for (int j = i + 1; j < N; ++j) {
      const cplx z = 0.5 * (m(i, j) + std::conj(m(j, i)));
      a(i, j) = z;
      a(j, i) = std::conj(z);
    }
  }

  CMat<N> v = CMat<N>::identity();
  bool converged = false;
  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    if (detail::off_diagonal_norm(a) < kJacobiOffTol) {
      converged = true;
      break;
    }
    for (int p = 0; p < N; ++p)
      for (int q = p + 1; q < N; ++q) detail::jacobi_rotate(a, v, p, q);
  }
  if (!converged && !(detail::off_diagonal_norm(a) < kJacobiOffTol)) {
    std::ostringstream os;
    os << "eig_hermitian: no convergence after " << kJacobiMaxSweeps
       << " sweeps, off-diagonal norm = " << detail::off_diagonal_norm(a);
    throw NoConvergenceError(os.str());
  }

  std::array<int, N> order;
  for (int i = 0; i < N; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&a](int x, int y) { return a(x, x).real() > a(y, y).real(); });

  Spectrum<N> out;
  for (int i = 0; i < N; ++i) {
    out.eigenvalues[i] = a(order[i], order[i]).real();
    for (int r = 0; r < N; ++r) out.eigenvectors(r, i) = v(r, order[i]);
  }
  return out;
}

/// Eigendecomposition of a real symmetric 3x3 matrix. Reuses the Hermitian
/// Jacobi kernel; all rotations stay real so the eigenvectors are real.
inline SymSpectrum3 eig_sym3(const SymMat3& m) {
  CMat3 c;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) = m(i, j);
  const Spectrum<3> s = eig_hermitian(c);

  SymSpectrum3 out;
  out.eigenvalues = s.eigenvalues;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.eigenvectors(i, j) = s.eigenvectors(i, j).real();
  return out;
}

/// Hermitian PSD square root via eigendecomposition. Eigenvalues in
/// [-1e-10, 0) count as rounding and clip to zero; below that is an error.
template <int N>
CMat<N> psd_sqrt(const CMat<N>& m) {
  const Spectrum<N> s = eig_hermitian(m);
  std::array<double, N> roots;
  for (int i = 0; i < N; ++i) {
    double lam = s.eigenvalues[i];
    if (lam < -kEigClipTol) {
      std::ostringstream os;
      os << "psd_sqrt: matrix is not PSD, eigenvalue " << lam << " < " << -kEigClipTol;
      throw NotPsdError(os.str());
    }
    roots[i] = std::sqrt(std::max(lam, 0.0));
  }
  // R = V sqrt(Λ) V†, assembled Hermitian by construction.
  CMat<N> r;
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) {
      cplx acc = 0.0;
      for (int k = 0; k < N; ++k)
        acc += roots[k] * s.eigenvectors(i, k) * std::conj(s.eigenvectors(j, k));
      if (i == j) {
        r(i, i) = acc.real();
      } else {
        r(i, j) = acc;
        r(j, i) = std::conj(acc);
      }
    }
  return r;
}

/// Partial transpose over the second qubit:
/// out(2i+j, 2k+l) = in(2i+l, 2k+j).
inline CMat4 partial_transpose(const CMat4& rho) {
  CMat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out(2 * i + j, 2 * k + l) = rho(2 * i + l, 2 * k + j);
  return out;
}

}  // namespace qent
