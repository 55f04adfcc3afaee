#pragma once

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <string>

namespace csto {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr cplx iu{0.0, 1.0};

// Error taxonomy mirrors the CLI exit codes: violated mathematical invariants (1),
// bad input data or arguments (2), numerical breakdown of a valid computation (3).
struct invariant_error : std::runtime_error { using std::runtime_error::runtime_error; };
struct input_error : std::runtime_error { using std::runtime_error::runtime_error; };
struct numerical_error : std::runtime_error { using std::runtime_error::runtime_error; };

// Row-major complex 2x2 matrix, small enough to pass by value everywhere.
struct Mat2 {
  cplx m11{0.0}, m12{0.0}, m21{0.0}, m22{0.0};

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  cplx det() const { return m11 * m22 - m12 * m21; }
  cplx trace() const { return m11 + m22; }

  Mat2 inverse() const {
    const cplx d = det();
    return {m22 / d, -m12 / d, -m21 / d, m11 / d};
  }

  // conjugate transpose
  Mat2 dagger() const {
    return {std::conj(m11), std::conj(m21), std::conj(m12), std::conj(m22)};
  }

  double max_abs() const {
    return std::max(std::max(std::abs(m11), std::abs(m12)),
                    std::max(std::abs(m21), std::abs(m22)));
  }
};

inline Mat2 operator+(const Mat2& A, const Mat2& B) {
  return {A.m11 + B.m11, A.m12 + B.m12, A.m21 + B.m21, A.m22 + B.m22};
}
inline Mat2 operator-(const Mat2& A, const Mat2& B) {
  return {A.m11 - B.m11, A.m12 - B.m12, A.m21 - B.m21, A.m22 - B.m22};
}
inline Mat2 operator*(const Mat2& A, const Mat2& B) {
  return {A.m11 * B.m11 + A.m12 * B.m21, A.m11 * B.m12 + A.m12 * B.m22,
          A.m21 * B.m11 + A.m22 * B.m21, A.m21 * B.m12 + A.m22 * B.m22};
}
inline Mat2 operator*(cplx s, const Mat2& A) {
  return {s * A.m11, s * A.m12, s * A.m21, s * A.m22};
}
inline Mat2 commutator(const Mat2& A, const Mat2& B) { return A * B - B * A; }

inline Mat2 sigma3() { return {1.0, 0.0, 0.0, -1.0}; }

// exp(T) for trace-free T via Cayley-Hamilton: T^2 = -det(T) I, so
// exp(T) = cosh(s) I + (sinh(s)/s) T with s^2 = -det(T).
inline Mat2 exp_tracefree(const Mat2& T) {
  const cplx s2 = -T.det();
  cplx ch, shs;
  if (std::abs(s2) < 1e-8) {
    ch = 1.0 + s2 / 2.0 + s2 * s2 / 24.0;
    shs = 1.0 + s2 / 6.0 + s2 * s2 / 120.0;
  } else {
    const cplx s = std::sqrt(s2);
    ch = std::cosh(s);
    shs = std::sinh(s) / s;
  }
  Mat2 R = shs * T;
  R.m11 += ch;
  R.m22 += ch;
  return R;
}

}  // namespace csto
