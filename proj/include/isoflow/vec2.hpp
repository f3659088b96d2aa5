#pragma once

#include <cmath>
#include <complex>

namespace isoflow {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return s * a; }
inline Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
inline Vec2& operator+=(Vec2& a, Vec2 b) { a = a + b; return a; }
inline Vec2& operator-=(Vec2& a, Vec2 b) { a = a - b; return a; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double sqnorm(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }
// Rotation by +90 degrees.
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }
inline Vec2 normalized(Vec2 a) {
  double n = norm(a);
  return n > 0.0 ? a / n : Vec2{0.0, 0.0};
}

struct Mat2 {
  // Row-major: [[a00, a01], [a10, a11]].
  double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static Mat2 diag(double d0, double d1) { return {d0, 0.0, 0.0, d1}; }
};

inline Vec2 operator*(const Mat2& m, Vec2 v) {
  return {m.a00 * v.x + m.a01 * v.y, m.a10 * v.x + m.a11 * v.y};
}
inline Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {a.a00 * b.a00 + a.a01 * b.a10, a.a00 * b.a01 + a.a01 * b.a11,
          a.a10 * b.a00 + a.a11 * b.a10, a.a10 * b.a01 + a.a11 * b.a11};
}
inline Mat2 operator*(double s, const Mat2& m) {
  return {s * m.a00, s * m.a01, s * m.a10, s * m.a11};
}
inline Mat2 operator+(const Mat2& a, const Mat2& b) {
  return {a.a00 + b.a00, a.a01 + b.a01, a.a10 + b.a10, a.a11 + b.a11};
}
inline double trace(const Mat2& m) { return m.a00 + m.a11; }
inline double det(const Mat2& m) { return m.a00 * m.a11 - m.a01 * m.a10; }
inline Mat2 transposed(const Mat2& m) { return {m.a00, m.a10, m.a01, m.a11}; }

// Eigen-decomposition of a symmetric 2x2 matrix; eigenvalues ascending,
// v2 = perp(v1) so the basis is orthonormal and right-handed.
struct SymEigen2 {
  double ev1 = 0.0, ev2 = 0.0;
  Vec2 v1{1.0, 0.0}, v2{0.0, 1.0};
};

inline SymEigen2 sym_eigen(const Mat2& m) {
  double a = m.a00, b = 0.5 * (m.a01 + m.a10), c = m.a11;
  double tau = 0.5 * (a + c);
  double d = std::hypot(0.5 * (a - c), b);
  SymEigen2 e;
  e.ev1 = tau - d;
  e.ev2 = tau + d;
  if (d <= 1e-300 || std::abs(b) < 1e-15 * (std::abs(a) + std::abs(c) + d)) {
    // Already (numerically) diagonal; keep axis order consistent with
    // ascending eigenvalues.
    if (a <= c) {
      e.v1 = {1.0, 0.0};
    } else {
      e.v1 = {0.0, 1.0};
    }
  } else {
    // (a - ev1) x + b y = 0 and b x + (c - ev1) y = 0; pick the better row.
    Vec2 cand1{-b, a - e.ev1};
    Vec2 cand2{c - e.ev1, -b};
    e.v1 = normalized(sqnorm(cand1) >= sqnorm(cand2) ? cand1 : cand2);
  }
  // Deterministic sign: dominant component positive.
  if ((std::abs(e.v1.x) >= std::abs(e.v1.y) && e.v1.x < 0.0) ||
      (std::abs(e.v1.x) < std::abs(e.v1.y) && e.v1.y < 0.0)) {
    e.v1 = -e.v1;
  }
  e.v2 = perp(e.v1);
  return e;
}

// Exact exponential of a real 2x2 matrix via Cayley-Hamilton: with
// B = A - tau*I trace-free, B^2 = (tau^2 - det A) I, so exp splits into a
// scalar factor times a cosh/sinh (or cos/sin) combination.
inline Mat2 expm(const Mat2& a) {
  double tau = 0.5 * trace(a);
  Mat2 b = a + (-tau) * Mat2::identity();
  double d = tau * tau - det(a);  // = -det(B)
  double ch, shs;                 // cosh(s), sinh(s)/s with s^2 = d
  const double tiny = 1e-12;
  if (d > tiny) {
    double s = std::sqrt(d);
    ch = std::cosh(s);
    shs = std::sinh(s) / s;
  } else if (d < -tiny) {
    double s = std::sqrt(-d);
    ch = std::cos(s);
    shs = std::sin(s) / s;
  } else {
    // Degenerate eigenvalue: series in d.
    ch = 1.0 + 0.5 * d;
    shs = 1.0 + d / 6.0;
  }
  double et = std::exp(tau);
  return et * ch * Mat2::identity() + et * shs * b;
}

}  // namespace isoflow
