#pragma once

// Small numerical building blocks shared across modules: finite-difference
// weights on arbitrary nodes, quadrature, root finding, dense/banded linear
// algebra, polynomial roots, a Dormand-Prince step, and L-BFGS.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "isoflow/errors.hpp"

namespace isoflow {

inline double dot_self(const std::vector<double>& v) {
  double s = 0.0;
  for (double t : v) s += t * t;
  return s;
}

// Fornberg weights: coefficients w[i] such that sum_i w[i] f(x[i])
// approximates the m-th derivative of f at z, exact for polynomials of
// degree <= n-1.
inline std::vector<double> fd_weights(double z, const std::vector<double>& x,
                                      int m) {
  int n = static_cast<int>(x.size());
  if (n < m + 1) throw precondition_error("fd_weights: need at least m+1 nodes");
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, m);
    double c2 = 1.0;
    double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

// Adaptive Simpson quadrature with absolute tolerance.
namespace detail {
template <class F>
double simpson_rec(F&& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-12,
                        int max_depth = 48) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Brent's method on [a,b]; requires a sign change.
template <class F>
double brent_root(F&& f, double a, double b, double xtol = 1e-14,
                  int max_iter = 200) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw precondition_error("brent_root: no sign change");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    double tol1 = 2.0 * 1e-16 * std::abs(b) + 0.5 * xtol;
    double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double s = fb / fa, p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d; d = p / q;
      } else {
        d = xm; e = d;
      }
    } else {
      d = xm; e = d;
    }
    a = b; fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a; fc = fa; d = b - a; e = d;
    }
  }
  return b;
}

// Dense LU with partial pivoting, row-major a (n x n), solves in place.
// Throws numerical_error if the pivot ratio max|u_ii|/min|u_ii| exceeds
// `cond_limit`.
inline void lu_solve(std::vector<double> a, int n, std::vector<double>& b,
                     double cond_limit = 1e12) {
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;
  for (int k = 0; k < n; ++k) {
    int imax = k;
    double amax = std::abs(a[k * n + k]);
    for (int i = k + 1; i < n; ++i) {
      double v = std::abs(a[i * n + k]);
      if (v > amax) { amax = v; imax = i; }
    }
    if (amax == 0.0) throw numerical_error("lu_solve: singular matrix");
    if (imax != k) {
      for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[imax * n + j]);
      std::swap(b[k], b[imax]);
    }
    for (int i = k + 1; i < n; ++i) {
      double f = a[i * n + k] / a[k * n + k];
      a[i * n + k] = f;
      for (int j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  double umax = 0.0, umin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double u = std::abs(a[i * n + i]);
    umax = std::max(umax, u);
    umin = std::min(umin, u);
  }
  if (!(umin > 0.0) || umax / umin > cond_limit)
    throw numerical_error("lu_solve: pivot ratio exceeds conditioning limit");
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a[i * n + j] * b[j];
    b[i] = s / a[i * n + i];
  }
}

// All complex roots of a real-coefficient polynomial sum_k a[k] x^k
// (a.back() != 0) via Durand-Kerner with Newton polish.
inline std::vector<std::complex<double>> poly_roots(std::vector<double> a) {
  using cd = std::complex<double>;
  while (a.size() > 1 && a.back() == 0.0) a.pop_back();
  int n = static_cast<int>(a.size()) - 1;
  if (n < 1) return {};
  std::vector<cd> c(n + 1);
  for (int i = 0; i <= n; ++i) c[i] = a[i] / a[n];
  auto eval = [&](cd z) {
    cd p = c[n];
    for (int i = n - 1; i >= 0; --i) p = p * z + c[i];
    return p;
  };
  auto deriv = [&](cd z) {
    cd p = static_cast<double>(n) * c[n];
    for (int i = n - 1; i >= 1; --i) p = p * z + static_cast<double>(i) * c[i];
    return p;
  };
  double r = 0.0;
  for (int i = 0; i < n; ++i) r = std::max(r, std::abs(c[i]));
  r = 1.0 + r;
  std::vector<cd> z(n);
  for (int k = 0; k < n; ++k) {
    double ang = 2.0 * std::numbers::pi * k / n + 0.4;
    z[k] = r * cd(std::cos(ang), std::sin(ang));
  }
  for (int it = 0; it < 500; ++it) {
    double move = 0.0;
    for (int k = 0; k < n; ++k) {
      cd denom = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != k) denom *= (z[k] - z[j]);
      cd dz = eval(z[k]) / denom;
      z[k] -= dz;
      move = std::max(move, std::abs(dz));
    }
    if (move < 1e-15 * r) break;
  }
  for (int k = 0; k < n; ++k) {
    for (int it = 0; it < 4; ++it) {
      cd d = deriv(z[k]);
      if (std::abs(d) == 0.0) break;
      z[k] -= eval(z[k]) / d;
    }
  }
  std::sort(z.begin(), z.end(), [](cd u, cd v) {
    if (u.real() != v.real()) return u.real() < v.real();
    return u.imag() < v.imag();
  });
  return z;
}

// Monic characteristic polynomial coefficients of a small dense matrix
// (row-major n x n) via Faddeev-LeVerrier: returns c with
// det(xI - A) = sum_k c[k] x^k, c[n] = 1.
inline std::vector<double> char_poly(const std::vector<double>& a, int n) {
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1.0;
  std::vector<double> m(n * n, 0.0);
  for (int i = 0; i < n; ++i) m[i * n + i] = 1.0;
  std::vector<double> am(n * n);
  for (int k = 1; k <= n; ++k) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += a[i * n + l] * m[l * n + j];
        am[i * n + j] = s;
      }
    double tr = 0.0;
    for (int i = 0; i < n; ++i) tr += am[i * n + i];
    c[n - k] = -tr / k;
    m = am;
    for (int i = 0; i < n; ++i) m[i * n + i] += c[n - k];
  }
  return c;
}

// Cyclic Jacobi eigen-decomposition for a small symmetric matrix (row-major).
// Eigenvalues ascending; vecs stores eigenvectors as columns.
inline void jacobi_eigen(std::vector<double> a, int n,
                         std::vector<double>& evals,
                         std::vector<double>& vecs) {
  vecs.assign(n * n, 0.0);
  for (int i = 0; i < n; ++i) vecs[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        double theta = 0.5 * (a[q * n + q] - a[p * n + p]) / apq;
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double cth = 1.0 / std::sqrt(t * t + 1.0);
        double sth = t * cth;
        for (int i = 0; i < n; ++i) {
          double aip = a[i * n + p], aiq = a[i * n + q];
          a[i * n + p] = cth * aip - sth * aiq;
          a[i * n + q] = sth * aip + cth * aiq;
        }
        for (int j = 0; j < n; ++j) {
          double apj = a[p * n + j], aqj = a[q * n + j];
          a[p * n + j] = cth * apj - sth * aqj;
          a[q * n + j] = sth * apj + cth * aqj;
        }
        for (int i = 0; i < n; ++i) {
          double vip = vecs[i * n + p], viq = vecs[i * n + q];
          vecs[i * n + p] = cth * vip - sth * viq;
          vecs[i * n + q] = sth * vip + cth * viq;
        }
      }
  }
  evals.resize(n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = a[i * n + i];
  std::sort(order.begin(), order.end(), [&](int i, int j) { return d[i] < d[j]; });
  std::vector<double> v2(n * n);
  for (int k = 0; k < n; ++k) {
    evals[k] = d[order[k]];
    for (int i = 0; i < n; ++i) v2[i * n + k] = vecs[i * n + order[k]];
  }
  vecs = v2;
}

// Symmetric positive-definite banded Cholesky.  Storage: ab[j * n + i] holds
// A(i + j, i) for j = 0..bw (lower bands); entries beyond the matrix are
// ignored.  Factors in place (L with unit storage layout), then solves.
inline void band_cholesky(std::vector<double>& ab, int n, int bw) {
  for (int i = 0; i < n; ++i) {
    double d = ab[i];
    for (int k = std::max(0, i - bw); k < i; ++k) {
      double lik = ab[(i - k) * n + k];
      d -= lik * lik;
    }
    if (d <= 0.0) throw numerical_error("band_cholesky: matrix not positive definite");
    double di = std::sqrt(d);
    ab[i] = di;
    for (int j = i + 1; j <= std::min(n - 1, i + bw); ++j) {
      double s = ab[(j - i) * n + i];
      for (int k = std::max(0, j - bw); k < i; ++k)
        s -= ab[(j - k) * n + k] * ab[(i - k) * n + k];
      ab[(j - i) * n + i] = s / di;
    }
  }
}

inline void band_chol_solve(const std::vector<double>& ab, int n, int bw,
                            std::vector<double>& b) {
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = std::max(0, i - bw); k < i; ++k) s -= ab[(i - k) * n + k] * b[k];
    b[i] = s / ab[i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j <= std::min(n - 1, i + bw); ++j)
      s -= ab[(j - i) * n + i] * b[j];
    b[i] = s / ab[i];
  }
}

// One Dormand-Prince 5(4) step.  f(t, y, dydt); returns the 5th order
// solution in ynew and the embedded error estimate in err.
template <class F>
void dp45_step(F&& f, double t, const std::vector<double>& y, double h,
               std::vector<double>& ynew, std::vector<double>& err,
               std::vector<std::vector<double>>& k) {
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  size_t n = y.size();
  k.assign(7, std::vector<double>(n));
  std::vector<double> tmp(n);
  f(t, y, k[0]);
  for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k[0][i];
  f(t + c2 * h, tmp, k[1]);
  for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k[0][i] + a32 * k[1][i]);
  f(t + c3 * h, tmp, k[2]);
  for (size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
  f(t + c4 * h, tmp, k[3]);
  for (size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] + a54 * k[3][i]);
  f(t + c5 * h, tmp, k[4]);
  for (size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] +
                         a64 * k[3][i] + a65 * k[4][i]);
  f(t + h, tmp, k[5]);
  ynew.resize(n);
  for (size_t i = 0; i < n; ++i)
    ynew[i] = y[i] + h * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] +
                          b5 * k[4][i] + b6 * k[5][i]);
  f(t + h, ynew, k[6]);
  err.resize(n);
  for (size_t i = 0; i < n; ++i)
    err[i] = h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] +
                  e6 * k[5][i] + e7 * k[6][i]);
}

// Integrate y' = f(t,y) from t0 to t1 with adaptive Dormand-Prince,
// landing exactly on t1.  Mutates y.
template <class F>
void dp45_integrate(F&& f, double t0, double t1, std::vector<double>& y,
                    double atol = 1e-12, double rtol = 1e-12) {
  double t = t0;
  double h = (t1 - t0) * 0.01;
  if (h == 0.0) return;
  std::vector<double> ynew, err;
  std::vector<std::vector<double>> k;
  int guard = 0;
  while ((t1 - t) * (t1 - t0) > 0.0) {
    if (++guard > 2000000) throw numerical_error("dp45_integrate: step count exceeded");
    if ((t + h - t1) * (t1 - t0) > 0.0) h = t1 - t;
    dp45_step(f, t, y, h, ynew, err, k);
    double e = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
      double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      e = std::max(e, std::abs(err[i]) / sc);
    }
    if (e <= 1.0) {
      t += h;
      y = ynew;
    }
    double fac = 0.9 * std::pow(std::max(e, 1e-10), -0.2);
    h *= std::clamp(fac, 0.2, 5.0);
  }
}

// Limited-memory BFGS with Armijo backtracking.
struct LbfgsOptions {
  int memory = 10;
  int max_iter = 1000;
  double ginf_tol = 1e-8;
};

struct LbfgsResult {
  double f = 0.0;
  double ginf = 0.0;
  int iters = 0;
  bool converged = false;
};

// fg(x, grad) returns f and fills grad.
template <class FG>
LbfgsResult lbfgs_minimize(std::vector<double>& x, FG&& fg,
                           const LbfgsOptions& opt = {}) {
  size_t n = x.size();
  std::vector<std::vector<double>> S, Y;
  std::vector<double> g(n), gnew(n), d(n), xnew(n);
  double f = fg(x, g);
  LbfgsResult res;
  auto ginf = [&](const std::vector<double>& v) {
    double m = 0.0;
    for (double t : v) m = std::max(m, std::abs(t));
    return m;
  };
  for (int it = 0; it < opt.max_iter; ++it) {
    res.iters = it;
    res.ginf = ginf(g);
    if (res.ginf <= opt.ginf_tol) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    d = g;
    int m = static_cast<int>(S.size());
    std::vector<double> alpha(m), rho(m);
    for (int i = m - 1; i >= 0; --i) {
      double sy = 0.0;
      for (size_t j = 0; j < n; ++j) sy += S[i][j] * Y[i][j];
      rho[i] = 1.0 / sy;
      double sd = 0.0;
      for (size_t j = 0; j < n; ++j) sd += S[i][j] * d[j];
      alpha[i] = rho[i] * sd;
      for (size_t j = 0; j < n; ++j) d[j] -= alpha[i] * Y[i][j];
    }
    if (m > 0) {
      double sy = 0.0, yy = 0.0;
      for (size_t j = 0; j < n; ++j) {
        sy += S[m - 1][j] * Y[m - 1][j];
        yy += Y[m - 1][j] * Y[m - 1][j];
      }
      double gamma = sy / yy;
      for (size_t j = 0; j < n; ++j) d[j] *= gamma;
    }
    for (int i = 0; i < m; ++i) {
      double yd = 0.0;
      for (size_t j = 0; j < n; ++j) yd += Y[i][j] * d[j];
      double beta = rho[i] * yd;
      for (size_t j = 0; j < n; ++j) d[j] += (alpha[i] - beta) * S[i][j];
    }
    for (size_t j = 0; j < n; ++j) d[j] = -d[j];
    double gd = 0.0;
    for (size_t j = 0; j < n; ++j) gd += g[j] * d[j];
    if (gd >= 0.0) {  // not a descent direction; reset to steepest descent
      for (size_t j = 0; j < n; ++j) d[j] = -g[j];
      gd = -dot_self(g);
      S.clear();
      Y.clear();
    }
    double step = 1.0;
    double fnew = f;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls) {
      for (size_t j = 0; j < n; ++j) xnew[j] = x[j] + step * d[j];
      fnew = fg(xnew, gnew);
      if (std::isfinite(fnew) && fnew <= f + 1e-4 * step * gd) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;  // line search failed; gradient is the best answer we have
    std::vector<double> s(n), yv(n);
    double sy = 0.0, snorm = 0.0, ynorm = 0.0;
    for (size_t j = 0; j < n; ++j) {
      s[j] = xnew[j] - x[j];
      yv[j] = gnew[j] - g[j];
      sy += s[j] * yv[j];
      snorm += s[j] * s[j];
      ynorm += yv[j] * yv[j];
    }
    if (sy > 1e-12 * std::sqrt(snorm * ynorm)) {
      S.push_back(std::move(s));
      Y.push_back(std::move(yv));
      if (static_cast<int>(S.size()) > opt.memory) {
        S.erase(S.begin());
        Y.erase(Y.begin());
      }
    }
    x = xnew;
    f = fnew;
    g = gnew;
  }
  res.f = f;
  res.ginf = ginf(g);
  return res;
}

}  // namespace isoflow
