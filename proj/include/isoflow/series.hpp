#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "isoflow/curves.hpp"
#include "isoflow/errors.hpp"
#include "isoflow/numerics.hpp"
#include "isoflow/onewell.hpp"
#include "isoflow/potentials.hpp"
#include "isoflow/vec2.hpp"

namespace isoflow {

// Homogeneous bivariate polynomial of total degree n, stored densely:
// coeffs[m] multiplies p1^(n-m) p2^m.
struct HomogPoly {
  int degree = 0;
  std::vector<double> coeffs;

  static HomogPoly zero(int n) {
    HomogPoly p;
    p.degree = n;
    p.coeffs.assign(static_cast<std::size_t>(n) + 1, 0.0);
    return p;
  }

  void validate() const {
    if (degree < 0) throw precondition_error("homogeneous polynomial: negative degree");
    if (coeffs.size() != static_cast<std::size_t>(degree) + 1)
      throw precondition_error("homogeneous polynomial: coefficient count must be degree + 1");
    for (double c : coeffs)
      if (!std::isfinite(c)) throw precondition_error("homogeneous polynomial: non-finite coefficient");
  }

  double eval(Vec2 p) const {
    // Powers accumulated from both ends; no Horner in p2/p1, which would
    // break on the axes.
    const int n = degree;
    std::vector<double> pw1(static_cast<std::size_t>(n) + 1, 1.0);
    std::vector<double> pw2(static_cast<std::size_t>(n) + 1, 1.0);
    for (int k = 1; k <= n; ++k) {
      pw1[static_cast<std::size_t>(k)] = pw1[static_cast<std::size_t>(k - 1)] * p.x;
      pw2[static_cast<std::size_t>(k)] = pw2[static_cast<std::size_t>(k - 1)] * p.y;
    }
    double s = 0;
    for (int m = 0; m <= n; ++m)
      s += coeffs[static_cast<std::size_t>(m)] * pw1[static_cast<std::size_t>(n - m)] * pw2[static_cast<std::size_t>(m)];
    return s;
  }

  // Partial derivative in p1: degree drops by one, coefficient m picks up the
  // factor (n - m).
  HomogPoly d1() const {
    if (degree == 0) return zero(0);
    HomogPoly out = zero(degree - 1);
    for (int m = 0; m < degree; ++m)
      out.coeffs[static_cast<std::size_t>(m)] = (degree - m) * coeffs[static_cast<std::size_t>(m)];
    return out;
  }

  // Partial derivative in p2: coefficient m of the result is (m+1) a_{m+1}.
  HomogPoly d2() const {
    if (degree == 0) return zero(0);
    HomogPoly out = zero(degree - 1);
    for (int m = 0; m < degree; ++m)
      out.coeffs[static_cast<std::size_t>(m)] = (m + 1) * coeffs[static_cast<std::size_t>(m + 1)];
    return out;
  }

  Vec2 grad_eval(Vec2 p) const { return {d1().eval(p), d2().eval(p)}; }
};

inline HomogPoly operator+(const HomogPoly& a, const HomogPoly& b) {
  if (a.degree != b.degree) throw precondition_error("homogeneous polynomial sum: degree mismatch");
  HomogPoly out = a;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] += b.coeffs[i];
  return out;
}

inline HomogPoly operator-(const HomogPoly& a, const HomogPoly& b) {
  if (a.degree != b.degree) throw precondition_error("homogeneous polynomial difference: degree mismatch");
  HomogPoly out = a;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] -= b.coeffs[i];
  return out;
}

inline HomogPoly operator*(double s, const HomogPoly& a) {
  HomogPoly out = a;
  for (double& c : out.coeffs) c *= s;
  return out;
}

inline HomogPoly operator*(const HomogPoly& a, const HomogPoly& b) {
  HomogPoly out = HomogPoly::zero(a.degree + b.degree);
  for (std::size_t i = 0; i < a.coeffs.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs.size(); ++j)
      out.coeffs[i + j] += a.coeffs[i] * b.coeffs[j];
  return out;
}

// <grad P, grad Q> as a polynomial; degree deg P + deg Q - 2.
inline HomogPoly grad_dot(const HomogPoly& p, const HomogPoly& q) {
  return p.d1() * q.d1() + p.d2() * q.d2();
}

// Forward map of the linear operator on homogeneous polynomials,
// L(grad P) = 2 <Lambda_beta p, grad P>.  Multiplying grad P (degree n-1) by
// the linear field components gives back degree n; on coefficients the map is
// tridiagonal:
//   out[m] = -2 (l1 (n-m) + l2 m) sin(beta) a_m
//            - 2 l2 cos(beta) (n-m+1) a_{m-1}
//            + 2 l1 cos(beta) (m+1) a_{m+1}.
inline HomogPoly apply_L(const HomogPoly& p, double lambda1, double lambda2, double beta) {
  p.validate();
  if (p.degree < 1) throw precondition_error("apply_L: degree must be at least 1");
  const int n = p.degree;
  const double sb = std::sin(beta);
  const double cb = std::cos(beta);
  HomogPoly out = HomogPoly::zero(n);
  for (int m = 0; m <= n; ++m) {
    double v = -2.0 * (lambda1 * (n - m) + lambda2 * m) * sb * p.coeffs[static_cast<std::size_t>(m)];
    if (m >= 1) v -= 2.0 * lambda2 * cb * (n - m + 1) * p.coeffs[static_cast<std::size_t>(m - 1)];
    if (m + 1 <= n) v += 2.0 * lambda1 * cb * (m + 1) * p.coeffs[static_cast<std::size_t>(m + 1)];
    out.coeffs[static_cast<std::size_t>(m)] = v;
  }
  return out;
}

// Inverse of apply_L on a fixed degree: the unique P with L(grad P) = Q.
// Invertibility holds because the flow field's trajectories all emanate from
// the origin, so a polynomial constant along them vanishes; numerically the
// (n+1) x (n+1) system is solved by dense LU and an excessive pivot ratio is
// reported rather than trusted.
inline HomogPoly solve_L(const HomogPoly& q, double lambda1, double lambda2, double beta) {
  q.validate();
  if (q.degree < 3) throw precondition_error("solve_L: degree must be at least 3");
  if (!(lambda1 > 0) || !(lambda2 > 0))
    throw precondition_error("solve_L: decay rates must be positive");
  if (!(beta > 0.0) || !(beta < std::numbers::pi))
    throw precondition_error("solve_L: beta must lie strictly inside (0, pi)");
  const int n = q.degree;
  const int dim = n + 1;
  std::vector<double> a(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int col = 0; col < dim; ++col) {
    HomogPoly basis = HomogPoly::zero(n);
    basis.coeffs[static_cast<std::size_t>(col)] = 1.0;
    const HomogPoly image = apply_L(basis, lambda1, lambda2, beta);
    for (int row = 0; row < dim; ++row)
      a[static_cast<std::size_t>(row) * dim + col] = image.coeffs[static_cast<std::size_t>(row)];
  }
  std::vector<double> rhs = q.coeffs;
  lu_solve(std::move(a), dim, rhs);
  HomogPoly out = HomogPoly::zero(n);
  out.coeffs = std::move(rhs);
  return out;
}

// Truncated power series of the calibration correction g_beta: homogeneous
// terms of degree 3..N.  The quadratic part of W is carried by the linear
// flow; these terms absorb everything above it.
struct GBetaSeries {
  double beta = 0;
  double lambda1 = 1;
  double lambda2 = 1;
  std::vector<HomogPoly> terms;  // degrees 3, 4, ..., contiguous
  double validity_radius = 0;    // 0 = not estimated

  int max_degree() const { return terms.empty() ? 2 : terms.back().degree; }

  void validate() const {
    if (!(lambda1 > 0) || !(lambda2 > 0))
      throw precondition_error("g series: decay rates must be positive");
    if (!(beta > 0.0) || !(beta < std::numbers::pi))
    throw precondition_error("g series: beta must lie strictly inside (0, pi)");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      terms[i].validate();
      if (terms[i].degree != static_cast<int>(i) + 3)
        throw precondition_error("g series: terms must run contiguously from degree 3");
    }
  }

  double eval(Vec2 p) const {
    double s = 0;
    for (const HomogPoly& t : terms) s += t.eval(p);
    return s;
  }

  Vec2 grad(Vec2 p) const {
    Vec2 g{0, 0};
    for (const HomogPoly& t : terms) g += t.grad_eval(p);
    return g;
  }
};

// Degree-by-degree recursion for the series terms: with W's cubic-and-higher
// part expanded as homogeneous Q_n, each P_n solves
//   L(grad P_n) = Q_n - sum_{j+k=n+2, j,k >= 3} <grad P_j, grad P_k>
// where the sum runs over ordered pairs.  w_terms may list the Q_n in any
// order; degrees < 3 or duplicated degrees are rejected.
inline GBetaSeries gbeta_coefficients(const std::vector<HomogPoly>& w_terms, double lambda1,
                                      double lambda2, double beta, int max_degree = 10) {
  if (max_degree < 3) throw precondition_error("g series: max degree must be at least 3");
  if (!(lambda1 > 0) || !(lambda2 > 0))
    throw precondition_error("g series: decay rates must be positive");
  if (!(beta > 0.0) || !(beta < std::numbers::pi))
    throw precondition_error("g series: beta must lie strictly inside (0, pi)");

  std::vector<HomogPoly> q(static_cast<std::size_t>(max_degree) + 1);
  std::vector<bool> seen(static_cast<std::size_t>(max_degree) + 1, false);
  for (int n = 3; n <= max_degree; ++n) q[static_cast<std::size_t>(n)] = HomogPoly::zero(n);
  for (const HomogPoly& t : w_terms) {
    t.validate();
    if (t.degree < 3) throw precondition_error("g series: W correction terms start at degree 3");
    if (t.degree > max_degree) continue;
    if (seen[static_cast<std::size_t>(t.degree)])
      throw precondition_error("g series: duplicate W term degree");
    seen[static_cast<std::size_t>(t.degree)] = true;
    q[static_cast<std::size_t>(t.degree)] = t;
  }

  GBetaSeries out;
  out.beta = beta;
  out.lambda1 = lambda1;
  out.lambda2 = lambda2;
  out.terms.reserve(static_cast<std::size_t>(max_degree) - 2);
  for (int n = 3; n <= max_degree; ++n) {
    HomogPoly rhs = q[static_cast<std::size_t>(n)];
    for (int j = 3; j + 3 <= n + 2; ++j) {
      const int k = n + 2 - j;
      rhs = rhs - grad_dot(out.terms[static_cast<std::size_t>(j - 3)],
                           out.terms[static_cast<std::size_t>(k - 3)]);
    }
    out.terms.push_back(solve_L(rhs, lambda1, lambda2, beta));
  }
  return out;
}

// Radial closed form: for W = r^2 + f(r), f(r) = a1 r^4 + a2 r^6 + ...,
//   g_beta(r) = integral_0^r { sin(beta) s - sqrt(sin(beta)^2 s^2 + f(s)) } ds.
// The integrand is evaluated as -f(s) / (sin(beta) s + sqrt(...)) to avoid
// the cancellation of two nearly equal terms near the origin.
inline double gbeta_radial(const std::vector<double>& f_coeffs, double beta, double r) {
  if (!(beta > 0.0) || !(beta < std::numbers::pi))
    throw precondition_error("radial g: beta must lie strictly inside (0, pi)");
  if (!(r >= 0) || !std::isfinite(r)) throw precondition_error("radial g: radius must be nonnegative");
  const double sb = std::sin(beta);
  const auto f_of = [&](double s) {
    const double s2 = s * s;
    double acc = 0;
    for (std::size_t k = f_coeffs.size(); k-- > 0;) acc = (acc + f_coeffs[k]) * s2;
    return acc * s2;  // a1 s^4 + a2 s^6 + ...
  };
  const auto integrand = [&](double s) {
    if (s == 0) return 0.0;
    const double fv = f_of(s);
    const double radicand = sb * sb * s * s + fv;
    if (radicand < 0)
      throw domain_error("radial g: negative radicand, radius exceeds the validity range");
    return -fv / (sb * s + std::sqrt(radicand));
  };
  if (r == 0) return 0.0;
  return adaptive_simpson(integrand, 0.0, r, 1e-12 * std::max(1.0, r));
}

// Max over the samples of |W(p) - |grad g(p) + Lambda_beta p|^2|, the defect
// in the expansion the series is meant to satisfy.  Samples are mapped into
// the well eigenframe, where the series coefficients live.
inline double residual_Wexp(const Potential& pot, const GBetaSeries& g,
                            const std::vector<Vec2>& sample) {
  g.validate();
  const Mat2 lam = flow_matrix(OneWellModel{g.lambda1, g.lambda2}, g.beta);
  const WellData wd = well_data(pot, 0);
  double worst = 0;
  for (Vec2 p : sample) {
    const Vec2 u = wd.to_local(p);
    const Vec2 field = g.grad(u) + lam * u;
    worst = std::max(worst, std::abs(pot.value(p) - dot(field, field)));
  }
  return worst;
}

namespace detail {

inline std::vector<Vec2> ring_sample(Vec2 center, double r, int count) {
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double th = 2.0 * std::numbers::pi * i / count;
    out.push_back(center + Vec2{r * std::cos(th), r * std::sin(th)});
  }
  return out;
}

}  // namespace detail

// Largest radius (from a descending logarithmic scan below r_max) whose
// 64-point ring keeps residual_Wexp at or under `tol`; 0 if none qualifies.
inline double estimate_validity_radius(const Potential& pot, const GBetaSeries& g, double r_max,
                                       double tol = 1e-6) {
  if (!(r_max > 0) || !std::isfinite(r_max))
    throw precondition_error("validity radius: r_max must be positive and finite");
  const Vec2 center = pot.wells().at(0);
  const int steps = 128;
  const double shrink = std::pow(1e-3, 1.0 / (steps - 1));
  double r = r_max;
  for (int i = 0; i < steps; ++i, r *= shrink) {
    if (residual_Wexp(pot, g, detail::ring_sample(center, r, 64)) <= tol) return r;
  }
  return 0.0;
}

// Builds the series directly from a supported potential: the quadratic kind
// has no correction terms, and the radial-analytic kind expands each
// a_k r^(2k+2) binomially.  The validity radius is estimated on rings.
inline GBetaSeries gbeta_for_potential(const Potential& pot, double beta, int max_degree = 10) {
  switch (pot.kind()) {
    case PotentialKind::quadratic_one_well: {
      const WellData wd = well_data(pot, 0);
      GBetaSeries g = gbeta_coefficients({}, wd.lambda1(), wd.lambda2(), beta, max_degree);
      g.validity_radius = estimate_validity_radius(pot, g, wd.rho);
      return g;
    }
    case PotentialKind::radial_analytic_one_well: {
      std::vector<HomogPoly> w_terms;
      const std::vector<double>& a = pot.radial_coefficients();
      for (std::size_t k = 0; k < a.size(); ++k) {
        const int j = static_cast<int>(k) + 2;  // (p1^2 + p2^2)^j, degree 2j
        if (2 * j > max_degree) break;
        if (a[k] == 0) continue;
        HomogPoly term = HomogPoly::zero(2 * j);
        double binom = 1.0;
        for (int i = 0; i <= j; ++i) {
          term.coeffs[static_cast<std::size_t>(2 * i)] = a[k] * binom;
          binom = binom * (j - i) / (i + 1);
        }
        w_terms.push_back(std::move(term));
      }
      GBetaSeries g = gbeta_coefficients(w_terms, 1.0, 1.0, beta, max_degree);
      g.validity_radius = estimate_validity_radius(pot, g, pot.validity_radius());
      return g;
    }
    default:
      throw precondition_error("g series: requires a quadratic or radial-analytic one-well potential");
  }
}

// Constrained flow for an analytic well, driven by gamma' = grad g + Lambda_beta gamma.
// Where the series expansion of W holds this trajectory has |gamma'| = F and
// calibrated energy; beta is the one the series was built for, and the
// momentum is reported as achieved rather than prescribed.  The cubic decay
// of grad g makes the linear part dominate near the well, so the march is cut
// off like the quadratic case and finished with the residual linear-tail
// length rtilde/sin(beta).
inline OneWellSolution isoperimetric(const Potential& pot, const GBetaSeries& g, Vec2 p0, int n = 0) {
  g.validate();
  // The momentum functional is frame-dependent, so this solver insists the
  // well eigenframe coincide with the coordinate frame (center at the origin
  // and either an isotropic quadratic part or axes already aligned).  Rotated
  // or shifted wells go through WellData::to_local / to_global on the caller's
  // side.
  const WellData wd = well_data(pot, 0);
  if (norm(wd.center) != 0)
    throw precondition_error("analytic flow: well must sit at the origin");
  if (wd.lambda1_sq != wd.lambda2_sq && std::abs(wd.v1.x) != 1.0)
    throw precondition_error("analytic flow: well eigenframe must be axis-aligned");
  const OneWellModel m{g.lambda1, g.lambda2};
  const Vec2 x0 = p0;
  const double rt0 = m.rtilde(x0);
  if (!(rt0 > 0)) throw degeneracy_error("analytic flow: start point lies at the well");
  if (n != 0 && n < 4) throw precondition_error("analytic flow: need at least 4 nodes");
  if (g.validity_radius > 0 && norm(x0) > g.validity_radius * (1.0 + 1e-12))
    throw precondition_error("analytic flow: start point outside the series validity radius");
  if (residual_Wexp(pot, g, detail::ring_sample({0, 0}, norm(x0), 64)) > 1e-6)
    throw domain_error("analytic flow: series residual exceeds 1e-6 at the start radius");

  const double sb = std::sin(g.beta);
  const Mat2 lam = flow_matrix(m, g.beta);
  const double lam_min = std::min(m.lambda1, m.lambda2);
  const double lam_max = std::max(m.lambda1, m.lambda2);
  const double delta = 1e-5 * norm(x0);
  const double r_stop = 0.5 * lam_min * delta * delta;

  // State: position plus accumulated degenerate arclength, d l/dt = |gamma'|^2.
  const auto field = [&](double, const std::vector<double>& s, std::vector<double>& ds) {
    const Vec2 p{s[0], s[1]};
    const Vec2 v = g.grad(p) + lam * p;
    ds = {v.x, v.y, dot(v, v)};
  };
  const auto rt_of = [&](const std::vector<double>& s) { return m.rtilde({s[0], s[1]}); };

  // Bracket the cutoff time by marching in chunks, then refine with Brent,
  // re-integrating from the cached bracket state.
  const double chunk = 0.25 / (lam_min * sb);
  std::vector<double> s{x0.x, x0.y, 0.0};
  double t = 0;
  std::vector<double> s_lo = s;
  double t_lo = 0;
  const double t_cap = 1e4 / (lam_min * sb);
  while (rt_of(s) > r_stop) {
    s_lo = s;
    t_lo = t;
    dp45_integrate(field, t, t + chunk, s);
    t += chunk;
    if (t > t_cap) throw numerical_error("analytic flow: trajectory failed to reach the well");
  }
  const double t_end = brent_root(
      [&](double tt) {
        if (tt == t_lo) return rt_of(s_lo) - r_stop;
        std::vector<double> w = s_lo;
        dp45_integrate(field, t_lo, tt, w);
        return rt_of(w) - r_stop;
      },
      t_lo, t);

  const double theta_total = std::abs(std::cos(g.beta)) * lam_max * t_end;
  if (n == 0) n = detail::auto_node_count(theta_total);

  OneWellSolution sol;
  sol.flow = lam;
  sol.beta = g.beta;
  sol.rtilde0 = rt0;
  sol.t_end = t_end;
  sol.c_transform = transform_constraint(m, x0);

  SampledCurve& c = sol.curve;
  c.tag = ParamTag::degenerate_arclength;
  c.pts.resize(static_cast<std::size_t>(n));
  c.par.resize(static_cast<std::size_t>(n));
  const double dt = t_end / (n - 2);
  std::vector<double> w{x0.x, x0.y, 0.0};
  c.pts[0] = x0;
  c.par[0] = 0;
  for (int k = 1; k <= n - 2; ++k) {
    dp45_integrate(field, (k - 1) * dt, k * dt, w);
    c.pts[static_cast<std::size_t>(k)] = Vec2{w[0], w[1]};
    c.par[static_cast<std::size_t>(k)] = w[2];
  }
  c.pts.back() = {0, 0};
  c.par.back() = w[2] + rt_of(w) / sb;
  for (std::size_t k = 1; k < c.par.size(); ++k)
    if (!(c.par[k] > c.par[k - 1]))
      throw numerical_error(
          "analytic flow: node budget exceeds the arclength resolution near the well; reduce n");
  c.validate();

  sol.area = momentum(c);
  sol.a_tilde = sol.area - sol.c_transform;
  // Calibrated energy: integral of omega_beta + dg along the trajectory.
  sol.l_beta = sb * rt0 + std::cos(g.beta) * (m.lambda1 + m.lambda2) * sol.a_tilde - g.eval(x0);
  return sol;
}

struct BetaSweepItem {
  double beta = 0;
  double area = 0;      // achieved momentum
  double energy = 0;    // quadrature energy of the trajectory
  double predicted = 0; // calibrated value for the achieved momentum
};

// Achieved-momentum table over a list of angles: the attainable constraint
// interval is not quantified, so each angle reports what its flow realizes.
inline std::vector<BetaSweepItem> analytic_beta_sweep(const Potential& pot, Vec2 p0,
                                                      const std::vector<double>& betas,
                                                      int max_degree = 10) {
  std::vector<BetaSweepItem> out;
  out.reserve(betas.size());
  for (double b : betas) {
    const GBetaSeries g = gbeta_for_potential(pot, b, max_degree);
    const OneWellSolution sol = isoperimetric(pot, g, p0);
    out.push_back({b, sol.area, energy(sol.curve, pot), sol.l_beta});
  }
  return out;
}

}  // namespace isoflow
