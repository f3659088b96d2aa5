#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "isoflow/curves.hpp"
#include "isoflow/errors.hpp"
#include "isoflow/numerics.hpp"
#include "isoflow/potentials.hpp"
#include "isoflow/vec2.hpp"

namespace isoflow {

// Model well in its eigenframe: F^2(p) = lambda1^2 p1^2 + lambda2^2 p2^2,
// with the degenerate distance rtilde(p) = (lambda1 p1^2 + lambda2 p2^2)/2.
struct OneWellModel {
  double lambda1 = 1;
  double lambda2 = 1;

  void validate() const {
    if (!(lambda1 > 0) || !(lambda2 > 0) || !std::isfinite(lambda1) || !std::isfinite(lambda2))
      throw precondition_error("one-well model: decay rates must be positive and finite");
  }

  double rtilde(Vec2 p) const { return 0.5 * (lambda1 * p.x * p.x + lambda2 * p.y * p.y); }
  double conformal_sq(Vec2 p) const {
    return lambda1 * lambda1 * p.x * p.x + lambda2 * lambda2 * p.y * p.y;
  }
  Potential potential() const {
    return Potential::quadratic(Mat2::diag(lambda1 * lambda1, lambda2 * lambda2));
  }
  static OneWellModel from_well(const WellData& wd) { return {wd.lambda1(), wd.lambda2()}; }
};

// Unconstrained minimizer from p0 into the well: coordinatewise exponential
// decay.  Its energy is rtilde(p0).
inline Vec2 geodesic(const OneWellModel& m, Vec2 p0, double t) {
  return {p0.x * std::exp(-m.lambda1 * t), p0.y * std::exp(-m.lambda2 * t)};
}

inline double geodesic_energy(const OneWellModel& m, Vec2 p0) {
  m.validate();
  return m.rtilde(p0);
}

// Momentum swept by the geodesic from p0 into the well.  Subtracting it from
// a total-momentum prescription reduces the constraint to the area enclosed
// against the geodesic.  Computed by quadrature; the geodesic graph over the
// first coordinate is p2(u) = p02 (u/p01)^(lambda2/lambda1).
inline double transform_constraint(const OneWellModel& m, Vec2 p0) {
  m.validate();
  if (p0.x == 0 || p0.y == 0) return 0.0;
  const double ratio = m.lambda2 / m.lambda1;
  const double ax = std::abs(p0.x);
  const double val = adaptive_simpson(
      [&](double u) { return std::pow(std::abs(u) / ax, ratio); }, 0.0, ax,
      1e-14 * std::max(1.0, ax));
  const double sign = (p0.x > 0) == (p0.y > 0) ? 1.0 : -1.0;
  return sign * std::abs(p0.y) * val;
}

// Characteristic angle of the constrained problem.  With x = (l1+l2)*a_tilde
// and y = rtilde(p0) the angle is atan2(y, x) in (0, pi); the predicted
// minimal energy is l_beta = hypot(y, x), so that sin(beta) l_beta = rtilde0
// and cos(beta) l_beta = (l1+l2) a_tilde hold exactly.
struct BetaSolution {
  double beta = 0;
  double l_beta = 0;
  double a_tilde = 0;
  double rtilde0 = 0;
};

inline BetaSolution solve_beta(const OneWellModel& m, Vec2 p0, double a_tilde) {
  m.validate();
  if (!std::isfinite(a_tilde)) throw precondition_error("solve_beta: area must be finite");
  const double r0 = m.rtilde(p0);
  if (!(r0 > 0)) throw degeneracy_error("solve_beta: start point lies at the well");
  BetaSolution out;
  out.rtilde0 = r0;
  out.a_tilde = a_tilde;
  const double x = (m.lambda1 + m.lambda2) * a_tilde;
  out.beta = a_tilde == 0 ? 0.5 * std::numbers::pi : std::atan2(r0, x);
  out.l_beta = std::hypot(r0, x);
  return out;
}

// Linear field whose trajectories are the constrained minimizers:
// gamma' = flow_matrix * gamma.  Along it |gamma'| = F(gamma) and
// d rtilde/dt = -sin(beta) F^2, so the degenerate arclength satisfies
// l(t) = (rtilde(p0) - rtilde(gamma(t))) / sin(beta) exactly.
inline Mat2 flow_matrix(const OneWellModel& m, double beta) {
  m.validate();
  const double sb = std::sin(beta);
  const double cb = std::cos(beta);
  return {-m.lambda1 * sb, -m.lambda2 * cb, m.lambda1 * cb, -m.lambda2 * sb};
}

// Eigenvalues of the flow field at the well.  Complex pair (spiral approach)
// exactly when sin(beta) < 2 sqrt(l1 l2) / (l1 + l2).
struct ApproachSpectrum {
  std::complex<double> mu1;  // larger real part (slow mode)
  std::complex<double> mu2;
  bool spiral = false;
};

inline ApproachSpectrum approach_spectrum(const OneWellModel& m, double beta) {
  m.validate();
  if (!(std::sin(beta) > 0)) throw precondition_error("approach_spectrum: beta must lie in (0, pi)");
  const double b = (m.lambda1 + m.lambda2) * std::sin(beta);
  const double c = m.lambda1 * m.lambda2;
  const double disc = b * b - 4.0 * c;
  ApproachSpectrum out;
  if (disc < 0) {
    const double im = 0.5 * std::sqrt(-disc);
    out.mu1 = {-0.5 * b, im};
    out.mu2 = {-0.5 * b, -im};
    out.spiral = true;
  } else {
    // b > 0, so -(b + sqrt(disc))/2 is the well-conditioned root.
    const double q = -0.5 * (b + std::sqrt(disc));
    const double r1 = c / q;  // closer to zero
    out.mu1 = {r1, 0};
    out.mu2 = {q, 0};
    out.spiral = false;
  }
  return out;
}

struct OneWellSolution {
  SampledCurve curve;  // degenerate-arclength parametrized; last node at the well
  Mat2 flow{};
  double beta = 0;
  double a_tilde = 0;
  double c_transform = 0;
  double l_beta = 0;  // predicted minimal energy
  double rtilde0 = 0;
  double area = 0;   // prescribed momentum
  double t_end = 0;  // flow time at the cutoff node
};

namespace detail {

// Node budget: uniform flow-time nodes turn by ~theta_total/(n-1) per chord.
// The chord-midpoint energy rule undershoots by ~(turn)^2/6 relative per
// chord (chord shortening ~turn^2/24 plus midpoint radius drop ~turn^2/8),
// so capping the turn at 1.6e-3 rad keeps the energy within ~4e-7 relative
// and the polyline momentum well within 1e-5.
inline int auto_node_count(double theta_total) {
  const double want = std::ceil(theta_total / 1.6e-3);
  const double capped = std::min(want, static_cast<double>(1 << 22));
  return static_cast<int>(std::max(2048.0, capped));
}

}  // namespace detail

// Constrained minimizer from p0 with prescribed momentum `area`, realized by
// the closed-form flow.  Nodes sit at uniform flow time (geometric clustering
// toward the well); the final node is the well itself.  n = 0 picks the node
// count automatically; otherwise n >= 4 nodes are produced.
inline OneWellSolution isoperimetric(const OneWellModel& m, Vec2 p0, double area, int n = 0) {
  m.validate();
  if (!std::isfinite(area)) throw precondition_error("isoperimetric: area must be finite");
  if (n != 0 && n < 4) throw precondition_error("isoperimetric: need n >= 4 nodes (or 0 for automatic)");

  OneWellSolution sol;
  sol.area = area;
  sol.c_transform = transform_constraint(m, p0);
  sol.a_tilde = area - sol.c_transform;
  const BetaSolution bs = solve_beta(m, p0, sol.a_tilde);
  sol.beta = bs.beta;
  sol.l_beta = bs.l_beta;
  sol.rtilde0 = bs.rtilde0;
  sol.flow = flow_matrix(m, bs.beta);

  const double sb = std::sin(bs.beta);
  const double lam_min = std::min(m.lambda1, m.lambda2);
  const double lam_max = std::max(m.lambda1, m.lambda2);

  // Stop once rtilde certifies |p| <= 1e-5 |p0|; the appended well node
  // closes the remaining tail.  Stopping deeper would push neighboring
  // arclength values below one ulp of rtilde(p0) and collapse the parameter
  // grid.
  const double delta = 1e-5 * norm(p0);
  const double r_stop = 0.5 * lam_min * delta * delta;

  const auto rt_at = [&](double t) { return m.rtilde(expm(t * sol.flow) * p0); };

  // rtilde decays strictly (rate between 2*lam_min*sb and 2*lam_max*sb);
  // march in half e-folds of the slow rate, then bisect the crossing.
  const double step = 0.5 / (2.0 * lam_min * sb);
  double t_hi = step;
  while (rt_at(t_hi) > r_stop) t_hi += step;
  const double t_lo = t_hi - step;
  const double t_end = brent_root([&](double t) { return rt_at(t) - r_stop; }, t_lo, t_hi);
  sol.t_end = t_end;

  const double theta_total = std::abs(std::cos(bs.beta)) * lam_max * t_end;
  if (n == 0) n = detail::auto_node_count(theta_total);

  SampledCurve& c = sol.curve;
  c.tag = ParamTag::degenerate_arclength;
  c.pts.resize(static_cast<std::size_t>(n));
  c.par.resize(static_cast<std::size_t>(n));
  const double dt = t_end / (n - 2);
  for (int k = 0; k <= n - 2; ++k) {
    const Vec2 p = expm((dt * k) * sol.flow) * p0;
    c.pts[static_cast<std::size_t>(k)] = p;
    c.par[static_cast<std::size_t>(k)] = (bs.rtilde0 - m.rtilde(p)) / sb;
  }
  c.pts.front() = p0;
  c.par.front() = 0;
  c.pts.back() = {0, 0};
  c.par.back() = bs.l_beta;
  for (std::size_t k = 1; k < c.par.size(); ++k)
    if (!(c.par[k] > c.par[k - 1]))
      throw numerical_error(
          "isoperimetric: node budget exceeds the arclength resolution near the well; reduce n");
  c.validate();
  return sol;
}

// Closed-form polar description for isotropic rates: the trajectory through
// p0 winds as theta(r) = theta0 - (4 a_tilde / |p0|^2) log(r / |p0|).
inline Vec2 radial_spiral(const OneWellModel& m, Vec2 p0, double a_tilde, double r) {
  m.validate();
  if (std::abs(m.lambda1 - m.lambda2) > 1e-12 * std::max(m.lambda1, m.lambda2))
    throw precondition_error("radial_spiral: requires equal decay rates");
  const double r0 = norm(p0);
  if (!(r0 > 0)) throw degeneracy_error("radial_spiral: start point lies at the well");
  if (!(r > 0) || r > r0 * (1 + 1e-12))
    throw precondition_error("radial_spiral: radius must lie in (0, |p0|]");
  const double cot = 4.0 * a_tilde / (r0 * r0);
  const double theta = std::atan2(p0.y, p0.x) - cot * std::log(r / r0);
  return {r * std::cos(theta), r * std::sin(theta)};
}

// Calibration data for a candidate curve: the 1-form omega(p, v) = <flow p, v>
// satisfies omega <= F |v| for every p, v (the flow field has |flow p| = F(p)),
// with equality exactly along the flow.  Its chord integrals are exact because
// the form is linear in p.  For curves with common endpoints and equal
// momentum the integral is a common lower bound for the energy.
struct CalibrationCertificate {
  double omega_integral = 0;
  double energy = 0;      // chord-midpoint energy of the same polyline
  double gap = 0;         // energy - omega_integral (>= 0 up to quadrature)
  double max_excess = 0;  // max over chords of omega - F |chord|
  bool calibrated = false;
};

inline CalibrationCertificate calibration_certificate(const SampledCurve& c, const OneWellModel& m,
                                                      double beta, double tol = 1e-9) {
  c.validate();
  m.validate();
  if (!(std::sin(beta) > 0)) throw precondition_error("calibration: beta must lie in (0, pi)");
  const Mat2 lam = flow_matrix(m, beta);
  CalibrationCertificate out;
  out.max_excess = -std::numeric_limits<double>::infinity();
  const std::size_t npts = c.pts.size();
  const std::size_t nseg = c.closed ? npts : npts - 1;
  for (std::size_t i = 0; i < nseg; ++i) {
    const Vec2 a = c.pts[i];
    const Vec2 b = c.pts[(i + 1) % npts];
    const Vec2 mid = 0.5 * (a + b);
    const Vec2 d = b - a;
    const double w = dot(lam * mid, d);
    out.omega_integral += w;
    const double fl = std::sqrt(m.conformal_sq(mid)) * norm(d);
    out.energy += fl;
    out.max_excess = std::max(out.max_excess, w - fl);
  }
  out.gap = out.energy - out.omega_integral;
  out.calibrated = out.max_excess <= tol && out.gap >= -tol;
  return out;
}

// Vanishing-loop competitors for W = |p|^qprime with qprime > 2: a radial
// spoke from p0 into the well plus j circumnavigations of a circle whose
// polygon encloses exactly area/j each.  Their energies decrease strictly in
// j toward the unconstrained spoke energy, so the constrained infimum is not
// attained.
struct NonexistenceItem {
  int loops = 0;
  double radius = 0;
  double energy = 0;
  double momentum = 0;
};

inline std::vector<NonexistenceItem> nonexistence_sequence(double qprime, double area, int j_max,
                                                           int nodes_per_loop = 256, Vec2 p0 = {1, 0}) {
  if (!(qprime > 2)) throw precondition_error("nonexistence_sequence: exponent must exceed 2");
  if (area == 0 || !std::isfinite(area)) throw precondition_error("nonexistence_sequence: area must be nonzero");
  if (j_max < 1) throw precondition_error("nonexistence_sequence: need j_max >= 1");
  if (nodes_per_loop < 8) throw precondition_error("nonexistence_sequence: need >= 8 nodes per loop");
  const double r0 = norm(p0);
  if (!(r0 > 0)) throw precondition_error("nonexistence_sequence: start point lies at the well");

  const Potential pot = Potential::radial_power(qprime);
  const Vec2 u = (1.0 / r0) * p0;
  const double theta0 = std::atan2(u.y, u.x);
  const double orient = area > 0 ? 1.0 : -1.0;
  const int m_loop = nodes_per_loop;
  // Polygon with m vertices on a circle of radius r encloses (m/2) sin(2pi/m) r^2.
  const double poly_area_unit = 0.5 * m_loop * std::sin(2.0 * std::numbers::pi / m_loop);

  std::vector<NonexistenceItem> out;
  out.reserve(static_cast<std::size_t>(j_max));
  for (int j = 1; j <= j_max; ++j) {
    const double a_loop = std::abs(area) / j;
    const double r = std::sqrt(a_loop / poly_area_unit);
    std::vector<Vec2> pts;
    pts.reserve(512 + static_cast<std::size_t>(j) * static_cast<std::size_t>(m_loop) + 256);
    const int n_sp1 = 512;
    for (int i = 0; i < n_sp1; ++i) {
      const double s = r0 + (r - r0) * i / (n_sp1 - 1);
      pts.push_back(s * u);
    }
    for (int loop = 0; loop < j; ++loop)
      for (int k = 1; k <= m_loop; ++k) {
        const double ang = theta0 + orient * 2.0 * std::numbers::pi * k / m_loop;
        pts.push_back({r * std::cos(ang), r * std::sin(ang)});
      }
    const int n_sp2 = 256;
    for (int i = 1; i <= n_sp2; ++i) {
      const double s = r * (1.0 - static_cast<double>(i) / n_sp2);
      pts.push_back(s * u);
    }
    pts.back() = {0, 0};
    const SampledCurve c = make_uniform_curve(std::move(pts));
    NonexistenceItem item;
    item.loops = j;
    item.radius = r;
    item.energy = energy(c, pot);
    item.momentum = momentum(c);
    out.push_back(item);
  }
  return out;
}

}  // namespace isoflow
