#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "isoflow/errors.hpp"
#include "isoflow/numerics.hpp"
#include "isoflow/vec2.hpp"

namespace isoflow {

enum class PotentialKind {
  quadratic_one_well,
  radial_power,
  radial_analytic_one_well,
  separable_double_well,
  general_callable,
};

inline const char* to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::quadratic_one_well: return "quadratic-one-well";
    case PotentialKind::radial_power: return "radial-power";
    case PotentialKind::radial_analytic_one_well: return "radial-analytic-one-well";
    case PotentialKind::separable_double_well: return "separable-double-well";
    case PotentialKind::general_callable: return "general-callable";
  }
  return "?";
}

struct EvalResult {
  double W = 0;
  Vec2 grad{0, 0};
  Mat2 hess{};
};

// Local quadratic data at a well: W ~ lambda1_sq*u1^2 + lambda2_sq*u2^2 in the
// eigenframe (u1, u2) = ((p - center).v1, (p - center).v2), valid for |p - center| <= rho.
struct WellData {
  Vec2 center{0, 0};
  double lambda1_sq = 0;  // <= lambda2_sq
  double lambda2_sq = 0;
  Vec2 v1{1, 0};
  Vec2 v2{0, 1};
  double rho = 0;

  double lambda1() const { return std::sqrt(lambda1_sq); }
  double lambda2() const { return std::sqrt(lambda2_sq); }

  Vec2 to_local(Vec2 p) const {
    const Vec2 d = p - center;
    return {dot(d, v1), dot(d, v2)};
  }
  Vec2 to_global(Vec2 u) const { return center + u.x * v1 + u.y * v2; }

  // rtilde(p) = (lambda1*u1^2 + lambda2*u2^2)/2; the degenerate distance to the well.
  double rtilde(Vec2 p) const {
    const Vec2 u = to_local(p);
    return 0.5 * (lambda1() * u.x * u.x + lambda2() * u.y * u.y);
  }
};

class Potential {
 public:
  static Potential quadratic(const Mat2& H, Vec2 center = {0, 0}) {
    if (H.a01 != H.a10) throw precondition_error("quadratic potential: Hessian matrix must be symmetric");
    const SymEigen2 e = sym_eigen(H);
    if (e.ev1 <= 0) throw precondition_error("quadratic potential: matrix must be positive definite");
    Potential pot(PotentialKind::quadratic_one_well);
    pot.wells_ = {center};
    pot.H_ = H;
    return pot;
  }

  // W(p) = |p - center|^qprime.  qprime >= 2 keeps W of class C^2.
  static Potential radial_power(double qprime, Vec2 center = {0, 0}) {
    if (!(qprime >= 2.0)) throw precondition_error("radial-power potential: exponent must be >= 2");
    Potential pot(PotentialKind::radial_power);
    pot.wells_ = {center};
    pot.qprime_ = qprime;
    return pot;
  }

  // W(p) = r^2 + a1 r^4 + a2 r^6 + ..., r = |p|.  Evaluation is only allowed
  // for r <= validity_radius; W must stay nonnegative there.
  static Potential radial_analytic(std::vector<double> a, double validity_radius) {
    if (!(validity_radius > 0)) throw precondition_error("radial-analytic potential: validity radius must be positive");
    Potential pot(PotentialKind::radial_analytic_one_well);
    pot.wells_ = {Vec2{0, 0}};
    pot.coeffs_ = std::move(a);
    pot.validity_radius_ = validity_radius;
    for (int i = 0; i <= 256; ++i) {
      const double r = validity_radius * static_cast<double>(i) / 256.0;
      if (pot.radial_value(r * r) < 0)
        throw precondition_error("radial-analytic potential: W < 0 inside the validity radius");
    }
    return pot;
  }

  // The double-well example W(p) = w(p1) + p2^2 with wells (+-1, 0):
  // w(x) = (x - 1)^2 for x >= 1/2, even in x, and the unique even quartic
  // bridge 5/8 - 2x^2 + 2x^4 on (-1/2, 1/2) matching value, slope and
  // curvature at the seams; w > 1/4 strictly inside.
  static Potential separable_double_well() {
    Potential pot(PotentialKind::separable_double_well);
    pot.wells_ = {Vec2{-1, 0}, Vec2{1, 0}};
    return pot;
  }

  static Potential general(std::function<EvalResult(Vec2)> f, std::vector<Vec2> wells) {
    if (!f) throw precondition_error("general potential: callable required");
    if (wells.empty()) throw precondition_error("general potential: at least one well required");
    Potential pot(PotentialKind::general_callable);
    pot.wells_ = std::move(wells);
    pot.fn_ = std::move(f);
    return pot;
  }

  PotentialKind kind() const { return kind_; }
  const std::vector<Vec2>& wells() const { return wells_; }
  double qprime() const { return qprime_; }
  const Mat2& quadratic_matrix() const { return H_; }
  const std::vector<double>& radial_coefficients() const { return coeffs_; }
  double validity_radius() const { return validity_radius_; }

  EvalResult eval(Vec2 p) const {
    switch (kind_) {
      case PotentialKind::quadratic_one_well: {
        const Vec2 d = p - wells_[0];
        const Vec2 Hd = H_ * d;
        return {dot(d, Hd), 2.0 * Hd, 2.0 * H_};
      }
      case PotentialKind::radial_power: {
        const Vec2 d = p - wells_[0];
        const double r2 = sqnorm(d);
        const double q = qprime_;
        if (r2 == 0) {
          Mat2 h{};
          if (q == 2.0) h = Mat2::diag(2.0, 2.0);
          return {0.0, Vec2{0, 0}, h};
        }
        const double rq2 = std::pow(r2, 0.5 * q - 1.0);  // r^(q-2)
        const double W = rq2 * r2;
        const Vec2 g = (q * rq2) * d;
        // hess = q r^(q-2) I + q(q-2) r^(q-4) d d^T
        const double c = q * (q - 2.0) * (r2 > 0 ? rq2 / r2 : 0.0);
        Mat2 h{q * rq2 + c * d.x * d.x, c * d.x * d.y, c * d.x * d.y, q * rq2 + c * d.y * d.y};
        return {W, g, h};
      }
      case PotentialKind::radial_analytic_one_well: {
        const double s = sqnorm(p);
        if (s > validity_radius_ * validity_radius_ * (1.0 + 1e-12))
          throw domain_error("radial-analytic potential: evaluation outside validity radius");
        const double W = radial_value(s);
        const double d1 = radial_d1(s);
        const double d2 = radial_d2(s);
        const Vec2 g = (2.0 * d1) * p;
        Mat2 h{2.0 * d1 + 4.0 * d2 * p.x * p.x, 4.0 * d2 * p.x * p.y,
               4.0 * d2 * p.x * p.y, 2.0 * d1 + 4.0 * d2 * p.y * p.y};
        return {W, g, h};
      }
      case PotentialKind::separable_double_well: {
        const auto [w, w1, w2] = separable_w(p.x);
        return {w + p.y * p.y, Vec2{w1, 2.0 * p.y}, Mat2{w2, 0, 0, 2.0}};
      }
      case PotentialKind::general_callable:
        return fn_(p);
    }
    throw precondition_error("potential: bad kind");
  }

  double value(Vec2 p) const {
    switch (kind_) {
      case PotentialKind::quadratic_one_well: {
        const Vec2 d = p - wells_[0];
        return dot(d, H_ * d);
      }
      case PotentialKind::radial_power:
        return std::pow(sqnorm(p - wells_[0]), 0.5 * qprime_);
      case PotentialKind::radial_analytic_one_well: {
        const double s = sqnorm(p);
        if (s > validity_radius_ * validity_radius_ * (1.0 + 1e-12))
          throw domain_error("radial-analytic potential: evaluation outside validity radius");
        return radial_value(s);
      }
      case PotentialKind::separable_double_well:
        return std::get<0>(separable_w(p.x)) + p.y * p.y;
      case PotentialKind::general_callable:
        return fn_(p).W;
    }
    throw precondition_error("potential: bad kind");
  }

  double conformal(Vec2 p) const { return std::sqrt(std::max(0.0, value(p))); }

 private:
  explicit Potential(PotentialKind k) : kind_(k) {}

  // (w, w', w'') of the 1-D double-well profile.
  static std::tuple<double, double, double> separable_w(double x) {
    if (x >= 0.5) {
      const double d = x - 1.0;
      return {d * d, 2.0 * d, 2.0};
    }
    if (x <= -0.5) {
      const double d = x + 1.0;
      return {d * d, 2.0 * d, 2.0};
    }
    const double x2 = x * x;
    return {0.625 - 2.0 * x2 + 2.0 * x2 * x2, -4.0 * x + 8.0 * x2 * x, -4.0 + 24.0 * x2};
  }

  // W as a function of s = r^2:  s + sum_k coeffs_[k] s^(k+2), plus derivatives in s.
  double radial_value(double s) const {
    double acc = 0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) acc = acc * s + coeffs_[k];
    return s + acc * s * s;
  }
  double radial_d1(double s) const {
    double acc = 0;
    for (std::size_t k = coeffs_.size(); k-- > 0;)
      acc = acc * s + static_cast<double>(k + 2) * coeffs_[k];
    return 1.0 + acc * s;
  }
  double radial_d2(double s) const {
    double acc = 0;
    for (std::size_t k = coeffs_.size(); k-- > 0;)
      acc = acc * s + static_cast<double>((k + 2) * (k + 1)) * coeffs_[k];
    return acc;
  }

  PotentialKind kind_;
  std::vector<Vec2> wells_;
  Mat2 H_ = Mat2::identity();
  double qprime_ = 2.0;
  std::vector<double> coeffs_;
  double validity_radius_ = 0;
  std::function<EvalResult(Vec2)> fn_;
};

namespace detail {

// Largest radius around `center` on which W agrees with its quadratic model
// to 1e-9 relative, probed on rings; capped by r_max.
inline double quadratic_match_radius(const Potential& pot, Vec2 center, const SymEigen2& e, double r_max) {
  const auto mismatch_ok = [&](double r) {
    for (int i = 0; i < 64; ++i) {
      const double ang = 2.0 * std::numbers::pi * i / 64.0;
      const Vec2 p = center + Vec2{r * std::cos(ang), r * std::sin(ang)};
      double w;
      try {
        w = pot.value(p);
      } catch (const domain_error&) {
        return false;
      }
      const Vec2 d = p - center;
      const Vec2 u{dot(d, e.v1), dot(d, e.v2)};
      // e holds the eigensystem of half the Hessian, so the quadratic model
      // of W is ev1*u1^2 + ev2*u2^2 directly.
      const double wq = e.ev1 * u.x * u.x + e.ev2 * u.y * u.y;
      if (std::abs(w - wq) > 1e-9 * std::max(wq, 1e-30)) return false;
    }
    return true;
  };
  if (mismatch_ok(r_max)) return r_max;
  double lo = 0, hi = r_max;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mismatch_ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace detail

inline WellData well_data(const Potential& pot, int which) {
  const auto& ws = pot.wells();
  if (which < 0 || which >= static_cast<int>(ws.size()))
    throw precondition_error("well_data: well index out of range");
  const Vec2 center = ws[which];
  const Mat2 hess = pot.eval(center).hess;
  const Mat2 half{0.5 * hess.a00, 0.5 * hess.a01, 0.5 * hess.a10, 0.5 * hess.a11};
  const SymEigen2 e = sym_eigen(half);
  const double scale = std::max({std::abs(e.ev1), std::abs(e.ev2), 1.0});
  if (e.ev1 < 1e-9 * scale)
    throw degeneracy_error("well_data: degenerate Hessian at the well");
  double r_max = 1e3;
  for (std::size_t j = 0; j < ws.size(); ++j)
    if (static_cast<int>(j) != which) r_max = std::min(r_max, 0.5 * dist(center, ws[j]));
  if (pot.kind() == PotentialKind::radial_analytic_one_well)
    r_max = std::min(r_max, pot.validity_radius() * (1.0 - 1e-9));
  WellData wd;
  wd.center = center;
  wd.lambda1_sq = e.ev1;
  wd.lambda2_sq = e.ev2;
  wd.v1 = e.v1;
  wd.v2 = e.v2;
  wd.rho = detail::quadratic_match_radius(pot, center, e, r_max);
  return wd;
}

struct GridSpec {
  int n = 201;         // nodes per axis
  double halfwidth = 0;  // 0: derive from well layout
};

struct HypothesisItem {
  bool pass = true;
  bool applicable = true;
  Vec2 witness{0, 0};
  double value = 0;
  std::string note;
};

struct HypothesesReport {
  HypothesisItem w1, w2, w3, w6;
  bool w4_quadratic_near_wells = false;
  double lambda = 0;     // min Hessian eigenvalue over wells
  double c0_growth = 0;  // grad W . p >= c0 |p|^2 for |p| >= R0
  double R0 = 0;
  double m0 = 0;        // inf of F outside the well balls
  double c0_lower = 0;  // F >= c0 |p - well| inside the balls
  double c1_upper = 0;  // F <= c1 |p - well| inside the balls
  double r_minus = 0;   // ball radius used for the fits
  double epsilon0 = 0;  // (c0/c1) * pi/(2+pi) * r_minus^2

  bool all_pass() const { return w1.pass && w2.pass && w3.pass && w6.pass; }
};

inline HypothesesReport check_hypotheses(const Potential& pot, GridSpec grid = {}) {
  if (grid.n < 3) throw precondition_error("check_hypotheses: grid too small");
  const auto& ws = pot.wells();
  HypothesesReport rep;

  double r_extent = 0;
  for (const Vec2& w : ws) r_extent = std::max(r_extent, norm(w));
  rep.R0 = r_extent + 1.0;
  double hw = grid.halfwidth > 0 ? grid.halfwidth : std::max(rep.R0, 2.0);
  if (pot.kind() == PotentialKind::radial_analytic_one_well)
    hw = std::min(hw, pot.validity_radius() / std::sqrt(2.0) * (1.0 - 1e-9));

  // Well ball radius: quadratic-match radius capped by half the well separation.
  double r_minus = hw / 4.0;
  double lambda = std::numeric_limits<double>::infinity();
  bool degenerate_well = false;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const Mat2 h = pot.eval(ws[i]).hess;
    const SymEigen2 e = sym_eigen(h);
    lambda = std::min(lambda, e.ev1);
    if (e.ev1 < 1e-9) {
      degenerate_well = true;
      rep.w2.pass = false;
      rep.w2.witness = ws[i];
      rep.w2.value = e.ev1;
      rep.w2.note = "Hessian at the well is not positive definite";
    }
    if (!degenerate_well) {
      try {
        const WellData wd = well_data(pot, static_cast<int>(i));
        r_minus = std::min(r_minus, wd.rho);
      } catch (const degeneracy_error&) {
        degenerate_well = true;
      }
    }
  }
  for (std::size_t i = 0; i < ws.size(); ++i)
    for (std::size_t j = i + 1; j < ws.size(); ++j)
      r_minus = std::min(r_minus, 0.5 * dist(ws[i], ws[j]));
  rep.lambda = std::isfinite(lambda) ? lambda : 0.0;
  rep.w2.value = rep.lambda;
  rep.r_minus = r_minus;

  // Grid sweep for (W1), (W6) and the ball fits.
  const double h = 2.0 * hw / (grid.n - 1);
  double min_w = std::numeric_limits<double>::infinity();
  double max_w = 0;
  double m0 = std::numeric_limits<double>::infinity();
  double c0_lower = std::numeric_limits<double>::infinity();
  double c1_upper = 0;
  bool any_outside = false;
  for (int iy = 0; iy < grid.n; ++iy) {
    const double y = -hw + h * iy;
    for (int ix = 0; ix < grid.n; ++ix) {
      const double x = -hw + h * ix;
      const Vec2 p{x, y};
      double w;
      try {
        w = pot.value(p);
      } catch (const domain_error&) {
        continue;
      }
      min_w = std::min(min_w, w);
      max_w = std::max(max_w, w);
      double dmin = std::numeric_limits<double>::infinity();
      for (const Vec2& wc : ws) dmin = std::min(dmin, dist(p, wc));
      if (w <= 1e-12 * std::max(1.0, max_w) && dmin > 1e-3 && rep.w1.pass) {
        rep.w1.pass = false;
        rep.w1.witness = p;
        rep.w1.value = w;
        rep.w1.note = "W vanishes away from the wells";
      }
      if (w < -1e-12 && rep.w1.pass) {
        rep.w1.pass = false;
        rep.w1.witness = p;
        rep.w1.value = w;
        rep.w1.note = "W negative";
      }
      if (dmin > r_minus) {
        any_outside = true;
        m0 = std::min(m0, std::sqrt(std::max(0.0, w)));
      } else if (dmin > 1e-9) {
        const double ratio = std::sqrt(std::max(0.0, w)) / dmin;
        c0_lower = std::min(c0_lower, ratio);
        c1_upper = std::max(c1_upper, ratio);
      }
    }
  }
  rep.m0 = any_outside ? m0 : 0.0;

  // Refine the ball constants on dedicated rings (the grid rarely hits the balls well).
  for (const Vec2& wc : ws) {
    for (int ir = 1; ir <= 24; ++ir) {
      const double r = r_minus * ir / 24.0;
      for (int ia = 0; ia < 64; ++ia) {
        const double ang = 2.0 * std::numbers::pi * ia / 64.0;
        const Vec2 p = wc + Vec2{r * std::cos(ang), r * std::sin(ang)};
        double w;
        try {
          w = pot.value(p);
        } catch (const domain_error&) {
          continue;
        }
        const double ratio = std::sqrt(std::max(0.0, w)) / r;
        c0_lower = std::min(c0_lower, ratio);
        c1_upper = std::max(c1_upper, ratio);
      }
    }
  }
  rep.c0_lower = std::isfinite(c0_lower) ? c0_lower : 0.0;
  rep.c1_upper = c1_upper;
  rep.epsilon0 = c1_upper > 0 ? (rep.c0_lower / c1_upper) * (std::numbers::pi / (2.0 + std::numbers::pi)) * r_minus * r_minus
                              : 0.0;

  // (W3): grad W . p >= c0 |p|^2 on rings beyond R0.
  {
    double c0 = std::numeric_limits<double>::infinity();
    bool evaluated = false;
    const double r_hi = std::max(2.0 * rep.R0, hw * 1.4);
    for (int ir = 0; ir <= 24; ++ir) {
      const double r = rep.R0 + (r_hi - rep.R0) * ir / 24.0;
      for (int ia = 0; ia < 128; ++ia) {
        const double ang = 2.0 * std::numbers::pi * ia / 128.0;
        const Vec2 p{r * std::cos(ang), r * std::sin(ang)};
        try {
          const EvalResult ev = pot.eval(p);
          const double ratio = dot(ev.grad, p) / sqnorm(p);
          evaluated = true;
          if (ratio < c0) {
            c0 = ratio;
            rep.w3.witness = p;
          }
        } catch (const domain_error&) {
        }
      }
    }
    if (!evaluated) {
      rep.w3.applicable = false;
      rep.w3.note = "growth ring outside the potential's validity region";
    } else {
      rep.c0_growth = c0;
      rep.w3.value = c0;
      rep.w3.pass = c0 > 0;
      if (!rep.w3.pass) rep.w3.note = "radial growth fails beyond R0";
    }
  }

  // (W6): wells on the p1-axis and W(p1, p2) >= W(p1, 0).
  if (ws.size() == 2) {
    for (const Vec2& wc : ws)
      if (std::abs(wc.y) > 1e-12) {
        rep.w6.pass = false;
        rep.w6.witness = wc;
        rep.w6.note = "well off the p1-axis";
      }
    if (rep.w6.pass) {
      for (int ix = 0; ix < grid.n && rep.w6.pass; ++ix) {
        const double x = -hw + h * ix;
        double w0;
        try {
          w0 = pot.value({x, 0});
        } catch (const domain_error&) {
          continue;
        }
        for (int iy = 0; iy < grid.n; ++iy) {
          const double y = -hw + h * iy;
          double w;
          try {
            w = pot.value({x, y});
          } catch (const domain_error&) {
            continue;
          }
          if (w < w0 - 1e-12) {
            rep.w6.pass = false;
            rep.w6.witness = {x, y};
            rep.w6.value = w - w0;
            rep.w6.note = "column minimum off the axis";
            break;
          }
        }
      }
    }
  } else {
    rep.w6.applicable = false;
    rep.w6.note = "single-well potential";
  }

  switch (pot.kind()) {
    case PotentialKind::quadratic_one_well:
    case PotentialKind::separable_double_well:
    case PotentialKind::radial_analytic_one_well:
      rep.w4_quadratic_near_wells = !degenerate_well;
      break;
    case PotentialKind::radial_power:
      rep.w4_quadratic_near_wells = pot.qprime() == 2.0;
      break;
    case PotentialKind::general_callable:
      rep.w4_quadratic_near_wells = false;
      break;
  }
  return rep;
}

}  // namespace isoflow
