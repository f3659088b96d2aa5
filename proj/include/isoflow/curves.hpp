#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "isoflow/errors.hpp"
#include "isoflow/potentials.hpp"
#include "isoflow/vec2.hpp"

namespace isoflow {

enum class ParamTag { uniform_t, constant_speed, degenerate_arclength };

inline const char* to_string(ParamTag t) {
  switch (t) {
    case ParamTag::uniform_t: return "uniform-t";
    case ParamTag::constant_speed: return "constant-speed";
    case ParamTag::degenerate_arclength: return "degenerate-arclength";
  }
  return "?";
}

// Planar polyline with a per-node parameter value.  `par` is strictly
// increasing and its meaning is named by `tag`.  When closed, the chord from
// the last point back to the first participates in the functionals.
struct SampledCurve {
  std::vector<Vec2> pts;
  std::vector<double> par;
  ParamTag tag = ParamTag::uniform_t;
  bool closed = false;

  std::size_t size() const { return pts.size(); }

  void validate() const {
    if (pts.size() < 2) throw precondition_error("curve: at least two points required");
    if (par.size() != pts.size()) throw precondition_error("curve: parameter/point length mismatch");
    for (std::size_t i = 1; i < par.size(); ++i)
      if (!(par[i] > par[i - 1])) throw precondition_error("curve: parameter values must increase");
  }
};

inline SampledCurve make_uniform_curve(std::vector<Vec2> pts, bool closed = false) {
  SampledCurve c;
  c.pts = std::move(pts);
  c.par.resize(c.pts.size());
  const double n1 = c.pts.size() > 1 ? static_cast<double>(c.pts.size() - 1) : 1.0;
  for (std::size_t i = 0; i < c.par.size(); ++i) c.par[i] = static_cast<double>(i) / n1;
  c.closed = closed;
  return c;
}

inline SampledCurve straight_segment(Vec2 a, Vec2 b, int n) {
  if (n < 2) throw precondition_error("segment: need n >= 2");
  std::vector<Vec2> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    pts[static_cast<std::size_t>(i)] = a + t * (b - a);
  }
  return make_uniform_curve(std::move(pts));
}

// E(gamma) = int F(gamma)|gamma'| dt, F evaluated at chord midpoints.
inline double energy(const SampledCurve& c, const Potential& pot) {
  c.validate();
  double e = 0;
  const std::size_t m = c.pts.size();
  const std::size_t nseg = c.closed ? m : m - 1;
  for (std::size_t i = 0; i < nseg; ++i) {
    const Vec2 a = c.pts[i];
    const Vec2 b = c.pts[(i + 1) % m];
    e += pot.conformal(0.5 * (a + b)) * dist(a, b);
  }
  return e;
}

// P(gamma) = -int gamma_2 d gamma_1; trapezoid, exact for polylines.
inline double momentum(const SampledCurve& c) {
  c.validate();
  double p = 0;
  const std::size_t m = c.pts.size();
  const std::size_t nseg = c.closed ? m : m - 1;
  for (std::size_t i = 0; i < nseg; ++i) {
    const Vec2 a = c.pts[i];
    const Vec2 b = c.pts[(i + 1) % m];
    p -= 0.5 * (a.y + b.y) * (b.x - a.x);
  }
  return p;
}

inline double euclidean_length(const SampledCurve& c) {
  double l = 0;
  const std::size_t m = c.pts.size();
  const std::size_t nseg = c.closed ? m : m - 1;
  for (std::size_t i = 0; i < nseg; ++i) l += dist(c.pts[i], c.pts[(i + 1) % m]);
  return l;
}

// Concatenation; the first point of `b` must coincide with the last of `a`.
inline SampledCurve concat(const SampledCurve& a, const SampledCurve& b) {
  a.validate();
  b.validate();
  if (dist(a.pts.back(), b.pts.front()) > 1e-12)
    throw precondition_error("concat: endpoint mismatch");
  SampledCurve out;
  out.pts = a.pts;
  out.pts.insert(out.pts.end(), b.pts.begin() + 1, b.pts.end());
  out = make_uniform_curve(std::move(out.pts));
  return out;
}

namespace detail {

// Point at fractional position `s` along the polyline arc, s in [0, total].
struct ArcTable {
  std::vector<double> cum;  // cumulative Euclidean length per node
  const std::vector<Vec2>* pts;

  explicit ArcTable(const std::vector<Vec2>& p) : pts(&p) {
    cum.resize(p.size());
    cum[0] = 0;
    for (std::size_t i = 1; i < p.size(); ++i) cum[i] = cum[i - 1] + dist(p[i], p[i - 1]);
  }
  double total() const { return cum.back(); }
  Vec2 at(double s) const {
    const auto& p = *pts;
    if (s <= 0) return p.front();
    if (s >= cum.back()) return p.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - cum.begin());
    const double seg = cum[i] - cum[i - 1];
    const double t = seg > 0 ? (s - cum[i - 1]) / seg : 0.0;
    return p[i - 1] + t * (p[i] - p[i - 1]);
  }
};

// Walk the polyline placing nodes at equal straight-chord distance `step`
// (first circle/polyline intersection while marching forward).  Returns the
// arclength positions reached; the walk ends when the remaining tail no
// longer crosses the step circle.
inline std::vector<double> chord_walk(const ArcTable& tab, double step, std::size_t max_nodes) {
  std::vector<double> pos{0.0};
  double s = 0;
  Vec2 cur = tab.at(0);
  const double total = tab.total();
  while (pos.size() < max_nodes) {
    const double inc = step * 0.25;
    double a = s, b = s;
    bool bracketed = false;
    while (b < total) {
      b = std::min(total, b + inc);
      if (dist(tab.at(b), cur) >= step) {
        bracketed = true;
        break;
      }
      a = b;
    }
    if (!bracketed) break;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (a + b);
      ((dist(tab.at(mid), cur) < step) ? a : b) = mid;
    }
    s = 0.5 * (a + b);
    cur = tab.at(s);
    pos.push_back(s);
  }
  return pos;
}

// Fractional number of equal chords of length `step` needed to consume the
// polyline: whole chords placed plus the leftover straight distance to the
// endpoint in units of `step`.  Decreasing in `step`.
inline double chord_count(const ArcTable& tab, double step, std::size_t max_nodes) {
  const auto pos = chord_walk(tab, step, max_nodes);
  const double leftover = dist(tab.at(pos.back()), tab.at(tab.total()));
  return static_cast<double>(pos.size() - 1) + leftover / step;
}

}  // namespace detail

// Resample to n nodes with the requested parametrization.  The geometric
// image is preserved (new nodes lie on the old polyline).
inline SampledCurve reparam(const SampledCurve& c, ParamTag target, int n, const Potential* pot = nullptr) {
  c.validate();
  if (n < 2) throw precondition_error("reparam: need n >= 2");
  if (c.closed) throw precondition_error("reparam: closed curves not supported");
  SampledCurve out;
  out.tag = target;
  out.pts.resize(static_cast<std::size_t>(n));
  out.par.resize(static_cast<std::size_t>(n));
  const detail::ArcTable tab(c.pts);
  const double total = tab.total();
  if (total <= 0) throw precondition_error("reparam: degenerate curve");

  switch (target) {
    case ParamTag::uniform_t: {
      // Uniform in the existing parameter.
      const double p0 = c.par.front(), p1 = c.par.back();
      for (int i = 0; i < n; ++i) {
        const double t = p0 + (p1 - p0) * i / (n - 1);
        // Locate t in c.par and interpolate.
        const auto it = std::upper_bound(c.par.begin(), c.par.end(), t);
        std::size_t j = std::min(c.par.size() - 1, static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - c.par.begin())));
        const double seg = c.par[j] - c.par[j - 1];
        const double u = seg > 0 ? (t - c.par[j - 1]) / seg : 0.0;
        out.pts[static_cast<std::size_t>(i)] = c.pts[j - 1] + u * (c.pts[j] - c.pts[j - 1]);
        out.par[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);
      }
      break;
    }
    case ParamTag::constant_speed: {
      // Equal straight-line chords: bisect the chord step so that n-1 equal
      // chords consume the polyline exactly (fractional count == n-1).
      const std::size_t cap = static_cast<std::size_t>(n) * 8 + 64;
      const double want = static_cast<double>(n - 1);
      double hi = total / want;  // chord <= arc, so count(hi) <= n-1 + leftover
      while (detail::chord_count(tab, hi, cap) > want) hi *= 1.25;
      double lo = hi;
      while (detail::chord_count(tab, lo, cap) < want) lo *= 0.75;
      for (int it = 0; it < 100 && (hi - lo) > 1e-15 * total; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((detail::chord_count(tab, mid, cap) >= want) ? lo : hi) = mid;
      }
      const double step = 0.5 * (lo + hi);
      auto pos = detail::chord_walk(tab, step, static_cast<std::size_t>(n) - 1);
      while (static_cast<int>(pos.size()) < n) pos.push_back(total);
      for (int i = 0; i < n; ++i) {
        out.pts[static_cast<std::size_t>(i)] = tab.at(pos[static_cast<std::size_t>(i)]);
        out.par[static_cast<std::size_t>(i)] = step * i;
      }
      out.pts.back() = c.pts.back();
      break;
    }
    case ParamTag::degenerate_arclength: {
      if (pot == nullptr) throw precondition_error("reparam: degenerate arclength requires a potential");
      // Cumulative degenerate length along the polyline, with chord subdivision.
      const int sub = 8;
      std::vector<double> s_nodes, e_nodes;
      s_nodes.reserve((c.pts.size() - 1) * sub + 1);
      e_nodes.reserve(s_nodes.capacity());
      s_nodes.push_back(0);
      e_nodes.push_back(0);
      double acc = 0;
      for (std::size_t i = 0; i + 1 < c.pts.size(); ++i) {
        const Vec2 a = c.pts[i], b = c.pts[i + 1];
        const double len = dist(a, b);
        for (int k = 0; k < sub; ++k) {
          const Vec2 mid = a + ((k + 0.5) / sub) * (b - a);
          const double w = pot->value(mid);
          const bool interior = !(i == 0 && k == 0) && !(i + 2 == c.pts.size() && k + 1 == sub);
          if (w <= 0 && interior)
            throw degeneracy_error("reparam: conformal factor vanishes at an interior point");
          acc += std::sqrt(std::max(0.0, w)) * len / sub;
          s_nodes.push_back(tab.cum[i] + len * (k + 1) / sub);
          e_nodes.push_back(acc);
        }
      }
      const double etotal = acc;
      if (etotal <= 0) throw degeneracy_error("reparam: zero degenerate length");
      for (int i = 0; i < n; ++i) {
        const double target_e = etotal * i / (n - 1);
        const auto it = std::upper_bound(e_nodes.begin(), e_nodes.end(), target_e);
        std::size_t j = std::min(e_nodes.size() - 1, static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - e_nodes.begin())));
        const double seg = e_nodes[j] - e_nodes[j - 1];
        const double u = seg > 0 ? (target_e - e_nodes[j - 1]) / seg : 0.0;
        const double s = s_nodes[j - 1] + u * (s_nodes[j] - s_nodes[j - 1]);
        out.pts[static_cast<std::size_t>(i)] = tab.at(s);
        out.par[static_cast<std::size_t>(i)] = target_e;
      }
      out.pts.front() = c.pts.front();
      out.pts.back() = c.pts.back();
      break;
    }
  }
  return out;
}

inline void write_curve_csv(const std::string& path, const SampledCurve& c) {
  c.validate();
  std::ofstream f(path);
  if (!f) throw precondition_error("cannot open for writing: " + path);
  f << "param,x,y\n";
  char buf[128];
  for (std::size_t i = 0; i < c.pts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", c.par[i], c.pts[i].x, c.pts[i].y);
    f << buf;
  }
  if (!f) throw precondition_error("write failed: " + path);
}

inline SampledCurve read_curve_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw precondition_error("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line)) throw precondition_error("empty curve file: " + path);
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.pop_back();
    return s;
  };
  if (strip(line) != "param,x,y") throw precondition_error("curve file: expected header param,x,y");
  SampledCurve c;
  while (std::getline(f, line)) {
    line = strip(line);
    if (line.empty()) continue;
    double p, x, y;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &p, &x, &y) != 3)
      throw precondition_error("curve file: malformed row: " + line);
    c.par.push_back(p);
    c.pts.push_back({x, y});
  }
  c.validate();
  return c;
}

}  // namespace isoflow
