#include "robinspec/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace robinspec {

namespace {

constexpr double kPi = 3.14159265358979323846;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// ---------------------------------------------------------------------------
// straight segment
// ---------------------------------------------------------------------------

class StraightCurve final : public SideCurve {
 public:
  StraightCurve(const Vec2& p, const Vec2& q) : p_(p), d_(q - p) {
    len_ = d_.norm();
    if (!(len_ > 0.0) || !std::isfinite(len_))
      fail(ErrorCode::SingularGeometry, "zero-length segment");
    d_ /= len_;
  }
  double length() const override { return len_; }
  Vec2 point(double s) const override { return p_ + s * d_; }
  Vec2 tangent(double) const override { return d_; }
  double curvature(double) const override { return 0.0; }
  double project(const Vec2& x, double) const override {
    return std::clamp(d_.dot(x - p_), 0.0, len_);
  }
  std::shared_ptr<const SideCurve> inner_offset(double delta, double s0,
                                                double s1) const override {
    if (!(s0 < s1)) fail(ErrorCode::BadInput, "offset range must be increasing");
    const Vec2 nu(d_.y(), -d_.x());
    return std::make_shared<StraightCurve>(point(s0) - delta * nu,
                                           point(s1) - delta * nu);
  }

 private:
  Vec2 p_, d_;
  double len_;
};

// ---------------------------------------------------------------------------
// circular arc
// ---------------------------------------------------------------------------

class ArcCurve final : public SideCurve {
 public:
  /// dir = +1 traverses ccw (curvature +1/r), dir = -1 cw.
  ArcCurve(const Vec2& center, double radius, double start_angle, double dir,
           double len)
      : c_(center), r_(radius), phi0_(start_angle), dir_(dir), len_(len) {
    if (!(radius > 0.0) || !(len > 0.0))
      fail(ErrorCode::SingularGeometry, "degenerate arc");
  }
  double length() const override { return len_; }
  Vec2 point(double s) const override {
    const double phi = angle(s);
    return c_ + r_ * Vec2(std::cos(phi), std::sin(phi));
  }
  Vec2 tangent(double s) const override {
    const double phi = angle(s);
    return dir_ * Vec2(-std::sin(phi), std::cos(phi));
  }
  double curvature(double) const override { return dir_ / r_; }
  double project(const Vec2& x, double) const override {
    const Vec2 v = x - c_;
    if (v.norm() < 1e-14 * r_) return 0.0;  // center: any parameter is closest
    // relative swept angle of x, reduced to [0, 2*pi)
    double xi = dir_ * (std::atan2(v.y(), v.x()) - phi0_);
    xi -= 2.0 * kPi * std::floor(xi / (2.0 * kPi));
    const double sweep = len_ / r_;
    if (xi <= sweep) return r_ * xi;
    return (xi - sweep < 2.0 * kPi - xi) ? len_ : 0.0;
  }
  std::shared_ptr<const SideCurve> inner_offset(double delta, double s0,
                                                double s1) const override {
    if (!(s0 < s1)) fail(ErrorCode::BadInput, "offset range must be increasing");
    // inward parallel of an arc is the concentric arc at radius r -/+ delta
    const double r2 = r_ - dir_ * delta;
    if (r2 < 0.1 * r_)
      fail(ErrorCode::DeltaTooLarge, "inward parallel of arc degenerates");
    return std::make_shared<ArcCurve>(c_, r2, angle(s0), dir_,
                                      r2 * (s1 - s0) / r_);
  }

 private:
  double angle(double s) const { return phi0_ + dir_ * s / r_; }
  Vec2 c_;
  double r_, phi0_, dir_, len_;
};

// ---------------------------------------------------------------------------
// interpolating cubic spline, reparametrized to arc length
// ---------------------------------------------------------------------------

/// Natural or clamped cubic spline through (t_i, values_i); standard
/// tridiagonal solve for the knot second derivatives.
struct Cubic1D {
  std::vector<double> t, y, m;  // knots, values, second derivatives

  void build(const std::vector<double>& knots, const std::vector<double>& vals,
             bool clamped, double d0, double d1) {
    t = knots;
    y = vals;
    const int n = static_cast<int>(t.size());
    m.assign(n, 0.0);
    if (n < 3 && !clamped) return;  // natural with 2 points: straight line
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), r(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
      const double hl = t[i] - t[i - 1], hr = t[i + 1] - t[i];
      a[i] = hl / 6.0;
      b[i] = (hl + hr) / 3.0;
      c[i] = hr / 6.0;
      r[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
    }
    if (clamped) {
      const double h0 = t[1] - t[0], hn = t[n - 1] - t[n - 2];
      b[0] = h0 / 3.0;
      c[0] = h0 / 6.0;
      r[0] = (y[1] - y[0]) / h0 - d0;
      a[n - 1] = hn / 6.0;
      b[n - 1] = hn / 3.0;
      r[n - 1] = d1 - (y[n - 1] - y[n - 2]) / hn;
    } else {
      b[0] = 1.0;
      b[n - 1] = 1.0;  // natural: m = 0 at the ends
    }
    // Thomas algorithm
    for (int i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      r[i] -= w * r[i - 1];
    }
    m[n - 1] = r[n - 1] / b[n - 1];
    for (int i = n - 2; i >= 0; --i) m[i] = (r[i] - c[i] * m[i + 1]) / b[i];
  }

  int interval(double x) const {
    int lo = 0, hi = static_cast<int>(t.size()) - 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (t[mid] <= x ? lo : hi) = mid;
    }
    return lo;
  }

  double eval(double x, int i) const {
    const double h = t[i + 1] - t[i], u = (t[i + 1] - x) / h, v = (x - t[i]) / h;
    return u * y[i] + v * y[i + 1] +
           ((u * u * u - u) * m[i] + (v * v * v - v) * m[i + 1]) * h * h / 6.0;
  }
  double deriv(double x, int i) const {
    const double h = t[i + 1] - t[i], u = (t[i + 1] - x) / h, v = (x - t[i]) / h;
    return (y[i + 1] - y[i]) / h +
           ((3.0 * v * v - 1.0) * m[i + 1] - (3.0 * u * u - 1.0) * m[i]) * h / 6.0;
  }
  double deriv2(double x, int i) const {
    const double h = t[i + 1] - t[i], u = (t[i + 1] - x) / h, v = (x - t[i]) / h;
    return u * m[i] + v * m[i + 1];
  }
};

class SplineCurve final : public SideCurve {
 public:
  SplineCurve(const std::vector<Vec2>& pts, bool clamped, const Vec2& d0,
              const Vec2& d1) {
    const int n = static_cast<int>(pts.size());
    if (n < 2) fail(ErrorCode::BadInput, "need at least two sample points");
    std::vector<double> t(n), xs(n), ys(n);
    t[0] = 0.0;
    for (int i = 0; i < n; ++i) {
      xs[i] = pts[i].x();
      ys[i] = pts[i].y();
      if (i > 0) {
        const double d = (pts[i] - pts[i - 1]).norm();
        if (!(d > 0.0))
          fail(ErrorCode::SingularGeometry, "repeated sample point");
        t[i] = t[i - 1] + d;
      }
    }
    // clamped end derivatives are w.r.t. the chord parameter: unit tangents
    x_.build(t, xs, clamped, d0.x(), d1.x());
    y_.build(t, ys, clamped, d0.y(), d1.y());
    build_arclength_table();
    validate_unit_speed();
  }

  double length() const override { return len_; }
  Vec2 point(double s) const override {
    const double t = t_of_s(s);
    const int i = x_.interval(t);
    return {x_.eval(t, i), y_.eval(t, i)};
  }
  Vec2 tangent(double s) const override {
    const double t = t_of_s(s);
    const int i = x_.interval(t);
    Vec2 d(x_.deriv(t, i), y_.deriv(t, i));
    const double n = d.norm();
    if (n < 1e-12) fail(ErrorCode::SingularGeometry, "cusp on spline side");
    return d / n;
  }
  double curvature(double s) const override {
    const double t = t_of_s(s);
    const int i = x_.interval(t);
    const Vec2 d(x_.deriv(t, i), y_.deriv(t, i));
    const Vec2 dd(x_.deriv2(t, i), y_.deriv2(t, i));
    const double n = d.norm();
    return cross2(d, dd) / (n * n * n);
  }

 private:
  double speed(double t) const {
    const int i = x_.interval(t);
    return Vec2(x_.deriv(t, i), y_.deriv(t, i)).norm();
  }

  void build_arclength_table() {
    // composite 5-point Gauss-Legendre per fine subinterval
    static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double gw[5] = {0.2369268850561891, 0.4786286704993665,
                                 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};
    const int nk = static_cast<int>(x_.t.size());
    const int sub = 8;
    table_t_.clear();
    table_s_.clear();
    table_t_.push_back(x_.t.front());
    table_s_.push_back(0.0);
    double s = 0.0;
    for (int i = 0; i + 1 < nk; ++i) {
      const double h = (x_.t[i + 1] - x_.t[i]) / sub;
      for (int j = 0; j < sub; ++j) {
        const double ta = x_.t[i] + j * h, tb = ta + h;
        double acc = 0.0;
        for (int g = 0; g < 5; ++g)
          acc += gw[g] * speed(0.5 * (ta + tb) + 0.5 * h * gx[g]);
        s += acc * 0.5 * h;
        table_t_.push_back(tb);
        table_s_.push_back(s);
      }
    }
    len_ = s;
    if (!(len_ > 0.0)) fail(ErrorCode::SingularGeometry, "zero-length spline");
  }

  double t_of_s(double s) const {
    s = std::clamp(s, 0.0, len_);
    int lo = 0, hi = static_cast<int>(table_s_.size()) - 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (table_s_[mid] <= s ? lo : hi) = mid;
    }
    // Newton on s(t) with a guarded bracket
    double ta = table_t_[lo], tb = table_t_[hi];
    double t = ta + (tb - ta) * (s - table_s_[lo]) /
                        std::max(table_s_[hi] - table_s_[lo], 1e-300);
    double sa = table_s_[lo];
    for (int it = 0; it < 40; ++it) {
      // arc length from ta to t by 5-point Gauss (short span, high order)
      static const double gx[5] = {-0.9061798459386640, -0.5384693101056831,
                                   0.0, 0.5384693101056831, 0.9061798459386640};
      static const double gw[5] = {0.2369268850561891, 0.4786286704993665,
                                   0.5688888888888889, 0.4786286704993665,
                                   0.2369268850561891};
      double acc = 0.0;
      for (int g = 0; g < 5; ++g)
        acc += gw[g] * speed(0.5 * (ta + t) + 0.5 * (t - ta) * gx[g]);
      const double st = sa + acc * 0.5 * (t - ta);
      const double err = st - s;
      if (std::abs(err) <= 1e-12 * (1.0 + len_)) return t;
      const double step = err / std::max(speed(t), 1e-12);
      t = std::clamp(t - step, ta, tb);
    }
    fail(ErrorCode::SingularGeometry, "arc-length inversion did not converge");
  }

  void validate_unit_speed() const {
    const int n = 256;
    const double ds = len_ * 1e-4;
    for (int i = 1; i < n; ++i) {
      const double s = len_ * i / n;
      if (s - ds < 0.0 || s + ds > len_) continue;
      const double fd = (point(s + ds) - point(s - ds)).norm() / (2.0 * ds);
      if (std::abs(fd - 1.0) > 1e-6)
        fail(ErrorCode::SingularGeometry,
             "arc-length parametrization failed the unit-speed check");
    }
  }

  Cubic1D x_, y_;
  std::vector<double> table_t_, table_s_;
  double len_ = 0.0;
};

}  // namespace

// ---------------------------------------------------------------------------
// SideCurve defaults and factories
// ---------------------------------------------------------------------------

double SideCurve::project(const Vec2& p, double hint) const {
  const double L = length();
  double best_s = 0.0;
  double best_d = std::numeric_limits<double>::infinity();
  if (hint >= 0.0) {
    best_s = std::clamp(hint, 0.0, L);
    best_d = (point(best_s) - p).squaredNorm();
  } else {
    const int n = 128;
    for (int i = 0; i <= n; ++i) {
      const double s = L * i / n;
      const double d = (point(s) - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best_s = s;
      }
    }
  }
  double s = best_s;
  for (int it = 0; it < 30; ++it) {
    const Vec2 g = point(s), t = tangent(s);
    const double f = (g - p).dot(t);
    const Vec2 nu(t.y(), -t.x());
    const double fp = 1.0 - curvature(s) * (g - p).dot(-nu);
    if (std::abs(fp) < 1e-14) break;
    const double s2 = std::clamp(s - f / fp, 0.0, L);
    if (std::abs(s2 - s) <= 1e-13 * (1.0 + L)) return s2;
    s = s2;
  }
  return s;
}

std::shared_ptr<const SideCurve> SideCurve::inner_offset(double delta, double s0,
                                                         double s1) const {
  if (!(s0 < s1)) fail(ErrorCode::BadInput, "offset range must be increasing");
  const int n = std::max(32, static_cast<int>(std::ceil(256.0 * (s1 - s0) /
                                                        std::max(length(), 1e-12))));
  std::vector<Vec2> pts(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double s = s0 + (s1 - s0) * i / n;
    if (1.0 - delta * curvature(s) < 0.1)
      fail(ErrorCode::DeltaTooLarge, "inward parallel degenerates on a side");
    pts[i] = inner_point(s, delta);
  }
  // the parallel keeps the base tangent direction; clamp the ends with it
  return std::make_shared<SplineCurve>(pts, true, tangent(s0), tangent(s1));
}

std::shared_ptr<const SideCurve> SideCurve::straight(const Vec2& p, const Vec2& q) {
  return std::make_shared<StraightCurve>(p, q);
}

std::shared_ptr<const SideCurve> SideCurve::circular_arc(const Vec2& center,
                                                         double radius,
                                                         double start_angle,
                                                         double sweep) {
  if (sweep == 0.0) fail(ErrorCode::BadInput, "arc sweep must be nonzero");
  const double dir = sweep > 0.0 ? 1.0 : -1.0;
  return std::make_shared<ArcCurve>(center, radius, start_angle, dir,
                                    radius * std::abs(sweep));
}

std::shared_ptr<const SideCurve> SideCurve::arc_through(const Vec2& p, const Vec2& q,
                                                        double sweep) {
  const double c = (q - p).norm();
  if (!(c > 0.0)) fail(ErrorCode::BadInput, "arc endpoints coincide");
  if (!(std::abs(sweep) > 1e-12) || std::abs(sweep) >= 2.0 * kPi)
    fail(ErrorCode::BadInput, "arc sweep must be in (0, 2*pi)");
  const double r = c / (2.0 * std::sin(std::abs(sweep) / 2.0));
  const Vec2 mid = 0.5 * (p + q);
  const Vec2 left = Vec2(-(q - p).y(), (q - p).x()) / c;  // rot(+90) of chord
  // center on the perpendicular bisector such that rotating p by `sweep`
  // around it lands on q
  const Vec2 center = mid + left * (0.5 * c / std::tan(sweep / 2.0));
  const Vec2 v = p - center;
  return circular_arc(center, r, std::atan2(v.y(), v.x()), sweep);
}

std::shared_ptr<const SideCurve> SideCurve::from_samples(const std::vector<Vec2>& pts) {
  return std::make_shared<SplineCurve>(pts, false, Vec2::Zero(), Vec2::Zero());
}

// ---------------------------------------------------------------------------
// TaggedRegion
// ---------------------------------------------------------------------------

namespace {
std::vector<Vec2> sample_loop(const TaggedRegion& region, int per_ref) {
  std::vector<Vec2> pts;
  for (const CurveRef& ref : region.boundary)
    for (int i = 0; i < per_ref; ++i)
      pts.push_back(ref.at_fraction(static_cast<double>(i) / per_ref));
  return pts;
}
}  // namespace

double TaggedRegion::signed_area() const {
  const std::vector<Vec2> pts = sample_loop(*this, 64);
  double a = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2& p = pts[i];
    const Vec2& q = pts[(i + 1) % pts.size()];
    a += cross2(p, q);
  }
  return 0.5 * a;
}

std::pair<Vec2, Vec2> TaggedRegion::bounding_box() const {
  Vec2 lo(std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const Vec2& p : sample_loop(*this, 64)) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

void TaggedRegion::validate() const {
  if (boundary.empty()) fail(ErrorCode::EmptyDomain, "region has no boundary");
  const auto [lo, hi] = bounding_box();
  const double scale = (hi - lo).norm();
  if (!(scale > 0.0)) fail(ErrorCode::EmptyDomain, "region has no extent");
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    const Vec2 e = boundary[i].end();
    const Vec2 s = boundary[(i + 1) % boundary.size()].start();
    if ((e - s).norm() > 1e-9 * scale)
      fail(ErrorCode::ChainNotClosed,
           "boundary pieces do not join (region '" + name + "')");
  }
  const double area = signed_area();
  if (!(area > 1e-12 * scale * scale))
    fail(ErrorCode::BadInput,
         "boundary loop must be counterclockwise with positive area (region '" +
             name + "')");
}

// ---------------------------------------------------------------------------
// CurvilinearPolygon
// ---------------------------------------------------------------------------

CurvilinearPolygon CurvilinearPolygon::from_sides(
    std::vector<std::shared_ptr<const SideCurve>> sides) {
  const int n = static_cast<int>(sides.size());
  if (n < 2) fail(ErrorCode::BadInput, "a polygon needs at least two sides");

  CurvilinearPolygon poly;
  poly.sides_ = std::move(sides);

  // diameter and closure scale from a dense sampling
  std::vector<Vec2> pts;
  for (int j = 0; j < n; ++j) {
    const SideCurve& c = *poly.sides_[j];
    for (int i = 0; i < 64; ++i) pts.push_back(c.point(c.length() * i / 64.0));
  }
  double diam = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t k = i + 1; k < pts.size(); ++k)
      diam = std::max(diam, (pts[i] - pts[k]).norm());
  poly.diameter_ = diam;
  if (!(diam > 0.0)) fail(ErrorCode::EmptyDomain, "polygon has no extent");

  for (int j = 0; j < n; ++j) {
    const SideCurve& prev = *poly.sides_[(j + n - 1) % n];
    const SideCurve& next = *poly.sides_[j];
    if ((prev.point(prev.length()) - next.point(0.0)).norm() > 1e-9 * diam)
      fail(ErrorCode::ChainNotClosed,
           "side " + std::to_string((j + n - 1) % n) + " does not reach vertex " +
               std::to_string(j));
    const Vec2 t_in = prev.tangent(prev.length());
    const Vec2 t_out = next.tangent(0.0);
    const Vec2 back = -t_in;
    double two_theta = std::atan2(cross2(t_out, back), t_out.dot(back));
    if (two_theta <= 1e-9) two_theta += 2.0 * kPi;
    const double theta = 0.5 * two_theta;
    if (theta < 1e-6 || theta > kPi - 1e-6)
      fail(ErrorCode::DegenerateAngle,
           "vertex " + std::to_string(j) + " has a degenerate corner angle");
    poly.vertices_.push_back({next.point(0.0), theta, theta < 0.5 * kPi});
  }

  // ccw orientation
  double area = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    area += cross2(pts[i], pts[(i + 1) % pts.size()]);
  if (!(area > 0.0))
    fail(ErrorCode::BadInput, "polygon boundary must be counterclockwise");

  // sampled self-intersection check between non-adjacent polyline pieces
  const int per = 64;
  const int total = static_cast<int>(pts.size());
  auto seg_intersect = [](const Vec2& a, const Vec2& b, const Vec2& c,
                          const Vec2& d) {
    const double d1 = cross2(b - a, c - a), d2 = cross2(b - a, d - a);
    const double d3 = cross2(d - c, a - c), d4 = cross2(d - c, b - c);
    return ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0));
  };
  for (int i = 0; i < total; ++i) {
    for (int k = i + 2; k < total; ++k) {
      if (i == 0 && k == total - 1) continue;
      // skip neighbors across a shared vertex of the sampling
      if (i / per == k / per && std::abs(i - k) <= 2) continue;
      if (seg_intersect(pts[i], pts[(i + 1) % total], pts[k],
                        pts[(k + 1) % total]))
        fail(ErrorCode::SelfIntersection, "polygon boundary crosses itself");
    }
  }
  return poly;
}

double CurvilinearPolygon::perimeter() const {
  double p = 0.0;
  for (const auto& s : sides_) p += s->length();
  return p;
}

TaggedRegion CurvilinearPolygon::as_region(const std::string& name) const {
  TaggedRegion region;
  region.name = name;
  for (const auto& s : sides_)
    region.boundary.push_back({s, 0.0, s->length(), BoundaryPart::Robin});
  for (const Vertex& v : vertices_) region.grading_corners.push_back(v.position);
  region.validate();
  return region;
}

CurvilinearPolygon CurvilinearPolygon::square(double a) { return rectangle(a, a); }

CurvilinearPolygon CurvilinearPolygon::rectangle(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) fail(ErrorCode::BadInput, "rectangle sides must be positive");
  const Vec2 v0(0, 0), v1(a, 0), v2(a, b), v3(0, b);
  return from_sides({SideCurve::straight(v0, v1), SideCurve::straight(v1, v2),
                     SideCurve::straight(v2, v3), SideCurve::straight(v3, v0)});
}

CurvilinearPolygon CurvilinearPolygon::equilateral_triangle(double a) {
  if (!(a > 0.0)) fail(ErrorCode::BadInput, "triangle side must be positive");
  const Vec2 v0(0, 0), v1(a, 0), v2(0.5 * a, 0.5 * std::sqrt(3.0) * a);
  return from_sides({SideCurve::straight(v0, v1), SideCurve::straight(v1, v2),
                     SideCurve::straight(v2, v0)});
}

CurvilinearPolygon CurvilinearPolygon::half_disk(double r) {
  if (!(r > 0.0)) fail(ErrorCode::BadInput, "radius must be positive");
  const Vec2 l(-r, 0), rt(r, 0);
  return from_sides({SideCurve::straight(l, rt),
                     SideCurve::circular_arc(Vec2(0, 0), r, 0.0, kPi)});
}

CurvilinearPolygon CurvilinearPolygon::regular_ngon(int n, double circumradius) {
  if (n < 3) fail(ErrorCode::BadInput, "ngon needs at least three vertices");
  if (!(circumradius > 0.0)) fail(ErrorCode::BadInput, "radius must be positive");
  std::vector<std::shared_ptr<const SideCurve>> sides;
  for (int k = 0; k < n; ++k) {
    const double a0 = 2.0 * kPi * k / n, a1 = 2.0 * kPi * (k + 1) / n;
    sides.push_back(SideCurve::straight(
        circumradius * Vec2(std::cos(a0), std::sin(a0)),
        circumradius * Vec2(std::cos(a1), std::sin(a1))));
  }
  return from_sides(std::move(sides));
}

CurvilinearPolygon CurvilinearPolygon::lshape(double a) {
  if (!(a > 0.0)) fail(ErrorCode::BadInput, "size must be positive");
  const std::vector<Vec2> v = {{0, 0},     {2 * a, 0}, {2 * a, a},
                               {a, a},     {a, 2 * a}, {0, 2 * a}};
  std::vector<std::shared_ptr<const SideCurve>> sides;
  for (std::size_t i = 0; i < v.size(); ++i)
    sides.push_back(SideCurve::straight(v[i], v[(i + 1) % v.size()]));
  return from_sides(std::move(sides));
}

CurvilinearPolygon CurvilinearPolygon::named(const std::string& spec) {
  std::vector<std::string> tok;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) tok.push_back(item);
  if (tok.empty()) fail(ErrorCode::BadInput, "empty domain name");
  auto num = [&](std::size_t i, double def) {
    if (i >= tok.size()) return def;
    try {
      return std::stod(tok[i]);
    } catch (...) {
      fail(ErrorCode::BadInput, "bad numeric parameter in '" + spec + "'");
    }
  };
  const std::string& name = tok[0];
  if (name == "square") return square(num(1, 1.0));
  if (name == "rectangle" || name == "rect") return rectangle(num(1, 2.0), num(2, 1.0));
  if (name == "triangle") return equilateral_triangle(num(1, 1.0));
  if (name == "half-disk" || name == "halfdisk") return half_disk(num(1, 1.0));
  if (name == "ngon")
    return regular_ngon(static_cast<int>(num(1, 5.0)), num(2, 1.0));
  if (name == "lshape") return lshape(num(1, 1.0));
  fail(ErrorCode::BadInput, "unknown domain '" + name + "'");
}

CurvilinearPolygon CurvilinearPolygon::from_spec_text(const std::string& text) {
  struct SideSpec {
    std::string kind;
    double sweep = 0.0, heading0 = 0.0, heading1 = 0.0;
    int samples = 65;
  };
  std::vector<Vec2> verts;
  std::vector<SideSpec> specs;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool expect_vertex = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    auto bad = [&](const std::string& why) -> void {
      fail(ErrorCode::BadInput,
           "polygon spec line " + std::to_string(lineno) + ": " + why);
    };
    if (word == "vertex") {
      if (!expect_vertex) bad("expected a side before the next vertex");
      double x, y;
      if (!(ls >> x >> y)) bad("vertex needs two coordinates");
      verts.emplace_back(x, y);
      expect_vertex = false;
    } else if (word == "side") {
      if (expect_vertex) bad("side before any vertex");
      SideSpec s;
      if (!(ls >> s.kind)) bad("side needs a kind");
      std::string kv;
      while (ls >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) bad("expected key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        double val = 0.0;
        try {
          val = std::stod(kv.substr(eq + 1));
        } catch (...) {
          bad("bad number in '" + kv + "'");
        }
        if (key == "sweep") s.sweep = val * kPi / 180.0;
        else if (key == "heading0") s.heading0 = val * kPi / 180.0;
        else if (key == "heading1") s.heading1 = val * kPi / 180.0;
        else if (key == "samples") s.samples = static_cast<int>(val);
        else bad("unknown option '" + key + "'");
      }
      if (s.kind != "straight" && s.kind != "arc" && s.kind != "hermite")
        bad("unknown side kind '" + s.kind + "'");
      if (s.kind == "arc" && s.sweep == 0.0) bad("arc needs sweep=");
      specs.push_back(s);
      expect_vertex = true;
    } else {
      bad("unknown directive '" + word + "'");
    }
  }
  if (verts.size() < 2) fail(ErrorCode::BadInput, "polygon spec needs at least two vertices");
  if (verts.size() != specs.size())
    fail(ErrorCode::BadInput, "polygon spec needs one side per vertex (last side closes the loop)");

  std::vector<std::shared_ptr<const SideCurve>> sides;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    const Vec2 p = verts[j];
    const Vec2 q = verts[(j + 1) % verts.size()];
    const SideSpec& s = specs[j];
    if (s.kind == "straight") {
      sides.push_back(SideCurve::straight(p, q));
    } else if (s.kind == "arc") {
      sides.push_back(SideCurve::arc_through(p, q, s.sweep));
    } else {
      // cubic with prescribed end headings; clamped spline reproduces it
      const double c = (q - p).norm();
      const Vec2 m0 = c * Vec2(std::cos(s.heading0), std::sin(s.heading0));
      const Vec2 m1 = c * Vec2(std::cos(s.heading1), std::sin(s.heading1));
      const int n = std::max(s.samples, 17);
      std::vector<Vec2> pts(n);
      for (int i = 0; i < n; ++i) {
        const double u = static_cast<double>(i) / (n - 1);
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
        const double h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u);
        const double h11 = u * u * (u - 1);
        pts[i] = h00 * p + h10 * m0 + h01 * q + h11 * m1;
      }
      sides.push_back(std::make_shared<SplineCurve>(pts, true, m0, m1));
    }
  }
  return from_sides(std::move(sides));
}

// ---------------------------------------------------------------------------
// truncated sector
// ---------------------------------------------------------------------------

TaggedRegion TruncatedSector::make(double theta, double r) {
  if (!(theta > 0.0) || !(r > 0.0))
    fail(ErrorCode::BadInput, "sector needs a positive half-angle and radius");
  if (theta >= 0.5 * kPi - 1e-12)
    fail(ErrorCode::ObtuseHalfAngle,
         "the truncated-sector model needs a half-angle below pi/2");
  const Vec2 O(0, 0);
  const Vec2 Ap(r * std::cos(theta), r * std::sin(theta));
  const Vec2 Am(Ap.x(), -Ap.y());
  const Vec2 B(r / std::cos(theta), 0.0);

  TaggedRegion region;
  region.name = "sector";
  region.boundary = {
      {SideCurve::straight(O, Am), 0.0, (Am - O).norm(), BoundaryPart::Robin},
      {SideCurve::straight(Am, B), 0.0, (B - Am).norm(), BoundaryPart::Exterior},
      {SideCurve::straight(B, Ap), 0.0, (Ap - B).norm(), BoundaryPart::Exterior},
      {SideCurve::straight(Ap, O), 0.0, (O - Ap).norm(), BoundaryPart::Robin},
  };
  region.grading_corners = {O, Am, Ap};
  region.validate();
  return region;
}

// ---------------------------------------------------------------------------
// bisector point
// ---------------------------------------------------------------------------

BisectorPoint bisector_point(const SideCurve& prev, const SideCurve& next,
                             double half_angle, double t) {
  if (!(t > 0.0)) fail(ErrorCode::BadInput, "bisector distance must be positive");
  if (!(half_angle > 1e-6) || half_angle >= 0.5 * kPi - 1e-12)
    fail(ErrorCode::BadInput, "bisector point needs a convex corner");

  const double guess = t / std::tan(half_angle);
  double p = std::clamp(prev.length() - guess, 0.0, prev.length());
  double q = std::clamp(guess, 0.0, next.length());

  auto offset = [t](const SideCurve& c, double s) { return c.inner_point(s, t); };

  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    const Vec2 F = offset(next, q) - offset(prev, p);
    if (F.norm() <= 1e-13 * (1.0 + t)) {
      converged = true;
      break;
    }
    const Vec2 dq = (1.0 - t * next.curvature(q)) * next.tangent(q);
    const Vec2 dp = (1.0 - t * prev.curvature(p)) * prev.tangent(p);
    Eigen::Matrix2d J;
    J.col(0) = dq;
    J.col(1) = -dp;
    const double det = J.determinant();
    if (std::abs(det) < 1e-14)
      fail(ErrorCode::NoConvergence, "bisector Jacobian is singular");
    const Vec2 step = J.inverse() * (-F);
    const double damp = it < 5 ? 0.5 : 1.0;
    q = std::clamp(q + damp * step.x(), 0.0, next.length());
    p = std::clamp(p + damp * step.y(), 0.0, prev.length());
  }
  if (!converged)
    fail(ErrorCode::NoConvergence, "bisector iteration did not converge");

  const Vec2 Y = offset(next, q);
  // the feet must be genuine closest points at distance t
  for (const SideCurve* c : {&prev, &next}) {
    const double s = c->project(Y, -1.0);
    if (std::abs((c->point(s) - Y).norm() - t) > 1e-9 * (1.0 + t))
      fail(ErrorCode::NoConvergence,
           "bisector point is not at the requested distance from both sides");
  }
  return {Y, prev.length() - p, q};
}

// ---------------------------------------------------------------------------
// decomposition
// ---------------------------------------------------------------------------

std::vector<RegionPiece> decompose(const CurvilinearPolygon& poly, double delta) {
  if (!(delta > 0.0)) fail(ErrorCode::BadInput, "delta must be positive");
  const int n = poly.num_sides();
  const double flat_tol = 1e-12;

  enum class VKind { Convex, Flat, Concave };
  std::vector<VKind> kind(n);
  std::vector<BisectorPoint> bis(n);
  for (int j = 0; j < n; ++j) {
    const double theta = poly.vertex(j).half_angle;
    if (std::abs(theta - 0.5 * kPi) <= flat_tol) {
      kind[j] = VKind::Flat;
    } else if (theta < 0.5 * kPi) {
      kind[j] = VKind::Convex;
      const SideCurve& prev = poly.side((j + n - 1) % n);
      const SideCurve& next = poly.side(j);
      try {
        bis[j] = bisector_point(prev, next, theta, delta);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoConvergence)
          fail(ErrorCode::DeltaTooLarge,
               "no corner bisector point at this delta (vertex " +
                   std::to_string(j) + ")");
        throw;
      }
      if (bis[j].foot_prev >= prev.length() - 1e-12 ||
          bis[j].foot_next >= next.length() - 1e-12)
        fail(ErrorCode::DeltaTooLarge,
             "corner neighborhood swallows a whole side (vertex " +
                 std::to_string(j) + ")");
    } else {
      kind[j] = VKind::Concave;
    }
  }

  // tube parameter ranges per side
  std::vector<double> a(n), b(n);
  for (int j = 0; j < n; ++j) {
    a[j] = kind[j] == VKind::Convex ? bis[j].foot_next : 0.0;
    const int jn = (j + 1) % n;
    b[j] = kind[jn] == VKind::Convex ? poly.side(j).length() - bis[jn].foot_prev
                                     : poly.side(j).length();
    if (!(b[j] - a[j] > 1e-9 * poly.diameter()))
      fail(ErrorCode::DeltaTooLarge,
           "side tube collapsed (side " + std::to_string(j) + ")");
  }

  std::vector<RegionPiece> pieces;

  // vertex pieces
  for (int j = 0; j < n; ++j) {
    const int jp = (j + n - 1) % n;
    const SideCurve& prev = poly.side(jp);
    const auto prev_ptr = poly.side_ptr(jp);
    const auto next_ptr = poly.side_ptr(j);
    const Vec2 A = poly.vertex(j).position;
    if (kind[j] == VKind::Convex) {
      const double lp = bis[j].foot_prev, lq = bis[j].foot_next;
      const Vec2 Aplus = next_ptr->point(lq);
      const Vec2 Aminus = prev.point(prev.length() - lp);
      const Vec2 Y = next_ptr->inner_point(lq, delta);
      TaggedRegion r;
      r.name = "vertex" + std::to_string(j);
      r.boundary = {
          {prev_ptr, prev.length() - lp, prev.length(), BoundaryPart::Robin},
          {next_ptr, 0.0, lq, BoundaryPart::Robin},
          {SideCurve::straight(Aplus, Y), 0.0, (Y - Aplus).norm(),
           BoundaryPart::Exterior},
          {SideCurve::straight(Y, Aminus), 0.0, (Aminus - Y).norm(),
           BoundaryPart::Exterior},
      };
      r.grading_corners = {A};
      r.validate();
      pieces.push_back({PieceKind::ConvexVertex, j, std::move(r)});
    } else if (kind[j] == VKind::Concave) {
      const Vec2 d1 = -prev.normal(prev.length());
      const Vec2 d2 = -next_ptr->normal(0.0);
      const double sweep = 2.0 * poly.vertex(j).half_angle - kPi;
      const auto arc = SideCurve::circular_arc(
          A, delta, std::atan2(d2.y(), d2.x()), sweep);
      TaggedRegion r;
      r.name = "vertex" + std::to_string(j);
      r.boundary = {
          {SideCurve::straight(A, A + delta * d2), 0.0, delta,
           BoundaryPart::Exterior},
          {arc, 0.0, arc->length(), BoundaryPart::Interface},
          {SideCurve::straight(A + delta * d1, A), 0.0, delta,
           BoundaryPart::Exterior},
      };
      r.grading_corners = {A};
      r.validate();
      pieces.push_back({PieceKind::ConcaveVertex, j, std::move(r)});
    }
  }

  // side tubes, keeping each inner parallel for the core loop
  std::vector<std::shared_ptr<const SideCurve>> offsets(n);
  for (int j = 0; j < n; ++j) {
    const auto side = poly.side_ptr(j);
    offsets[j] = side->inner_offset(delta, a[j], b[j]);
    const Vec2 ga = side->point(a[j]), gb = side->point(b[j]);
    const Vec2 fa = side->inner_point(a[j], delta), fb = side->inner_point(b[j], delta);
    TaggedRegion r;
    r.name = "side" + std::to_string(j);
    r.boundary = {
        {side, a[j], b[j], BoundaryPart::Robin},
        {SideCurve::straight(gb, fb), 0.0, (fb - gb).norm(), BoundaryPart::Exterior},
        {offsets[j], offsets[j]->length(), 0.0, BoundaryPart::Interface},
        {SideCurve::straight(fa, ga), 0.0, (ga - fa).norm(), BoundaryPart::Exterior},
    };
    r.grading_corners = {ga, gb};
    r.validate();
    pieces.push_back({PieceKind::Side, j, std::move(r)});
  }

  // core: inner parallels joined by the concave arcs (traversed backwards)
  TaggedRegion core;
  core.name = "core";
  for (int j = 0; j < n; ++j) {
    core.boundary.push_back(
        {offsets[j], 0.0, offsets[j]->length(), BoundaryPart::Interface});
    const int jn = (j + 1) % n;
    if (kind[jn] == VKind::Concave) {
      const SideCurve& prev = poly.side(j);
      const Vec2 A = poly.vertex(jn).position;
      const Vec2 d1 = -prev.normal(prev.length());
      const double sweep = 2.0 * poly.vertex(jn).half_angle - kPi;
      // from d1 swept cw back to d2 (the reverse of the vertex-piece arc)
      const auto arc = SideCurve::circular_arc(
          A, delta, std::atan2(d1.y(), d1.x()), -sweep);
      core.boundary.push_back({arc, 0.0, arc->length(), BoundaryPart::Interface});
    }
  }
  try {
    core.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BadInput || e.code() == ErrorCode::EmptyDomain)
      fail(ErrorCode::DeltaTooLarge, "core degenerates at this delta");
    throw;
  }
  pieces.push_back({PieceKind::Core, -1, std::move(core)});
  return pieces;
}

}  // namespace robinspec
