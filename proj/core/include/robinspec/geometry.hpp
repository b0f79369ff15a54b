#pragma once

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

#include "robinspec/errors.hpp"

namespace robinspec {

using Vec2 = Eigen::Vector2d;

/// Arc-length parametrized planar curve on [0, length()], unit speed.
///
/// Orientation conventions (fixed throughout the library):
///  * domains are traversed counterclockwise, interior on the left;
///  * the outward normal is nu = (t_y, -t_x) for unit tangent t;
///  * signed curvature is H = cross(gamma', gamma''), positive where the
///    boundary bends around the interior (H = 1/R on a ccw circle), so a
///    convex domain has H >= 0 on its boundary.
class SideCurve {
 public:
  virtual ~SideCurve() = default;

  virtual double length() const = 0;
  virtual Vec2 point(double s) const = 0;
  virtual Vec2 tangent(double s) const = 0;
  virtual double curvature(double s) const = 0;

  /// Outward normal (for ccw traversal).
  Vec2 normal(double s) const {
    const Vec2 t = tangent(s);
    return {t.y(), -t.x()};
  }

  /// Inward parallel point at distance t: gamma(s) - t * nu(s).
  Vec2 inner_point(double s, double t) const { return point(s) - t * normal(s); }

  /// Parameter of the point on the curve closest to p (clamped to the ends).
  /// `hint` seeds the local search; pass a negative hint for a global scan.
  virtual double project(const Vec2& p, double hint) const;

  /// Unit-speed curve tracing the inward parallel gamma(s) - delta * nu(s)
  /// for s in [s0, s1].  Exact for straight and circular sides; general
  /// sides are resampled through the spline machinery.  Fails with
  /// DeltaTooLarge if 1 - delta * H(s) dips below a safety margin.
  virtual std::shared_ptr<const SideCurve> inner_offset(double delta, double s0,
                                                        double s1) const;

  static std::shared_ptr<const SideCurve> straight(const Vec2& p, const Vec2& q);
  /// Circular arc, arc-length parametrized; sweep > 0 traverses ccw.
  static std::shared_ptr<const SideCurve> circular_arc(const Vec2& center,
                                                       double radius,
                                                       double start_angle,
                                                       double sweep);
  /// Arc from p to q with a prescribed signed sweep angle (radians);
  /// positive sweep bulges to the right of the chord (outward on a ccw
  /// boundary).
  static std::shared_ptr<const SideCurve> arc_through(const Vec2& p, const Vec2& q,
                                                      double sweep);
  /// Interpolating natural cubic spline through the sample points,
  /// reparametrized to unit speed; the samples are interpolated exactly.
  /// Fails with SingularGeometry if the unit-speed validation (1e-6) fails.
  static std::shared_ptr<const SideCurve> from_samples(const std::vector<Vec2>& pts);
};

/// Which role a boundary piece plays when forms are assembled.
enum class BoundaryPart {
  Robin,      ///< physical boundary carrying the -alpha * u^2 boundary term
  Exterior,   ///< artificial truncation (sector far side, piece cut at a side)
  Interface,  ///< decomposition cut facing the interior core
};

/// A directed piece of a SideCurve: traversed from s0 to s1 (s1 < s0 walks
/// the curve backwards).
struct CurveRef {
  std::shared_ptr<const SideCurve> curve;
  double s0 = 0.0;
  double s1 = 0.0;
  BoundaryPart part = BoundaryPart::Robin;

  bool reversed() const { return s1 < s0; }
  double span() const { return std::abs(s1 - s0); }
  Vec2 start() const { return curve->point(s0); }
  Vec2 end() const { return curve->point(s1); }
  /// Point at fraction f in [0,1] of the directed traversal.
  Vec2 at_fraction(double f) const { return curve->point(s0 + f * (s1 - s0)); }
};

/// A meshable planar region: one closed ccw loop of tagged boundary pieces.
struct TaggedRegion {
  std::string name;
  std::vector<CurveRef> boundary;
  /// Points the mesh sizing field grades toward (corners of the Robin part).
  std::vector<Vec2> grading_corners;

  /// Consecutive refs must join end-to-start and close up (ChainNotClosed),
  /// and the loop must be ccw with positive area (BadInput).
  void validate() const;
  double signed_area() const;
  /// Axis-aligned bounding box: returns {min, max}.
  std::pair<Vec2, Vec2> bounding_box() const;
};

struct Vertex {
  Vec2 position;
  double half_angle = 0.0;  ///< theta in (0, pi); the interior angle is 2*theta
  bool convex = false;      ///< theta < pi/2
};

/// Closed ccw chain of smooth sides meeting at corners.  Side j runs from
/// vertex j to vertex (j+1) mod n.
class CurvilinearPolygon {
 public:
  static CurvilinearPolygon from_sides(
      std::vector<std::shared_ptr<const SideCurve>> sides);

  int num_sides() const { return static_cast<int>(sides_.size()); }
  const SideCurve& side(int j) const { return *sides_[j]; }
  std::shared_ptr<const SideCurve> side_ptr(int j) const { return sides_[j]; }
  const Vertex& vertex(int j) const { return vertices_[j]; }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  double diameter() const { return diameter_; }
  double perimeter() const;

  /// The whole polygon as a meshable region; the full boundary is Robin.
  TaggedRegion as_region(const std::string& name = "polygon") const;

  static CurvilinearPolygon square(double a);
  static CurvilinearPolygon rectangle(double a, double b);
  static CurvilinearPolygon equilateral_triangle(double a);
  static CurvilinearPolygon half_disk(double r);
  static CurvilinearPolygon regular_ngon(int n, double circumradius);
  static CurvilinearPolygon lshape(double a);

  /// Parse "name[:param[:param]]": square:a, rectangle:a:b, triangle:a,
  /// half-disk:r, ngon:n:r, lshape:a (parameters optional, default 1).
  static CurvilinearPolygon named(const std::string& spec);

  /// Parse the polygon description language: alternating `vertex x y` and
  /// `side ...` lines (straight | arc sweep=deg | hermite heading0=deg
  /// heading1=deg [samples=n]), '#' comments; the last side closes the loop.
  static CurvilinearPolygon from_spec_text(const std::string& text);

 private:
  std::vector<std::shared_ptr<const SideCurve>> sides_;
  std::vector<Vertex> vertices_;
  double diameter_ = 0.0;
};

/// Truncated corner model: the quadrangle with vertex at the origin, the two
/// Robin radii at angles +/- theta and length r, closed by the two exterior
/// segments through (r / cos(theta), 0).  Requires theta in (0, pi/2);
/// theta >= pi/2 has no such truncation (ObtuseHalfAngle).
struct TruncatedSector {
  static TaggedRegion make(double theta, double r);
};

/// Point at equal distance `t` from the end of `prev` and the start of
/// `next` (the two sides meeting at a convex corner), found by a damped
/// Newton iteration on the pair of inward parallels.  Reports the bisector
/// point and the arc-length feet of its two projections.
struct BisectorPoint {
  Vec2 point;
  double foot_prev = 0.0;  ///< arc length before the end of `prev`
  double foot_next = 0.0;  ///< arc length after the start of `next`
};
BisectorPoint bisector_point(const SideCurve& prev, const SideCurve& next,
                             double half_angle, double t);

/// One piece of the corner/side/core decomposition.
enum class PieceKind { ConvexVertex, ConcaveVertex, Side, Core };

struct RegionPiece {
  PieceKind kind = PieceKind::Core;
  int index = -1;  ///< vertex or side index; -1 for the core
  TaggedRegion region;
};

/// Cut the polygon at distance `delta` from the boundary into vertex
/// neighborhoods (quadrangles at convex corners, disk sectors at concave
/// ones), straight-ended tubes along the sides, and the interior core.
/// Cuts between vertex pieces and tubes are tagged Exterior; cuts facing
/// the core are tagged Interface.  Fails with DeltaTooLarge when delta does
/// not fit (tube collapse, inward parallel degenerating, overlapping
/// neighborhoods).
std::vector<RegionPiece> decompose(const CurvilinearPolygon& poly, double delta);

}  // namespace robinspec
