#include <cmath>
#include <vector>

#include "doctest.h"
#include "robinspec/geometry.hpp"

TEST_SUITE_BEGIN("geometry");

using namespace robinspec;

namespace {
constexpr double kPi = 3.14159265358979323846;

double region_area(const TaggedRegion& r) { return r.signed_area(); }
}  // namespace

TEST_CASE("straight curve basics") {
  const auto c = SideCurve::straight({1, 2}, {4, 6});
  CHECK(c->length() == doctest::Approx(5.0));
  CHECK((c->point(5.0) - Vec2(4, 6)).norm() <= 1e-14);
  CHECK((c->tangent(2.0) - Vec2(0.6, 0.8)).norm() <= 1e-14);
  CHECK(c->curvature(1.0) == 0.0);
  CHECK(c->project({1, 3}, -1.0) == doctest::Approx(0.8).epsilon(1e-12));
  // outward normal is the tangent rotated -90 degrees
  CHECK((c->normal(0.0) - Vec2(0.8, -0.6)).norm() <= 1e-14);
}

TEST_CASE("circular arc: curvature sign, projection, chord construction") {
  // ccw quarter of the unit circle starting at angle 0
  const auto c = SideCurve::circular_arc({0, 0}, 1.0, 0.0, 0.5 * kPi);
  CHECK(c->length() == doctest::Approx(0.5 * kPi));
  CHECK(c->curvature(0.2) == doctest::Approx(1.0));
  CHECK((c->point(0.5 * kPi) - Vec2(0, 1)).norm() <= 1e-12);
  CHECK((c->normal(0.0) - Vec2(1, 0)).norm() <= 1e-12);  // radially out
  CHECK(c->project({2.0, 2.0}, -1.0) == doctest::Approx(0.25 * kPi));

  // arc from chord + sweep: semicircle over the diameter
  const auto half = SideCurve::arc_through({1, 0}, {-1, 0}, kPi);
  CHECK(half->length() == doctest::Approx(kPi));
  CHECK((half->point(0.5 * kPi) - Vec2(0, 1)).norm() <= 1e-9);

  // positive sweep bulges right of the chord
  const auto bulge = SideCurve::arc_through({0, 0}, {1, 0}, 0.5 * kPi);
  CHECK(bulge->point(0.5 * bulge->length()).y() < 0.0);
}

TEST_CASE("spline through circle samples reproduces length and curvature") {
  std::vector<Vec2> pts;
  const int n = 48;
  for (int i = 0; i <= n; ++i) {
    const double a = 0.5 * kPi * i / n;
    pts.emplace_back(std::cos(a), std::sin(a));
  }
  const auto c = SideCurve::from_samples(pts);
  CHECK(c->length() == doctest::Approx(0.5 * kPi).epsilon(1e-5));
  CHECK(c->curvature(0.5 * c->length()) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK((c->point(0.5 * c->length()) -
         Vec2(std::cos(kPi / 4), std::sin(kPi / 4)))
            .norm() <= 1e-6);
  // tangent is unit by construction
  CHECK(c->tangent(0.3 * c->length()).norm() == doctest::Approx(1.0));
}

TEST_CASE("inner offsets: straight and arc are exact, spline stays close") {
  const auto s = SideCurve::straight({0, 0}, {2, 0});
  const auto so = s->inner_offset(0.25, 0.5, 1.5);
  CHECK(so->length() == doctest::Approx(1.0));
  CHECK((so->point(0.0) - Vec2(0.5, 0.25)).norm() <= 1e-14);

  const auto a = SideCurve::circular_arc({0, 0}, 1.0, 0.0, 0.5 * kPi);
  const auto ao = a->inner_offset(0.3, 0.0, a->length());
  CHECK(ao->curvature(0.1) == doctest::Approx(1.0 / 0.7));
  CHECK((ao->point(0.0) - Vec2(0.7, 0.0)).norm() <= 1e-12);

  std::vector<Vec2> pts;
  for (int i = 0; i <= 64; ++i) {
    const double t = 0.5 * kPi * i / 64;
    pts.emplace_back(std::cos(t), std::sin(t));
  }
  const auto sp = SideCurve::from_samples(pts);
  const auto spo = sp->inner_offset(0.3, 0.0, sp->length());
  for (double f : {0.1, 0.5, 0.9}) {
    const Vec2 p = spo->point(f * spo->length());
    CHECK(p.norm() == doctest::Approx(0.7).epsilon(1e-4));
  }
  CHECK_THROWS_AS(a->inner_offset(0.95, 0.0, a->length()), Error);
}

TEST_CASE("square polygon: vertices, angles, region") {
  const auto poly = CurvilinearPolygon::square(1.0);
  REQUIRE(poly.num_sides() == 4);
  CHECK(poly.perimeter() == doctest::Approx(4.0));
  CHECK(poly.diameter() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
  for (int j = 0; j < 4; ++j) {
    CHECK(poly.vertex(j).half_angle == doctest::Approx(0.25 * kPi));
    CHECK(poly.vertex(j).convex);
  }
  const auto region = poly.as_region();
  CHECK(region_area(region) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(region.grading_corners.size() == 4);
}

TEST_CASE("lshape has one concave vertex") {
  const auto poly = CurvilinearPolygon::lshape(1.0);
  REQUIRE(poly.num_sides() == 6);
  int concave = 0;
  for (int j = 0; j < 6; ++j)
    if (!poly.vertex(j).convex) {
      ++concave;
      CHECK(poly.vertex(j).half_angle == doctest::Approx(0.75 * kPi));
      CHECK((poly.vertex(j).position - Vec2(1, 1)).norm() <= 1e-12);
    }
  CHECK(concave == 1);
  CHECK(region_area(poly.as_region()) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("half-disk: pi/4 corners between diameter and arc") {
  const auto poly = CurvilinearPolygon::half_disk(1.0);
  REQUIRE(poly.num_sides() == 2);
  CHECK(poly.vertex(0).half_angle == doctest::Approx(0.25 * kPi));
  CHECK(poly.vertex(1).half_angle == doctest::Approx(0.25 * kPi));
  CHECK(region_area(poly.as_region()) ==
        doctest::Approx(0.5 * kPi).epsilon(2e-3));
}

TEST_CASE("polygon validation failures") {
  // clockwise square
  const Vec2 v0(0, 0), v1(0, 1), v2(1, 1), v3(1, 0);
  CHECK_THROWS_AS(CurvilinearPolygon::from_sides(
                      {SideCurve::straight(v0, v1), SideCurve::straight(v1, v2),
                       SideCurve::straight(v2, v3), SideCurve::straight(v3, v0)}),
                  Error);
  // open chain
  CHECK_THROWS_AS(CurvilinearPolygon::from_sides(
                      {SideCurve::straight({0, 0}, {1, 0}),
                       SideCurve::straight({1, 0.5}, {0, 0})}),
                  Error);
  // figure-eight style crossing
  CHECK_THROWS_AS(CurvilinearPolygon::from_sides(
                      {SideCurve::straight({0, 0}, {1, 1}),
                       SideCurve::straight({1, 1}, {1, 0}),
                       SideCurve::straight({1, 0}, {0, 1}),
                       SideCurve::straight({0, 1}, {0, 0})}),
                  Error);
}

TEST_CASE("named polygons parse") {
  CHECK(CurvilinearPolygon::named("square:2").perimeter() == doctest::Approx(8.0));
  CHECK(CurvilinearPolygon::named("rectangle:2:1").perimeter() == doctest::Approx(6.0));
  CHECK(CurvilinearPolygon::named("triangle").num_sides() == 3);
  CHECK(CurvilinearPolygon::named("ngon:6:1").num_sides() == 6);
  CHECK(CurvilinearPolygon::named("half-disk:2").num_sides() == 2);
  CHECK_THROWS_AS(CurvilinearPolygon::named("hexagon"), Error);
  CHECK_THROWS_AS(CurvilinearPolygon::named("square:x"), Error);
}

TEST_CASE("polygon spec text") {
  const char* text = R"(
# unit square
vertex 0 0
side straight
vertex 1 0
side straight
vertex 1 1
side straight
vertex 0 1
side straight
)";
  const auto poly = CurvilinearPolygon::from_spec_text(text);
  CHECK(poly.num_sides() == 4);
  CHECK(region_area(poly.as_region()) == doctest::Approx(1.0).epsilon(1e-12));

  // a hermite side with both headings along the chord reproduces the chord,
  // so the corner angles match the plain square
  const char* hermite_text = R"(
vertex 0 0
side straight
vertex 1 0
side straight
vertex 1 1
side hermite heading0=180 heading1=180
vertex 0 1
side straight
)";
  const auto hpoly = CurvilinearPolygon::from_spec_text(hermite_text);
  CHECK(hpoly.vertex(2).half_angle == doctest::Approx(0.25 * kPi).epsilon(1e-6));
  CHECK(region_area(hpoly.as_region()) == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(CurvilinearPolygon::from_spec_text("vertex 0 0\nside arc\nvertex 1 0\nside straight\n"),
                  Error);
  CHECK_THROWS_AS(CurvilinearPolygon::from_spec_text("side straight\n"), Error);
}

TEST_CASE("half-disk via spec text arc") {
  const char* text = R"(
vertex -1 0
side straight
vertex 1 0
side arc sweep=180
)";
  const auto poly = CurvilinearPolygon::from_spec_text(text);
  CHECK(region_area(poly.as_region()) == doctest::Approx(0.5 * kPi).epsilon(2e-3));
  CHECK(poly.vertex(0).half_angle == doctest::Approx(0.25 * kPi).epsilon(1e-9));
}

TEST_CASE("truncated sector geometry") {
  const double theta = kPi / 6.0, r = 2.0;
  const auto region = TruncatedSector::make(theta, r);
  REQUIRE(region.boundary.size() == 4);
  CHECK(region_area(region) == doctest::Approx(r * r * std::tan(theta)).epsilon(1e-12));
  int robin = 0, ext = 0;
  for (const auto& ref : region.boundary) {
    if (ref.part == BoundaryPart::Robin) {
      ++robin;
      CHECK(ref.span() == doctest::Approx(r));
    } else {
      ++ext;
    }
  }
  CHECK(robin == 2);
  CHECK(ext == 2);
  CHECK_THROWS_AS(TruncatedSector::make(0.5 * kPi, 1.0), Error);
  CHECK_THROWS_AS(TruncatedSector::make(2.0, 1.0), Error);
}

TEST_CASE("bisector point: square corner and curved corner") {
  // two sides of the unit square meeting at the origin
  const auto left = SideCurve::straight({0, 1}, {0, 0});
  const auto bottom = SideCurve::straight({0, 0}, {1, 0});
  const auto bp = bisector_point(*left, *bottom, 0.25 * kPi, 0.1);
  CHECK((bp.point - Vec2(0.1, 0.1)).norm() <= 1e-12);
  CHECK(bp.foot_prev == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(bp.foot_next == doctest::Approx(0.1).epsilon(1e-10));

  // half-disk corner at (1, 0): diameter then arc; the equidistant point
  // satisfies |Y| = 1 - t on the circle side and Y.y = t on the diameter side
  const auto diam = SideCurve::straight({-1, 0}, {1, 0});
  const auto arc = SideCurve::circular_arc({0, 0}, 1.0, 0.0, kPi);
  const double t = 0.1;
  const auto bc = bisector_point(*diam, *arc, 0.25 * kPi, t);
  const double x = std::sqrt((1 - t) * (1 - t) - t * t);
  CHECK((bc.point - Vec2(x, t)).norm() <= 1e-9);
  CHECK(bc.foot_prev == doctest::Approx(1.0 - x).epsilon(1e-8));
  CHECK(bc.foot_next == doctest::Approx(std::atan2(t, x)).epsilon(1e-8));
}

TEST_CASE("decompose the unit square") {
  const auto poly = CurvilinearPolygon::square(1.0);
  const double d = 0.1;
  const auto pieces = decompose(poly, d);
  REQUIRE(pieces.size() == 9);

  int nv = 0, ns = 0, nc = 0;
  double total = 0.0;
  for (const auto& p : pieces) {
    total += region_area(p.region);
    switch (p.kind) {
      case PieceKind::ConvexVertex:
        ++nv;
        CHECK(region_area(p.region) == doctest::Approx(d * d).epsilon(1e-10));
        break;
      case PieceKind::Side:
        ++ns;
        CHECK(region_area(p.region) ==
              doctest::Approx((1.0 - 2.0 * d) * d).epsilon(1e-10));
        break;
      case PieceKind::Core:
        ++nc;
        CHECK(region_area(p.region) ==
              doctest::Approx((1.0 - 2.0 * d) * (1.0 - 2.0 * d)).epsilon(1e-10));
        break;
      default:
        break;
    }
  }
  CHECK(nv == 4);
  CHECK(ns == 4);
  CHECK(nc == 1);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("decompose the lshape: concave piece is a quarter disk") {
  const auto poly = CurvilinearPolygon::lshape(1.0);
  const double d = 0.1;
  const auto pieces = decompose(poly, d);
  REQUIRE(pieces.size() == 13);  // 5 convex + 1 concave + 6 tubes + core

  double total = 0.0;
  int concave = 0;
  for (const auto& p : pieces) {
    total += region_area(p.region);
    if (p.kind == PieceKind::ConcaveVertex) {
      ++concave;
      CHECK(region_area(p.region) ==
            doctest::Approx(0.25 * kPi * d * d).epsilon(1e-3));
    }
  }
  CHECK(concave == 1);
  CHECK(total == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("decompose the half-disk (curved side)") {
  const auto poly = CurvilinearPolygon::half_disk(1.0);
  const auto pieces = decompose(poly, 0.15);
  REQUIRE(pieces.size() == 5);
  double total = 0.0;
  for (const auto& p : pieces) total += region_area(p.region);
  CHECK(total == doctest::Approx(0.5 * kPi).epsilon(5e-3));
}

TEST_CASE("decompose rejects an oversized delta") {
  CHECK_THROWS_AS(decompose(CurvilinearPolygon::square(1.0), 0.6), Error);
  try {
    decompose(CurvilinearPolygon::square(1.0), 0.6);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DeltaTooLarge);
  }
}

TEST_SUITE_END();
