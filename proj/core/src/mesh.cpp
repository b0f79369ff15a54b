#include "robinspec/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace robinspec {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// sizing field
// ---------------------------------------------------------------------------

class SizingField {
 public:
  SizingField(const TaggedRegion& region, const MeshParams& p, double diam)
      : diam_(diam), alpha_(p.alpha) {
    h_int_ = p.h_interior > 0.0 ? p.h_interior : diam / 24.0;
    if (alpha_ > 0.0) {
      h_wall_ = p.h_wall_factor / alpha_;
      band_ = 3.0 / alpha_;
      t_corner_ = std::min(h_int_ / 64.0, h_wall_);
      corners_ = region.grading_corners;
    }
    for (const CurveRef& ref : region.boundary)
      if (ref.part == BoundaryPart::Robin) robin_.push_back(ref);
  }

  double operator()(const Vec2& x) const {
    double s = h_int_;
    if (alpha_ > 0.0 && !robin_.empty()) {
      const double d = robin_distance(x);
      if (d <= band_)
        s = std::min(s, std::max(h_wall_, std::min(0.5 * d, 0.2 / alpha_)));
    }
    for (const Vec2& v : corners_) {
      const double r = (x - v).norm();
      s = std::min(s, std::max(t_corner_, 0.7 * r));
    }
    return s;
  }

  double robin_distance(const Vec2& x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const CurveRef& ref : robin_) {
      const double lo = std::min(ref.s0, ref.s1), hi = std::max(ref.s0, ref.s1);
      double s = ref.curve->project(x, -1.0);
      s = std::clamp(s, lo, hi);
      best = std::min(best, (ref.curve->point(s) - x).norm());
    }
    return best;
  }

 private:
  double diam_, alpha_;
  double h_int_ = 0.0, h_wall_ = 0.0, band_ = 0.0, t_corner_ = 0.0;
  std::vector<Vec2> corners_;
  std::vector<CurveRef> robin_;
};

// ---------------------------------------------------------------------------
// geometric predicates (long double with local translation)
// ---------------------------------------------------------------------------

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  const long double acx = static_cast<long double>(a.x()) - c.x();
  const long double acy = static_cast<long double>(a.y()) - c.y();
  const long double bcx = static_cast<long double>(b.x()) - c.x();
  const long double bcy = static_cast<long double>(b.y()) - c.y();
  return static_cast<double>(acx * bcy - acy * bcx);
}

/// > 0 iff p lies strictly inside the circumcircle of ccw triangle (a,b,c).
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const long double adx = static_cast<long double>(a.x()) - p.x();
  const long double ady = static_cast<long double>(a.y()) - p.y();
  const long double bdx = static_cast<long double>(b.x()) - p.x();
  const long double bdy = static_cast<long double>(b.y()) - p.y();
  const long double cdx = static_cast<long double>(c.x()) - p.x();
  const long double cdy = static_cast<long double>(c.y()) - p.y();
  const long double ad = adx * adx + ady * ady;
  const long double bd = bdx * bdx + bdy * bdy;
  const long double cd = cdx * cdx + cdy * cdy;
  return static_cast<double>(adx * (bdy * cd - cdy * bd) -
                             ady * (bdx * cd - cdx * bd) +
                             ad * (bdx * cdy - cdx * bdy));
}

// ---------------------------------------------------------------------------
// constrained incremental Delaunay (Bowyer-Watson with blocked cavities)
// ---------------------------------------------------------------------------

struct Tri {
  int v[3];   // ccw vertices
  int n[3];   // neighbor opposite v[i]; -1 at the hull
  bool alive = false;
  bool inside = false;
};

std::uint64_t ekey(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

class Delaunay {
 public:
  std::vector<Vec2> pts;
  std::vector<Tri> tris;
  std::unordered_set<std::uint64_t> constraints;
  std::vector<int> vtri;  // some alive triangle containing each vertex

  void init_box(const Vec2& lo, const Vec2& hi) {
    const Vec2 c = 0.5 * (lo + hi);
    const double r = 4.0 * std::max((hi - lo).norm(), 1e-12);
    pts = {c + Vec2(-2.0 * r, -r), c + Vec2(2.0 * r, -r), c + Vec2(0.0, 2.0 * r)};
    vtri = {0, 0, 0};
    tris.push_back({{0, 1, 2}, {-1, -1, -1}, true, false});
  }

  int locate(const Vec2& p, int hint) const {
    int t = hint >= 0 && hint < static_cast<int>(tris.size()) && tris[hint].alive
                ? hint
                : first_alive();
    const int max_steps = static_cast<int>(tris.size()) * 2 + 16;
    for (int step = 0; step < max_steps; ++step) {
      bool moved = false;
      for (int i = 0; i < 3; ++i) {
        const int a = tris[t].v[(i + 1) % 3], b = tris[t].v[(i + 2) % 3];
        if (orient2d(pts[a], pts[b], p) < 0.0) {
          const int nb = tris[t].n[i];
          if (nb < 0) return t;  // outside hull: report the boundary triangle
          t = nb;
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    // deterministic fallback
    for (int i = 0; i < static_cast<int>(tris.size()); ++i)
      if (tris[i].alive && contains(i, p)) return i;
    fail(ErrorCode::QualityFailure, "point location failed");
  }

  bool contains(int t, const Vec2& p) const {
    for (int i = 0; i < 3; ++i)
      if (orient2d(pts[tris[t].v[(i + 1) % 3]], pts[tris[t].v[(i + 2) % 3]], p) <
          0.0)
        return false;
    return true;
  }

  /// Insert point id `pi` (already appended to pts); returns new triangle ids.
  std::vector<int> insert(int pi, int hint) {
    const Vec2& p = pts[static_cast<std::size_t>(pi)];
    const int start = locate(p, hint);

    // carve the cavity: incircle-positive triangles reachable without
    // crossing a constrained edge
    std::vector<int> cavity;
    std::vector<int> stack = {start};
    std::unordered_set<int> in_cavity = {start};
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      cavity.push_back(t);
      for (int i = 0; i < 3; ++i) {
        const int nb = tris[t].n[i];
        if (nb < 0 || in_cavity.count(nb)) continue;
        const int a = tris[t].v[(i + 1) % 3], b = tris[t].v[(i + 2) % 3];
        if (constraints.count(ekey(a, b))) continue;
        const Tri& nt = tris[nb];
        if (incircle(pts[nt.v[0]], pts[nt.v[1]], pts[nt.v[2]], p) > 0.0) {
          in_cavity.insert(nb);
          stack.push_back(nb);
        }
      }
    }

    // cavity boundary: directed edges (a,b) ccw with their outer triangle
    struct Rim {
      int a, b, outer;
    };
    std::vector<Rim> rim;
    std::unordered_set<std::uint64_t> rim_constrained;
    for (const int t : cavity) {
      for (int i = 0; i < 3; ++i) {
        const int nb = tris[t].n[i];
        if (nb >= 0 && in_cavity.count(nb)) continue;
        const int a = tris[t].v[(i + 1) % 3], b = tris[t].v[(i + 2) % 3];
        if (constraints.count(ekey(a, b)) && !rim_constrained.insert(ekey(a, b)).second)
          fail(ErrorCode::QualityFailure,
               "insertion cavity wrapped around a boundary segment");
        rim.push_back({a, b, nb});
      }
    }
    for (const int t : cavity) tris[t].alive = false;

    // fan from p; classification is repaired afterwards by the caller
    std::vector<int> created;
    std::unordered_map<int, int> by_first;   // rim edge start vertex -> new tri
    std::unordered_map<int, int> by_second;  // rim edge end vertex -> new tri
    created.reserve(rim.size());
    for (const Rim& r : rim) {
      const int id = static_cast<int>(tris.size());
      tris.push_back({{pi, r.a, r.b}, {r.outer, -1, -1}, true, false});
      if (r.outer >= 0) {
        Tri& out = tris[r.outer];
        for (int i = 0; i < 3; ++i) {
          const int oa = out.v[(i + 1) % 3], ob = out.v[(i + 2) % 3];
          if ((oa == r.b && ob == r.a) || (oa == r.a && ob == r.b)) out.n[i] = id;
        }
      }
      by_first[r.a] = id;
      by_second[r.b] = id;
      created.push_back(id);
    }
    if (by_first.size() != rim.size() || by_second.size() != rim.size())
      fail(ErrorCode::QualityFailure, "insertion cavity is pinched");
    // wire the fan: across edge (p,b) sits the tri starting at b, across
    // edge (p,a) the tri ending at a
    for (const int id : created) {
      Tri& t = tris[id];
      const auto i1 = by_first.find(t.v[2]);
      const auto i2 = by_second.find(t.v[1]);
      t.n[1] = i1 == by_first.end() ? -1 : i1->second;
      t.n[2] = i2 == by_second.end() ? -1 : i2->second;
    }
    vtri.resize(pts.size(), created.empty() ? 0 : created.front());
    vtri[pi] = created.front();
    for (const int id : created)
      for (int i = 0; i < 3; ++i) vtri[tris[id].v[i]] = id;
    return created;
  }

  int first_alive() const {
    for (int i = static_cast<int>(tris.size()) - 1; i >= 0; --i)
      if (tris[i].alive) return i;
    fail(ErrorCode::QualityFailure, "triangulation is empty");
  }

  /// True if (a,b) is an edge of the current triangulation.
  bool has_edge(int a, int b) const {
    const int t0 = vtri[a];
    if (t0 < 0 || !tris[t0].alive) return scan_edge(a, b);
    // circulate around a
    int t = t0;
    int guard = 0;
    do {
      int ia = -1;
      for (int i = 0; i < 3; ++i)
        if (tris[t].v[i] == a) ia = i;
      if (ia < 0) return scan_edge(a, b);
      if (tris[t].v[(ia + 1) % 3] == b || tris[t].v[(ia + 2) % 3] == b)
        return true;
      t = tris[t].n[(ia + 1) % 3];  // rotate
      if (t < 0) return scan_edge(a, b);  // hit the hull: fall back
    } while (t != t0 && ++guard < 1024);
    return guard >= 1024 ? scan_edge(a, b) : false;
  }

 private:
  bool scan_edge(int a, int b) const {
    for (const Tri& t : tris) {
      if (!t.alive) continue;
      for (int i = 0; i < 3; ++i)
        if ((t.v[i] == a && t.v[(i + 1) % 3] == b) ||
            (t.v[i] == b && t.v[(i + 1) % 3] == a))
          return true;
    }
    return false;
  }
};

// ---------------------------------------------------------------------------
// mesher
// ---------------------------------------------------------------------------

struct Seg {
  int a = 0, b = 0;
  int ref = 0;
  double sa = 0.0, sb = 0.0;
  bool alive = true;
};

class Mesher {
 public:
  Mesher(const TaggedRegion& region, const MeshParams& params)
      : region_(region), params_(params) {
    region_.validate();
    const auto [lo, hi] = region_.bounding_box();
    diam_ = (hi - lo).norm();
    size_ = std::make_unique<SizingField>(region_, params_, diam_);
    dt_.init_box(lo, hi);
  }

  Mesh run() {
    sample_boundary();
    insert_boundary_nodes();
    recover_segments();
    classify_parity();
    refine();
    return extract();
  }

 private:
  // ---- boundary sampling --------------------------------------------------

  void sample_fractions(const CurveRef& ref, double fa, double fb, int depth,
                        std::vector<double>& out) const {
    const Vec2 A = ref.at_fraction(fa), B = ref.at_fraction(fb);
    const double fm = 0.5 * (fa + fb);
    const Vec2 M = ref.at_fraction(fm);
    const double chord = (B - A).norm();
    const Vec2 mid_chord = 0.5 * (A + B);
    const double sag = (M - mid_chord).norm();
    const double target = (*size_)(M);
    if (depth >= 30 ||
        (chord <= target && sag <= 0.05 * chord + 1e-12 * diam_)) {
      out.push_back(fb);
      return;
    }
    sample_fractions(ref, fa, fm, depth + 1, out);
    sample_fractions(ref, fm, fb, depth + 1, out);
  }

  void sample_boundary() {
    const int nrefs = static_cast<int>(region_.boundary.size());
    boundary_nodes_.clear();
    int loop_start = -1;
    int prev_end = -1;
    for (int r = 0; r < nrefs; ++r) {
      const CurveRef& ref = region_.boundary[r];
      std::vector<double> fr = {0.0};
      sample_fractions(ref, 0.0, 1.0, 0, fr);
      // node ids along this ref
      std::vector<int> ids(fr.size());
      for (std::size_t i = 0; i < fr.size(); ++i) {
        if (i == 0) {
          if (prev_end >= 0) {
            ids[0] = prev_end;
            continue;
          }
          loop_start = ids[0] = add_point(ref.at_fraction(0.0));
          continue;
        }
        const bool last_of_loop = (r == nrefs - 1 && i + 1 == fr.size());
        ids[i] = last_of_loop ? loop_start : add_point(ref.at_fraction(fr[i]));
      }
      prev_end = ids.back();
      for (std::size_t i = 0; i + 1 < fr.size(); ++i) {
        Seg s;
        s.a = ids[i];
        s.b = ids[i + 1];
        s.ref = r;
        s.sa = ref.s0 + fr[i] * (ref.s1 - ref.s0);
        s.sb = ref.s0 + fr[i + 1] * (ref.s1 - ref.s0);
        add_seg(s);
      }
    }
    if (static_cast<int>(points_.size()) < 3)
      fail(ErrorCode::EmptyDomain, "boundary sampling produced too few nodes");
  }

  int add_point(const Vec2& p) {
    const auto key = std::make_pair(p.x(), p.y());
    const auto it = point_ids_.find(key);
    if (it != point_ids_.end()) return it->second;
    const int id = static_cast<int>(points_.size());
    points_.push_back(p);
    point_ids_.emplace(key, id);
    return id;
  }

  int add_seg(const Seg& s) {
    if (s.a == s.b)
      fail(ErrorCode::QualityFailure, "degenerate boundary segment");
    const int id = static_cast<int>(segs_.size());
    segs_.push_back(s);
    seg_of_edge_[ekey(s.a, s.b)] = id;
    seg_queue_.push_back(id);
    return id;
  }

  void drop_seg(int id) {
    segs_[id].alive = false;
    seg_of_edge_.erase(ekey(segs_[id].a, segs_[id].b));
    // the constraint set lives in triangulation ids (offset by the box)
    dt_.constraints.erase(ekey(dtid(segs_[id].a), dtid(segs_[id].b)));
  }

  // ---- triangulation passes ----------------------------------------------

  void insert_boundary_nodes() {
    int hint = 0;
    for (const Vec2& p : points_) {
      const int pi = static_cast<int>(dt_.pts.size());
      dt_.pts.push_back(p);
      const auto created = dt_.insert(pi, hint);
      if (!created.empty()) hint = created.front();
    }
  }

  /// dt point id of mesher point id (the 3 box vertices come first)
  static int dtid(int mesher_id) { return mesher_id + 3; }

  void recover_segments() {
    // Mark existing edges as constraints; split missing ones on the curve.
    std::deque<int> todo;
    for (int i = 0; i < static_cast<int>(segs_.size()); ++i) todo.push_back(i);
    int guard = 0;
    while (!todo.empty()) {
      if (++guard > 200000)
        fail(ErrorCode::QualityFailure, "boundary recovery did not terminate");
      const int id = todo.front();
      todo.pop_front();
      if (!segs_[id].alive) continue;
      const Seg s = segs_[id];
      if (dt_.has_edge(dtid(s.a), dtid(s.b))) {
        dt_.constraints.insert(ekey(dtid(s.a), dtid(s.b)));
        continue;
      }
      const int m = split_seg(id, /*requeue_encroach=*/false);
      // the two children are at the back of segs_
      todo.push_back(m);
      todo.push_back(m + 1);
    }
  }

  /// Split segment `id` at the curve parameter midpoint; returns the index of
  /// the first of the two child segments. Children are marked as constraints
  /// before the surrounding triangles are reclassified.
  int split_seg(int id, bool requeue_encroach) {
    const Seg s = segs_[id];
    const CurveRef& ref = region_.boundary[s.ref];
    const double sm = 0.5 * (s.sa + s.sb);
    const Vec2 pm = ref.curve->point(sm);
    drop_seg(id);
    const int mid = add_point(pm);
    if (mid != static_cast<int>(points_.size()) - 1)
      fail(ErrorCode::QualityFailure, "boundary split produced a duplicate node");
    const int pi = static_cast<int>(dt_.pts.size());
    dt_.pts.push_back(pm);
    const auto created = dt_.insert(pi, dt_.vtri[dtid(s.a)]);

    Seg s1{s.a, mid, s.ref, s.sa, sm, true};
    Seg s2{mid, s.b, s.ref, sm, s.sb, true};
    const int c1 = add_seg(s1);
    add_seg(s2);
    for (const int cid : {c1, c1 + 1}) {
      const Seg& c = segs_[cid];
      if (dt_.has_edge(dtid(c.a), dtid(c.b)))
        dt_.constraints.insert(ekey(dtid(c.a), dtid(c.b)));
      else if (requeue_encroach)
        // refinement-time splits sit on an existing edge, so the children
        // must appear immediately; only recovery-time splits may recurse
        fail(ErrorCode::QualityFailure,
             "boundary split did not produce a triangulation edge");
    }
    repair_classification(created);
    if (requeue_encroach) queue_touched_tris(created);
    return c1;
  }

  // ---- inside/outside parity ----------------------------------------------

  void classify_parity() {
    for (Tri& t : dt_.tris) t.inside = false;
    // seed: any triangle using a box vertex is outside
    std::deque<int> bfs;
    std::vector<char> seen(dt_.tris.size(), 0);
    for (int i = 0; i < static_cast<int>(dt_.tris.size()); ++i) {
      if (!dt_.tris[i].alive) continue;
      const Tri& t = dt_.tris[i];
      if (t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3) {
        dt_.tris[i].inside = false;
        seen[i] = 1;
        bfs.push_back(i);
      }
    }
    if (bfs.empty()) fail(ErrorCode::QualityFailure, "no hull triangle found");
    while (!bfs.empty()) {
      const int t = bfs.front();
      bfs.pop_front();
      for (int i = 0; i < 3; ++i) {
        const int nb = dt_.tris[t].n[i];
        if (nb < 0 || !dt_.tris[nb].alive || seen[nb]) continue;
        const int a = dt_.tris[t].v[(i + 1) % 3], b = dt_.tris[t].v[(i + 2) % 3];
        const bool flip = dt_.constraints.count(ekey(a, b)) > 0;
        dt_.tris[nb].inside = flip ? !dt_.tris[t].inside : dt_.tris[t].inside;
        seen[nb] = 1;
        bfs.push_back(nb);
      }
    }
  }

  /// After an insertion, classify the new fan triangles from their already
  /// classified neighbors (crossing a constraint flips inside/outside).
  void repair_classification(const std::vector<int>& created) {
    std::unordered_set<int> fresh(created.begin(), created.end());
    std::deque<int> bfs;
    std::vector<char> done;  // indexed within created
    std::unordered_map<int, int> pos;
    for (std::size_t i = 0; i < created.size(); ++i) pos[created[i]] = static_cast<int>(i);
    done.assign(created.size(), 0);
    // seeds: fan triangles with an old neighbor
    for (const int id : created) {
      const Tri& t = dt_.tris[id];
      for (int i = 0; i < 3; ++i) {
        const int nb = t.n[i];
        if (nb < 0) {
          // hull edge: the outer side is the box region
          const int a = t.v[(i + 1) % 3], b = t.v[(i + 2) % 3];
          const bool flip = dt_.constraints.count(ekey(a, b)) > 0;
          dt_.tris[id].inside = flip;  // outside is 'false'
          done[pos[id]] = 1;
          bfs.push_back(id);
          break;
        }
        if (!fresh.count(nb)) {
          const int a = t.v[(i + 1) % 3], b = t.v[(i + 2) % 3];
          const bool flip = dt_.constraints.count(ekey(a, b)) > 0;
          dt_.tris[id].inside =
              flip ? !dt_.tris[nb].inside : dt_.tris[nb].inside;
          done[pos[id]] = 1;
          bfs.push_back(id);
          break;
        }
      }
    }
    if (bfs.empty() && !created.empty())
      fail(ErrorCode::QualityFailure, "cannot classify inserted triangles");
    while (!bfs.empty()) {
      const int id = bfs.front();
      bfs.pop_front();
      const Tri& t = dt_.tris[id];
      for (int i = 0; i < 3; ++i) {
        const int nb = t.n[i];
        if (nb < 0 || !fresh.count(nb) || done[pos[nb]]) continue;
        const int a = t.v[(i + 1) % 3], b = t.v[(i + 2) % 3];
        const bool flip = dt_.constraints.count(ekey(a, b)) > 0;
        dt_.tris[nb].inside = flip ? !t.inside : t.inside;
        done[pos[nb]] = 1;
        bfs.push_back(nb);
      }
    }
  }

  // ---- refinement ----------------------------------------------------------

  static void tri_metrics(const Vec2& a, const Vec2& b, const Vec2& c,
                          Vec2& cc, double& circumradius, double& min_angle) {
    const Vec2 ab = b - a, ac = c - a;
    const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
    const double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
    if (std::abs(d) < 1e-300) {
      cc = a;
      circumradius = std::numeric_limits<double>::infinity();
      min_angle = 0.0;
      return;
    }
    cc = a + Vec2(ac.y() * ab2 - ab.y() * ac2, ab.x() * ac2 - ac.x() * ab2) / d;
    circumradius = (cc - a).norm();
    const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
    auto angle = [](double opp, double s1, double s2) {
      const double cosv =
          std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
      return std::acos(cosv);
    };
    min_angle = std::min({angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)});
  }

  bool tri_bad(int id, Vec2& cc) const {
    const Tri& t = dt_.tris[id];
    if (!t.alive || !t.inside) return false;
    double R, amin;
    tri_metrics(dt_.pts[t.v[0]], dt_.pts[t.v[1]], dt_.pts[t.v[2]], cc, R, amin);
    if (amin < params_.min_angle_deg * kPi / 180.0) return true;
    const Vec2 centroid =
        (dt_.pts[t.v[0]] + dt_.pts[t.v[1]] + dt_.pts[t.v[2]]) / 3.0;
    return R > (*size_)(centroid) / std::sqrt(3.0);
  }

  bool seg_encroached(int id) const {
    const Seg& s = segs_[id];
    if (!s.alive) return false;
    const Vec2 pa = points_[s.a], pb = points_[s.b];
    const Vec2 mid = 0.5 * (pa + pb);
    const double r2 = 0.25 * (pb - pa).squaredNorm();
    // apexes of the two adjacent triangles suffice for Delaunay meshes
    for (const int t : adjacent_tris(dtid(s.a), dtid(s.b))) {
      for (int i = 0; i < 3; ++i) {
        const int v = dt_.tris[t].v[i];
        if (v == dtid(s.a) || v == dtid(s.b) || v < 3) continue;
        if ((dt_.pts[v] - mid).squaredNorm() < r2 * (1.0 - 1e-12)) return true;
      }
    }
    return false;
  }

  bool in_diametral(int seg_id, const Vec2& p) const {
    const Seg& s = segs_[seg_id];
    if (!s.alive) return false;
    const Vec2 mid = 0.5 * (points_[s.a] + points_[s.b]);
    const double r2 = 0.25 * (points_[s.b] - points_[s.a]).squaredNorm();
    return (p - mid).squaredNorm() < r2 * (1.0 - 1e-12);
  }

  /// If `p` (located in triangle `at`) encroaches a boundary segment carried
  /// by `at` or its neighbors, return that segment id, else -1.
  int encroached_by_point(int at, const Vec2& p) const {
    std::vector<int> tris_to_check = {at};
    for (int i = 0; i < 3; ++i)
      if (dt_.tris[at].n[i] >= 0) tris_to_check.push_back(dt_.tris[at].n[i]);
    for (const int t : tris_to_check) {
      if (!dt_.tris[t].alive) continue;
      for (int i = 0; i < 3; ++i) {
        const int a = dt_.tris[t].v[(i + 1) % 3], b = dt_.tris[t].v[(i + 2) % 3];
        if (a < 3 || b < 3) continue;
        const auto it = seg_of_edge_.find(ekey(a - 3, b - 3));
        if (it != seg_of_edge_.end() && in_diametral(it->second, p))
          return it->second;
      }
    }
    return -1;
  }

  std::vector<int> adjacent_tris(int a, int b) const {
    std::vector<int> out;
    const int t0 = dt_.vtri[a];
    if (t0 < 0 || !dt_.tris[t0].alive) return out;
    // walk the star of a (both directions to survive hull interruptions)
    for (int dir = 0; dir < 2; ++dir) {
      int t = t0;
      int guard = 0;
      while (t >= 0 && guard++ < 2048) {
        int ia = -1;
        for (int i = 0; i < 3; ++i)
          if (dt_.tris[t].v[i] == a) ia = i;
        if (ia < 0) break;
        if (dt_.tris[t].v[(ia + 1) % 3] == b || dt_.tris[t].v[(ia + 2) % 3] == b)
          if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
        const int next = dt_.tris[t].n[dir == 0 ? (ia + 1) % 3 : (ia + 2) % 3];
        if (next == t0 || next < 0) break;
        t = next;
      }
    }
    return out;
  }

  void queue_touched_tris(const std::vector<int>& created) {
    for (const int id : created) {
      tri_queue_.push_back(id);
      const Tri& t = dt_.tris[id];
      for (int i = 0; i < 3; ++i) {
        const int a = t.v[(i + 1) % 3], b = t.v[(i + 2) % 3];
        const auto it = seg_of_edge_.find(a >= 3 && b >= 3
                                              ? ekey(a - 3, b - 3)
                                              : std::uint64_t(0));
        if (it != seg_of_edge_.end()) seg_queue_.push_back(it->second);
      }
    }
  }

  void refine() {
    for (int i = 0; i < static_cast<int>(dt_.tris.size()); ++i)
      tri_queue_.push_back(i);

    int guard = 0;
    while (!seg_queue_.empty() || !tri_queue_.empty()) {
      if (static_cast<int>(points_.size()) > params_.max_nodes) break;
      if (++guard > 50 * params_.max_nodes)
        fail(ErrorCode::QualityFailure, "refinement did not terminate");

      if (!seg_queue_.empty()) {
        const int id = seg_queue_.front();
        seg_queue_.pop_front();
        if (id < static_cast<int>(segs_.size()) && segs_[id].alive &&
            seg_encroached(id))
          split_seg(id, /*requeue_encroach=*/true);
        continue;
      }

      const int id = tri_queue_.front();
      tri_queue_.pop_front();
      if (id >= static_cast<int>(dt_.tris.size())) continue;
      Vec2 cc;
      if (!tri_bad(id, cc)) continue;
      if (!std::isfinite(cc.x()) || !std::isfinite(cc.y())) continue;

      // a circumcenter that encroaches a boundary segment splits the segment
      // instead of being inserted (Ruppert's rule); one that falls outside
      // the domain splits the segment shielding it
      const int at = dt_.locate(cc, id);
      const int enc = encroached_by_point(at, cc);
      if (enc >= 0) {
        split_seg(enc, /*requeue_encroach=*/true);
        tri_queue_.push_back(id);  // revisit once the boundary settled
        continue;
      }
      if (!dt_.tris[at].inside) {
        const int blocking = walk_blocking_seg(id, cc);
        if (blocking >= 0 && in_diametral(blocking, cc)) {
          split_seg(blocking, /*requeue_encroach=*/true);
          tri_queue_.push_back(id);
        }
        continue;  // never insert an exterior circumcenter
      }
      const int pi = static_cast<int>(dt_.pts.size());
      dt_.pts.push_back(cc);
      const int mesher_id = add_point(cc);
      if (mesher_id != static_cast<int>(points_.size()) - 1) {
        // circumcenter coincides with an existing node: drop it
        dt_.pts.pop_back();
        continue;
      }
      const auto created = dt_.insert(pi, at);
      repair_classification(created);
      queue_touched_tris(created);
    }

    // hard floor check
    double worst = std::numeric_limits<double>::infinity();
    int worst_tri = -1;
    for (int i = 0; i < static_cast<int>(dt_.tris.size()); ++i) {
      const Tri& t = dt_.tris[i];
      if (!t.alive || !t.inside) continue;
      Vec2 cc;
      double R, amin;
      tri_metrics(dt_.pts[t.v[0]], dt_.pts[t.v[1]], dt_.pts[t.v[2]], cc, R, amin);
      if (amin < worst) {
        worst = amin;
        worst_tri = i;
      }
    }
    if (worst < 20.0 * kPi / 180.0) {
      if (worst_tri >= 0 && std::getenv("ROBINSPEC_MESH_DEBUG")) {
        const Tri& t = dt_.tris[worst_tri];
        std::fprintf(stderr,
                     "[mesh] worst tri %d: (%.17g,%.17g) (%.17g,%.17g) "
                     "(%.17g,%.17g) nodes=%zu\n",
                     worst_tri, dt_.pts[t.v[0]].x(), dt_.pts[t.v[0]].y(),
                     dt_.pts[t.v[1]].x(), dt_.pts[t.v[1]].y(),
                     dt_.pts[t.v[2]].x(), dt_.pts[t.v[2]].y(), points_.size());
      }
      char msg[160];
      std::snprintf(msg, sizeof(msg),
                    "mesh quality floor (20 degrees) not reached: worst angle "
                    "%.3f degrees with %d of %d nodes",
                    worst * 180.0 / kPi, static_cast<int>(points_.size()),
                    params_.max_nodes);
      fail(ErrorCode::QualityFailure, msg);
    }
  }

  /// Returns the segment id whose constrained edge blocks the straight walk
  /// from triangle `t0` to point `target`, or -1 if the walk reaches it.
  int walk_blocking_seg(int t0, const Vec2& target) {
    const Tri& t = dt_.tris[t0];
    const Vec2 from = (dt_.pts[t.v[0]] + dt_.pts[t.v[1]] + dt_.pts[t.v[2]]) / 3.0;
    int cur = t0;
    int guard = 0;
    while (guard++ < 4096) {
      if (dt_.contains(cur, target)) return -1;
      // step across the edge cut by segment from->target
      int next = -1, via = -1;
      for (int i = 0; i < 3; ++i) {
        const int a = dt_.tris[cur].v[(i + 1) % 3], b = dt_.tris[cur].v[(i + 2) % 3];
        const Vec2& pa = dt_.pts[a];
        const Vec2& pb = dt_.pts[b];
        // edge (a,b) separates the centroid from the target?
        const double oa = orient2d(from, target, pa);
        const double ob = orient2d(from, target, pb);
        const double et = orient2d(pa, pb, target);
        if (oa * ob <= 0.0 && et < 0.0) {
          next = dt_.tris[cur].n[i];
          via = i;
          break;
        }
      }
      if (next < 0) return -1;  // hull or no separating edge: give up cleanly
      const int a = dt_.tris[cur].v[(via + 1) % 3], b = dt_.tris[cur].v[(via + 2) % 3];
      if (dt_.constraints.count(ekey(a, b))) {
        const auto it = seg_of_edge_.find(ekey(a - 3, b - 3));
        if (it != seg_of_edge_.end()) return it->second;
        return -1;
      }
      cur = next;
    }
    return -1;
  }

  // ---- export ---------------------------------------------------------------

  Mesh extract() {
    Mesh mesh;
    mesh.refs = region_.boundary;
    mesh.nodes = points_;
    for (const Tri& t : dt_.tris) {
      if (!t.alive || !t.inside) continue;
      if (t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3)
        fail(ErrorCode::QualityFailure, "box vertex leaked into the domain");
      std::array<int, 3> tri = {t.v[0] - 3, t.v[1] - 3, t.v[2] - 3};
      if (orient2d(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]) <=
          0.0)
        std::swap(tri[1], tri[2]);
      mesh.tris.push_back(tri);
    }
    if (mesh.tris.empty()) fail(ErrorCode::EmptyDomain, "no interior triangles");
    for (const Seg& s : segs_) {
      if (!s.alive) continue;
      const CurveRef& ref = region_.boundary[s.ref];
      mesh.bedges.push_back({s.a, s.b, ref.part, s.ref, s.sa, s.sb});
    }
    return mesh;
  }

  TaggedRegion region_;
  MeshParams params_;
  double diam_ = 0.0;
  std::unique_ptr<SizingField> size_;
  Delaunay dt_;
  std::vector<Vec2> points_;
  std::map<std::pair<double, double>, int> point_ids_;
  std::vector<Seg> segs_;
  std::unordered_map<std::uint64_t, int> seg_of_edge_;
  std::deque<int> seg_queue_;
  std::deque<int> tri_queue_;
  std::vector<int> boundary_nodes_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Mesh methods
// ---------------------------------------------------------------------------

double Mesh::area() const {
  double a = 0.0;
  for (const auto& t : tris) {
    const Vec2& p0 = nodes[t[0]];
    const Vec2& p1 = nodes[t[1]];
    const Vec2& p2 = nodes[t[2]];
    a += 0.5 * ((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
  }
  return a;
}

double Mesh::min_angle_deg() const {
  double worst = 180.0;
  for (const auto& t : tris) {
    const Vec2 &a = nodes[t[0]], &b = nodes[t[1]], &c = nodes[t[2]];
    const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
    auto ang = [](double opp, double s1, double s2) {
      return std::acos(std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2),
                                  -1.0, 1.0)) *
             180.0 / kPi;
    };
    worst = std::min({worst, ang(la, lb, lc), ang(lb, lc, la), ang(lc, la, lb)});
  }
  return worst;
}

double Mesh::min_bedge_length() const {
  double m = std::numeric_limits<double>::infinity();
  for (const BEdge& e : bedges) m = std::min(m, (nodes[e.a] - nodes[e.b]).norm());
  return m;
}

namespace {
void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}
template <class T>
void fnv_pod(std::uint64_t& h, const T& v) {
  fnv_bytes(h, &v, sizeof(T));
}
}  // namespace

std::uint64_t Mesh::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Vec2& p : nodes) {
    fnv_pod(h, p.x());
    fnv_pod(h, p.y());
  }
  for (const auto& t : tris)
    for (int v : t) fnv_pod(h, v);
  for (const BEdge& e : bedges) {
    fnv_pod(h, e.a);
    fnv_pod(h, e.b);
    fnv_pod(h, static_cast<int>(e.part));
    fnv_pod(h, e.ref_index);
    fnv_pod(h, e.sa);
    fnv_pod(h, e.sb);
  }
  return h;
}

void Mesh::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write mesh file '" + path + "'");
  out.precision(17);
  out << "robinspec-mesh 1\n";
  out << "nodes " << nodes.size() << "\n";
  for (const Vec2& p : nodes) out << p.x() << " " << p.y() << "\n";
  out << "tris " << tris.size() << "\n";
  for (const auto& t : tris) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "bedges " << bedges.size() << "\n";
  for (const BEdge& e : bedges)
    out << e.a << " " << e.b << " " << static_cast<int>(e.part) << " "
        << e.ref_index << " " << e.sa << " " << e.sb << "\n";
  if (!out) fail(ErrorCode::IoFailure, "failed writing mesh file '" + path + "'");
}

Mesh Mesh::load(const std::string& path, const TaggedRegion& region) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot read mesh file '" + path + "'");
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "robinspec-mesh" || version != 1)
    fail(ErrorCode::BadInput, "not a mesh file: '" + path + "'");
  std::string word;
  std::size_t n = 0;
  Mesh mesh;
  in >> word >> n;
  if (word != "nodes") fail(ErrorCode::BadInput, "malformed mesh file");
  mesh.nodes.resize(n);
  for (auto& p : mesh.nodes) in >> p.x() >> p.y();
  in >> word >> n;
  if (word != "tris") fail(ErrorCode::BadInput, "malformed mesh file");
  mesh.tris.resize(n);
  for (auto& t : mesh.tris) in >> t[0] >> t[1] >> t[2];
  in >> word >> n;
  if (word != "bedges") fail(ErrorCode::BadInput, "malformed mesh file");
  mesh.bedges.resize(n);
  for (auto& e : mesh.bedges) {
    int part = 0;
    in >> e.a >> e.b >> part >> e.ref_index >> e.sa >> e.sb;
    e.part = static_cast<BoundaryPart>(part);
  }
  if (!in) fail(ErrorCode::BadInput, "truncated mesh file: '" + path + "'");
  mesh.refs = region.boundary;
  // sanity: edges must sit on the region's curves
  const auto [lo, hi] = region.bounding_box();
  const double scale = (hi - lo).norm();
  for (const BEdge& e : mesh.bedges) {
    if (e.ref_index < 0 || e.ref_index >= static_cast<int>(mesh.refs.size()))
      fail(ErrorCode::BadInput, "mesh file does not match the region (ref index)");
    const CurveRef& ref = mesh.refs[e.ref_index];
    if ((ref.curve->point(e.sa) - mesh.nodes[e.a]).norm() > 1e-6 * scale)
      fail(ErrorCode::BadInput, "mesh file does not match the region (geometry)");
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// public entry points
// ---------------------------------------------------------------------------

Mesh mesh_region(const TaggedRegion& region, const MeshParams& params) {
  Mesher mesher(region, params);
  Mesh mesh = mesher.run();
  for (int i = 0; i < params.refine_rounds; ++i) mesh = refine_red(mesh);
  return mesh;
}

Mesh refine_red(const Mesh& mesh) {
  Mesh out;
  out.refs = mesh.refs;
  out.nodes = mesh.nodes;

  std::unordered_map<std::uint64_t, int> midpoint;
  std::unordered_map<std::uint64_t, const BEdge*> bedge_of;
  for (const BEdge& e : mesh.bedges) bedge_of[ekey(e.a, e.b)] = &e;

  auto mid_id = [&](int a, int b) {
    const std::uint64_t k = ekey(a, b);
    const auto it = midpoint.find(k);
    if (it != midpoint.end()) return it->second;
    Vec2 p;
    const auto be = bedge_of.find(k);
    if (be != bedge_of.end()) {
      const BEdge& e = *be->second;
      p = mesh.refs[e.ref_index].curve->point(0.5 * (e.sa + e.sb));
    } else {
      p = 0.5 * (mesh.nodes[a] + mesh.nodes[b]);
    }
    const int id = static_cast<int>(out.nodes.size());
    out.nodes.push_back(p);
    midpoint.emplace(k, id);
    return id;
  };

  for (const auto& t : mesh.tris) {
    const int m01 = mid_id(t[0], t[1]);
    const int m12 = mid_id(t[1], t[2]);
    const int m20 = mid_id(t[2], t[0]);
    out.tris.push_back({t[0], m01, m20});
    out.tris.push_back({t[1], m12, m01});
    out.tris.push_back({t[2], m20, m12});
    out.tris.push_back({m01, m12, m20});
  }
  for (const BEdge& e : mesh.bedges) {
    const int m = mid_id(e.a, e.b);
    const double sm = 0.5 * (e.sa + e.sb);
    out.bedges.push_back({e.a, m, e.part, e.ref_index, e.sa, sm});
    out.bedges.push_back({m, e.b, e.part, e.ref_index, sm, e.sb});
  }
  return out;
}

std::uint64_t mesh_request_hash(const TaggedRegion& region,
                                const MeshParams& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const CurveRef& ref : region.boundary) {
    for (int i = 0; i <= 16; ++i) {
      const Vec2 p = ref.at_fraction(i / 16.0);
      fnv_pod(h, p.x());
      fnv_pod(h, p.y());
    }
    fnv_pod(h, static_cast<int>(ref.part));
  }
  for (const Vec2& c : region.grading_corners) {
    fnv_pod(h, c.x());
    fnv_pod(h, c.y());
  }
  fnv_pod(h, params.alpha);
  fnv_pod(h, params.h_interior);
  fnv_pod(h, params.h_wall_factor);
  fnv_pod(h, params.min_angle_deg);
  fnv_pod(h, params.max_nodes);
  fnv_pod(h, params.refine_rounds);
  return h;
}

Mesh mesh_region_cached(const TaggedRegion& region, const MeshParams& params,
                        const std::string& cache_dir) {
  if (cache_dir.empty()) return mesh_region(region, params);
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.mesh",
                static_cast<unsigned long long>(mesh_request_hash(region, params)));
  const std::filesystem::path path = std::filesystem::path(cache_dir) / name;
  if (std::filesystem::exists(path)) {
    try {
      return Mesh::load(path.string(), region);
    } catch (const Error&) {
      // fall through and rebuild
    }
  }
  Mesh mesh = mesh_region(region, params);
  std::filesystem::create_directories(cache_dir);
  mesh.save(path.string());
  return mesh;
}

}  // namespace robinspec
