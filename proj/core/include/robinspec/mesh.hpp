#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "robinspec/geometry.hpp"

namespace robinspec {

/// Sizing / quality controls for the Delaunay refinement mesher.
///
/// The sizing field combines three length scales and takes the pointwise
/// minimum:
///  * an interior scale `h_interior` (auto: diameter / 24);
///  * a boundary-layer scale near the Robin part: within distance 3/alpha of
///    it the target size is max(h_wall, min(dist/2, 0.2/alpha)) with
///    h_wall = h_wall_factor / alpha, resolving the e^{-alpha * dist}
///    eigenfunction layer;
///  * a corner ladder around each grading corner v: max(t_v, 0.7 * |x - v|)
///    with t_v = min(h_interior / 64, h_wall), giving a geometric
///    progression into the corner.
/// Setting alpha <= 0 disables the boundary-layer and corner terms.
struct MeshParams {
  double alpha = 0.0;
  double h_interior = 0.0;  ///< 0: use diameter / 24
  double h_wall_factor = 0.025;
  double min_angle_deg = 26.0;  ///< refinement target; 20 is the hard floor
  int max_nodes = 400000;
  int refine_rounds = 0;  ///< uniform red refinements applied after meshing
};

/// Boundary edge of the mesh: node pair, the boundary part it carries, and
/// its location on the source curve (ref_index into Mesh::refs, arc-length
/// parameters of the two endpoints, in traversal order).
struct BEdge {
  int a = 0;
  int b = 0;
  BoundaryPart part = BoundaryPart::Robin;
  int ref_index = 0;
  double sa = 0.0;
  double sb = 0.0;
};

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;  ///< ccw node triples
  std::vector<BEdge> bedges;
  std::vector<CurveRef> refs;  ///< geometry handles for the boundary

  double area() const;
  double min_angle_deg() const;
  double min_bedge_length() const;
  /// FNV-1a over node coordinates, triangles, and boundary edges.
  std::uint64_t content_hash() const;

  /// Plain-text serialization (geometry handles are not stored; `load`
  /// re-binds them from the region the mesh was built for).
  void save(const std::string& path) const;
  static Mesh load(const std::string& path, const TaggedRegion& region);
};

/// Delaunay refinement (Ruppert-style) over the region: samples the boundary
/// against the sizing field with matched corner ladders, builds a constrained
/// Delaunay triangulation, splits encroached boundary segments (new points
/// projected onto the source curves), and inserts circumcenters until all
/// triangles meet the sizing field and the angle target.  Fails with
/// QualityFailure if the node cap is hit before the 20-degree floor holds.
/// Deterministic: identical input produces an identical mesh.
Mesh mesh_region(const TaggedRegion& region, const MeshParams& params);

/// Uniform red refinement (each triangle into four); midpoints of boundary
/// edges are placed on the source curve at the parameter midpoint.
Mesh refine_red(const Mesh& mesh);

/// Key for the on-disk mesh cache: hash of the region geometry (sampled),
/// the tags, and the meshing parameters.
std::uint64_t mesh_request_hash(const TaggedRegion& region, const MeshParams& params);

/// Memoized mesh_region: stores/loads `<cache_dir>/<hash>.mesh`.  An empty
/// cache_dir disables caching.
Mesh mesh_region_cached(const TaggedRegion& region, const MeshParams& params,
                        const std::string& cache_dir);

}  // namespace robinspec
