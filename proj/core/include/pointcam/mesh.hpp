#pragma once

#include <array>
#include <string>
#include <vector>

#include "pointcam/geometry.hpp"
#include "pointcam/rng.hpp"

namespace pointcam::data {

struct TriangleMesh {
  std::vector<geometry::Vec3> vertices;
  std::vector<std::array<int, 3>> faces;

  /// Checks index ranges; throws std::invalid_argument on a bad face.
  void validate() const;
};

/// ASCII OFF parser. Accepts the common corpus quirk of counts glued to the
/// header ("OFF490 518 0"), skips comments and blank lines, and
/// fan-triangulates polygons with more than three vertices. Errors carry a
/// 1-based line number.
TriangleMesh parse_off(const std::string& text);
TriangleMesh parse_off_file(const std::string& path);

/// Canonical ASCII OFF (triangles only); parse_off(write_off(m)) == m.
std::string write_off(const TriangleMesh& mesh);

/// Copy without zero-area faces.
TriangleMesh drop_degenerate_faces(const TriangleMesh& mesh);

double face_area(const TriangleMesh& mesh, int face);

/// n points drawn uniformly over the surface: faces weighted by area,
/// position by square-root barycentric sampling. Two rng draws per point
/// after one draw for the face pick.
geometry::PointCloud sample_mesh_surface(const TriangleMesh& mesh, int n, Rng& rng);

}  // namespace pointcam::data
