#include "pointcam/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pointcam::data {

namespace {

using geometry::Vec3;

struct LineReader {
  std::istringstream in;
  std::size_t line_no = 0;

  explicit LineReader(const std::string& text) : in(text) {}

  /// Next line that is neither blank nor a '#' comment; false at EOF.
  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::size_t i = 0;
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i == line.size() || line[i] == '#') continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw std::runtime_error("line " + std::to_string(line_no) + ": " + message);
  }
};

}  // namespace

void TriangleMesh::validate() const {
  const int v = static_cast<int>(vertices.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int idx : faces[f]) {
      if (idx < 0 || idx >= v) {
        throw std::invalid_argument("face " + std::to_string(f) +
                                    " references vertex " + std::to_string(idx) +
                                    " of " + std::to_string(v));
      }
    }
  }
}

TriangleMesh parse_off(const std::string& text) {
  LineReader reader(text);
  std::string line;
  if (!reader.next(line)) throw std::runtime_error("line 0: empty OFF input");

  std::size_t start = line.find_first_not_of(" \t");
  line = line.substr(start);
  if (line.compare(0, 3, "OFF") != 0) reader.fail("expected OFF header");
  std::string counts = line.substr(3);  // glued-header files put counts here
  if (counts.find_first_not_of(" \t") == std::string::npos) {
    if (!reader.next(counts)) reader.fail("missing vertex/face counts");
  }

  long v_count = 0;
  long f_count = 0;
  long e_count = 0;
  {
    std::istringstream nums(counts);
    if (!(nums >> v_count >> f_count >> e_count) || v_count < 0 || f_count < 0) {
      reader.fail("malformed counts line '" + counts + "'");
    }
  }

  TriangleMesh mesh;
  mesh.vertices.reserve(v_count);
  for (long i = 0; i < v_count; ++i) {
    if (!reader.next(line)) reader.fail("expected " + std::to_string(v_count) +
                                        " vertices, file ended after " +
                                        std::to_string(i));
    std::istringstream nums(line);
    Vec3 p;
    if (!(nums >> p.x >> p.y >> p.z)) {
      reader.fail("malformed vertex '" + line + "'");
    }
    mesh.vertices.push_back(p);  // trailing columns (color) ignored
  }
  for (long f = 0; f < f_count; ++f) {
    if (!reader.next(line)) reader.fail("expected " + std::to_string(f_count) +
                                        " faces, file ended after " +
                                        std::to_string(f));
    std::istringstream nums(line);
    long n = 0;
    if (!(nums >> n) || n < 3) reader.fail("malformed face '" + line + "'");
    std::vector<int> poly;
    for (long i = 0; i < n; ++i) {
      long idx = 0;
      if (!(nums >> idx)) reader.fail("face lists fewer than " + std::to_string(n) +
                                      " vertices: '" + line + "'");
      if (idx < 0 || idx >= v_count) {
        reader.fail("vertex index " + std::to_string(idx) + " out of range [0," +
                     std::to_string(v_count) + ")");
      }
      poly.push_back(static_cast<int>(idx));
    }
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {  // fan triangulation
      mesh.faces.push_back({poly[0], poly[i], poly[i + 1]});
    }
  }
  return mesh;
}

TriangleMesh parse_off_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_off(buffer.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string write_off(const TriangleMesh& mesh) {
  std::ostringstream out;
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
  char buf[96];
  for (const Vec3& p : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x, p.y, p.z);
    out << buf;
  }
  for (const auto& f : mesh.faces) {
    out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
  return out.str();
}

double face_area(const TriangleMesh& mesh, int face) {
  const auto& f = mesh.faces[face];
  const Vec3 ab = mesh.vertices[f[1]] - mesh.vertices[f[0]];
  const Vec3 ac = mesh.vertices[f[2]] - mesh.vertices[f[0]];
  return 0.5 * ab.cross(ac).norm();
}

TriangleMesh drop_degenerate_faces(const TriangleMesh& mesh) {
  mesh.validate();
  TriangleMesh clean;
  clean.vertices = mesh.vertices;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (face_area(mesh, static_cast<int>(f)) > 0.0) {
      clean.faces.push_back(mesh.faces[f]);
    }
  }
  return clean;
}

geometry::PointCloud sample_mesh_surface(const TriangleMesh& mesh, int n, Rng& rng) {
  mesh.validate();
  if (n < 0) throw std::invalid_argument("point count must be non-negative");
  std::vector<double> cumulative;
  cumulative.reserve(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += face_area(mesh, static_cast<int>(f));
    cumulative.push_back(total);
  }
  if (n > 0 && !(total > 0.0)) {
    throw std::invalid_argument("mesh has zero total surface area");
  }
  geometry::PointCloud cloud;
  cloud.coords.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    const std::size_t face =
        std::min<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                  cumulative.begin(),
                              cumulative.size() - 1);
    const auto& f = mesh.faces[face];
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const double s = std::sqrt(rng.uniform());
    const double t = rng.uniform();
    cloud.coords.push_back(a * (1.0 - s) + b * (s * (1.0 - t)) + c * (s * t));
  }
  return cloud;
}

}  // namespace pointcam::data
