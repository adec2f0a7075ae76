#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pointcam/rng.hpp"

namespace pointcam::geometry {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double squared_norm() const { return x * x + y * y + z * z; }
  double norm() const;
  bool is_finite() const;
};

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{};

  static Mat3 identity();
  double& at(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }
  double at(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }

  Vec3 operator*(const Vec3& v) const;
  Mat3 operator*(const Mat3& o) const;
  Mat3 transposed() const;
  double determinant() const;
  double trace() const { return m[0] + m[4] + m[8]; }
};

/// N x 3 coordinates with optional per-point class ids.
struct PointCloud {
  std::vector<Vec3> coords;
  std::optional<std::vector<int>> labels;
  std::string id;

  int size() const { return static_cast<int>(coords.size()); }
  bool has_labels() const { return labels.has_value(); }

  /// Throws std::invalid_argument on a violated invariant: empty cloud,
  /// non-finite coordinate, or label array of the wrong length.
  void validate() const;
};

struct RigidTransform {
  Mat3 rotation = Mat3::identity();
  Vec3 translation{};

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  /// R'R = I and det(R) = 1, both within tol.
  bool is_valid_rotation(double tol = 1e-9) const;
};

struct Aabb {
  Vec3 min{};
  Vec3 max{};

  bool contains(const Vec3& p, double tol = 0.0) const {
    return p.x >= min.x - tol && p.x <= max.x + tol && p.y >= min.y - tol &&
           p.y <= max.y + tol && p.z >= min.z - tol && p.z <= max.z + tol;
  }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return (max - min).norm(); }
};

/// Indices of the k points closest to cloud.coords[seed_index] (seed
/// included), ordered by (squared distance, index) ascending. Equal
/// distances resolve to the lower index so augmentation is reproducible.
std::vector<int> knn(int seed_index, const PointCloud& cloud, int k);

/// Greedy max-min subset of m points starting at start_index. Ties in the
/// max-min distance go to the lower index; fully deterministic.
std::vector<int> farthest_point_sample(const PointCloud& cloud, int m, int start_index);

Aabb aabb(const PointCloud& cloud);

/// Rotation part of a random rigid transform. max_angle = pi selects
/// uniform sampling over SO(3) (unit quaternions); smaller values use a
/// uniform random axis with angle ~ U[0, max_angle].
Mat3 random_rotation(Rng& rng, double max_angle);

/// Extracts the rotation angle acos((tr(R) - 1) / 2), clamped into [0, pi].
double rotation_angle(const Mat3& r);

std::vector<Vec3> apply_rigid(const std::vector<Vec3>& points, const RigidTransform& xf);

Vec3 centroid(const std::vector<Vec3>& points);

/// Zero-centroid, unit max-radius copy of the cloud (labels preserved).
/// Applied to every cloud before training so translation targets live in a
/// comparable coordinate range.
PointCloud normalize_cloud(const PointCloud& cloud);

}  // namespace pointcam::geometry
