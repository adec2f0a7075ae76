#include "pointcam/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pointcam::geometry {

double Vec3::norm() const { return std::sqrt(squared_norm()); }

bool Vec3::is_finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

Mat3 Mat3::identity() {
  Mat3 r;
  r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  return r;
}

Vec3 Mat3::operator*(const Vec3& v) const {
  return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
          m[3] * v.x + m[4] * v.y + m[5] * v.z,
          m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += at(i, k) * o.at(k, j);
      r.at(i, j) = s;
    }
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.at(i, j) = at(j, i);
  return r;
}

double Mat3::determinant() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

void PointCloud::validate() const {
  if (coords.empty()) throw std::invalid_argument("point cloud must contain at least one point");
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!coords[i].is_finite())
      throw std::invalid_argument("point cloud has non-finite coordinate at row " + std::to_string(i));
  }
  if (labels && labels->size() != coords.size())
    throw std::invalid_argument("label array length " + std::to_string(labels->size()) +
                                " does not match point count " + std::to_string(coords.size()));
}

bool RigidTransform::is_valid_rotation(double tol) const {
  const Mat3 gram = rotation.transposed() * rotation;
  const Mat3 eye = Mat3::identity();
  for (int i = 0; i < 9; ++i) {
    if (std::abs(gram.m[static_cast<std::size_t>(i)] - eye.m[static_cast<std::size_t>(i)]) > tol)
      return false;
  }
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

std::vector<int> knn(int seed_index, const PointCloud& cloud, int k) {
  const int n = cloud.size();
  if (k < 1 || k > n)
    throw std::invalid_argument("knn: k=" + std::to_string(k) + " outside [1, N=" + std::to_string(n) + "]");
  if (seed_index < 0 || seed_index >= n)
    throw std::invalid_argument("knn: seed index " + std::to_string(seed_index) + " outside cloud of size " +
                                std::to_string(n));

  const Vec3 seed = cloud.coords[static_cast<std::size_t>(seed_index)];
  std::vector<std::pair<double, int>> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    order[static_cast<std::size_t>(i)] = {squared_distance(seed, cloud.coords[static_cast<std::size_t>(i)]), i};

  std::partial_sort(order.begin(), order.begin() + k, order.end());

  std::vector<int> result(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) result[static_cast<std::size_t>(i)] = order[static_cast<std::size_t>(i)].second;
  return result;
}

std::vector<int> farthest_point_sample(const PointCloud& cloud, int m, int start_index) {
  const int n = cloud.size();
  if (m < 1 || m > n)
    throw std::invalid_argument("farthest_point_sample: m=" + std::to_string(m) + " outside [1, N=" +
                                std::to_string(n) + "]");
  if (start_index < 0 || start_index >= n)
    throw std::invalid_argument("farthest_point_sample: start index " + std::to_string(start_index) +
                                " outside cloud of size " + std::to_string(n));

  std::vector<int> selected;
  selected.reserve(static_cast<std::size_t>(m));
  selected.push_back(start_index);

  std::vector<double> min_d2(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    min_d2[static_cast<std::size_t>(i)] =
        squared_distance(cloud.coords[static_cast<std::size_t>(i)], cloud.coords[static_cast<std::size_t>(start_index)]);

  while (static_cast<int>(selected.size()) < m) {
    int best = 0;
    double best_d2 = -1.0;
    for (int i = 0; i < n; ++i) {
      if (min_d2[static_cast<std::size_t>(i)] > best_d2) {
        best_d2 = min_d2[static_cast<std::size_t>(i)];
        best = i;
      }
    }
    selected.push_back(best);
    for (int i = 0; i < n; ++i) {
      const double d2 = squared_distance(cloud.coords[static_cast<std::size_t>(i)],
                                         cloud.coords[static_cast<std::size_t>(best)]);
      if (d2 < min_d2[static_cast<std::size_t>(i)]) min_d2[static_cast<std::size_t>(i)] = d2;
    }
  }
  return selected;
}

Aabb aabb(const PointCloud& cloud) {
  if (cloud.coords.empty()) throw std::invalid_argument("aabb: empty cloud");
  Aabb box{cloud.coords.front(), cloud.coords.front()};
  for (const Vec3& p : cloud.coords) {
    box.min.x = std::min(box.min.x, p.x);
    box.min.y = std::min(box.min.y, p.y);
    box.min.z = std::min(box.min.z, p.z);
    box.max.x = std::max(box.max.x, p.x);
    box.max.y = std::max(box.max.y, p.y);
    box.max.z = std::max(box.max.z, p.z);
  }
  return box;
}

namespace {

Mat3 axis_angle_to_matrix(const Vec3& axis, double angle) {
  // Rodrigues formula; axis must be unit length.
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  const double x = axis.x, y = axis.y, z = axis.z;
  Mat3 r;
  r.m = {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
         t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
         t * x * z - s * y, t * y * z + s * x, t * z * z + c};
  return r;
}

Mat3 quaternion_to_matrix(double w, double x, double y, double z) {
  Mat3 r;
  r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
         2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
  return r;
}

Vec3 random_unit_vector(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

}  // namespace

Mat3 random_rotation(Rng& rng, double max_angle) {
  if (max_angle < 0.0 || max_angle > kPi)
    throw std::invalid_argument("random_rotation: max_angle " + std::to_string(max_angle) +
                                " outside [0, pi]");
  if (max_angle == 0.0) return Mat3::identity();
  if (max_angle >= kPi) {
    // Shoemake's method: uniform unit quaternion -> uniform over SO(3).
    const double u1 = rng.uniform();
    const double u2 = rng.uniform(0.0, 2.0 * kPi);
    const double u3 = rng.uniform(0.0, 2.0 * kPi);
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    return quaternion_to_matrix(a * std::sin(u2), a * std::cos(u2), b * std::sin(u3), b * std::cos(u3));
  }
  const Vec3 axis = random_unit_vector(rng);
  const double angle = rng.uniform(0.0, max_angle);
  return axis_angle_to_matrix(axis, angle);
}

double rotation_angle(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

std::vector<Vec3> apply_rigid(const std::vector<Vec3>& points, const RigidTransform& xf) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(xf.apply(p));
  return out;
}

Vec3 centroid(const std::vector<Vec3>& points) {
  if (points.empty()) throw std::invalid_argument("centroid: empty point set");
  Vec3 sum{};
  for (const Vec3& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

PointCloud normalize_cloud(const PointCloud& cloud) {
  cloud.validate();
  PointCloud out = cloud;
  const Vec3 c = centroid(cloud.coords);
  double max_r2 = 0.0;
  for (Vec3& p : out.coords) {
    p = p - c;
    max_r2 = std::max(max_r2, p.squared_norm());
  }
  if (max_r2 > 0.0) {
    const double inv = 1.0 / std::sqrt(max_r2);
    for (Vec3& p : out.coords) p = p * inv;
  }
  return out;
}

}  // namespace pointcam::geometry
