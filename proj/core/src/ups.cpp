#include "pointcam/ups.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pointcam::ups {

using geometry::aabb;
using geometry::Aabb;
using geometry::centroid;
using geometry::knn;
using geometry::Mat3;
using geometry::random_rotation;

void UpsParams::validate() const {
  if (!(beta_min >= 0.0 && beta_min <= beta_max && beta_max < 1.0))
    throw std::invalid_argument("UpsParams: need 0 <= beta_min <= beta_max < 1, got [" +
                                std::to_string(beta_min) + ", " + std::to_string(beta_max) + "]");
  if (aug_ratio < 0.0 || aug_ratio > 1.0)
    throw std::invalid_argument("UpsParams: aug_ratio " + std::to_string(aug_ratio) + " outside [0, 1]");
  if (rotation_max_angle < 0.0 || rotation_max_angle > geometry::kPi)
    throw std::invalid_argument("UpsParams: rotation_max_angle outside [0, pi]");
  if (translation_range_fraction <= 0.0)
    throw std::invalid_argument("UpsParams: translation_range_fraction must be positive");
  if (!(scale_min > 0.0 && scale_min <= scale_max))
    throw std::invalid_argument("UpsParams: need 0 < scale_min <= scale_max");
  if (noise_sigma_fraction < 0.0)
    throw std::invalid_argument("UpsParams: noise_sigma_fraction must be non-negative");
}

namespace {

// Draws beta and resolves the selected subset (ascending row order).
// Returns an empty vector when k rounds to zero.
std::vector<int> draw_selection(const PointCloud& cloud, const UpsParams& params, Rng& rng) {
  const double beta = rng.uniform(params.beta_min, params.beta_max);
  const int k = static_cast<int>(std::lround(beta * cloud.size()));
  if (k == 0) return {};
  const int seed = rng.uniform_int(cloud.size());
  std::vector<int> selected = knn(seed, cloud, k);
  std::sort(selected.begin(), selected.end());
  return selected;
}

// Uniform in the given box, componentwise.
Vec3 uniform_in_box(const Aabb& box, Rng& rng) {
  return {rng.uniform(box.min.x, box.max.x), rng.uniform(box.min.y, box.max.y),
          rng.uniform(box.min.z, box.max.z)};
}

std::vector<Vec3> gather(const std::vector<Vec3>& coords, const std::vector<int>& idx) {
  std::vector<Vec3> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(coords[static_cast<std::size_t>(i)]);
  return out;
}

AugmentedCloud unchanged(const PointCloud& cloud) {
  AugmentedCloud out;
  out.coords = cloud.coords;
  out.task_labels = *cloud.labels;
  out.ref_scores.assign(cloud.coords.size(), 0.0);
  return out;
}

// Writes the transformed subset back into its row slots and marks it.
AugmentedCloud splice(const PointCloud& cloud, const std::vector<int>& selected,
                      const std::vector<Vec3>& transformed, int unknown_label) {
  AugmentedCloud out = unchanged(cloud);
  for (std::size_t t = 0; t < selected.size(); ++t) {
    const auto row = static_cast<std::size_t>(selected[t]);
    out.coords[row] = transformed[t];
    out.task_labels[row] = unknown_label;
    out.ref_scores[row] = 1.0;
  }
  out.selected = selected;
  return out;
}

void require_labeled(const PointCloud& cloud, const char* who) {
  cloud.validate();
  if (!cloud.has_labels()) throw std::invalid_argument(std::string(who) + ": cloud has no labels");
}

}  // namespace

AugmentedCloud ups_segmentation(const PointCloud& cloud, const UpsParams& params, int unknown_label,
                                Rng& rng, const RigidTransform* forced_transform) {
  require_labeled(cloud, "ups_segmentation");
  params.validate();

  const std::vector<int> selected = draw_selection(cloud, params, rng);
  if (selected.empty()) return unchanged(cloud);

  const std::vector<Vec3> subset = gather(cloud.coords, selected);
  RigidTransform xf;
  if (forced_transform) {
    xf = *forced_transform;
  } else {
    xf.rotation = random_rotation(rng, params.rotation_max_angle);
    // The translation drops the rotated subset's centroid uniformly inside
    // the cloud's bounding box; individual points may protrude.
    const Vec3 target = uniform_in_box(aabb(cloud), rng);
    Vec3 rotated_centroid{};
    for (const Vec3& p : subset) rotated_centroid += xf.rotation * p;
    rotated_centroid = rotated_centroid / static_cast<double>(subset.size());
    xf.translation = target - rotated_centroid;
  }
  return splice(cloud, selected, apply_rigid(subset, xf), unknown_label);
}

AugmentedCloud uss_classification(const PointCloud& sample_a, const PointCloud& sample_b,
                                  const UpsParams& params, int unknown_label, Rng& rng) {
  require_labeled(sample_a, "uss_classification");
  require_labeled(sample_b, "uss_classification");
  params.validate();
  if (sample_a.size() != sample_b.size())
    throw std::invalid_argument("uss_classification: sample sizes differ (" +
                                std::to_string(sample_a.size()) + " vs " + std::to_string(sample_b.size()) + ")");
  if (sample_a.labels->front() == sample_b.labels->front())
    throw std::invalid_argument("uss_classification: samples carry the same class label " +
                                std::to_string(sample_a.labels->front()));

  const int n = sample_a.size();
  const double beta = rng.uniform(params.beta_min, params.beta_max);
  const int k = static_cast<int>(std::lround(beta * n));
  if (k == 0)
    throw std::invalid_argument(
        "uss_classification: selection rounds to zero points; sample mixing "
        "needs beta_min > 0");

  // Donor subset from sample_b.
  std::vector<int> donors;
  if (params.donor_selection == DonorSelection::seed_knn) {
    donors = knn(rng.uniform_int(n), sample_b, k);
  } else {
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i)
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(i + rng.uniform_int(n - i))]);
    donors.assign(pool.begin(), pool.begin() + k);
  }
  std::sort(donors.begin(), donors.end());
  const std::vector<Vec3> subset = gather(sample_b.coords, donors);

  RigidTransform xf;
  xf.rotation = random_rotation(rng, params.rotation_max_angle);
  const Vec3 target = uniform_in_box(aabb(sample_a), rng);
  Vec3 rotated_centroid{};
  for (const Vec3& p : subset) rotated_centroid += xf.rotation * p;
  rotated_centroid = rotated_centroid / static_cast<double>(subset.size());
  xf.translation = target - rotated_centroid;
  const std::vector<Vec3> transformed = apply_rigid(subset, xf);

  // Evict k uniformly chosen host rows; the transformed donors land in those
  // slots so the sample size stays N.
  std::vector<int> slots(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) slots[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i)
    std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(i + rng.uniform_int(n - i))]);
  slots.resize(static_cast<std::size_t>(k));
  std::sort(slots.begin(), slots.end());

  AugmentedCloud out;
  out.coords = sample_a.coords;
  out.task_labels.assign(static_cast<std::size_t>(n), unknown_label);  // sample-level unknown
  out.ref_scores.assign(static_cast<std::size_t>(n), 0.0);
  for (int t = 0; t < k; ++t) {
    const auto row = static_cast<std::size_t>(slots[static_cast<std::size_t>(t)]);
    out.coords[row] = transformed[static_cast<std::size_t>(t)];
    out.ref_scores[row] = 1.0;
  }
  out.selected = slots;
  return out;
}

AugmentedCloud generate_variant(const PointCloud& cloud, const UpsParams& params, int unknown_label,
                                Rng& rng) {
  require_labeled(cloud, "generate_variant");
  params.validate();
  if (params.generator == Generator::cut_and_mix || params.generator == Generator::none)
    throw std::invalid_argument("generate_variant: params.generator must be an ablation variant");

  const std::vector<int> selected = draw_selection(cloud, params, rng);
  if (selected.empty()) return unchanged(cloud);

  const std::vector<Vec3> subset = gather(cloud.coords, selected);
  std::vector<Vec3> transformed;
  switch (params.generator) {
    case Generator::rotation_only: {
      RigidTransform xf;
      xf.rotation = random_rotation(rng, params.rotation_max_angle);
      transformed = apply_rigid(subset, xf);
      break;
    }
    case Generator::translation_only: {
      const Aabb box = aabb(cloud);
      const Vec3 half = box.extent() * (0.5 * params.translation_range_fraction);
      const Vec3 c0 = centroid(subset);
      const Aabb target_box{c0 - half, c0 + half};
      const Vec3 shift = uniform_in_box(target_box, rng) - c0;
      RigidTransform xf;
      xf.translation = shift;
      transformed = apply_rigid(subset, xf);
      break;
    }
    case Generator::scaling: {
      const double s = rng.uniform(params.scale_min, params.scale_max);
      const Vec3 c0 = centroid(subset);
      transformed.reserve(subset.size());
      // p*s + c0*(1-s) rather than c0 + (p-c0)*s: scale factor exactly 1
      // must leave coordinates bit-identical.
      for (const Vec3& p : subset) transformed.push_back(p * s + c0 * (1.0 - s));
      break;
    }
    case Generator::gaussian_noise: {
      const double sigma = params.noise_sigma_fraction * aabb(cloud).diagonal();
      transformed.reserve(subset.size());
      for (const Vec3& p : subset)
        transformed.push_back({p.x + rng.normal(0.0, sigma), p.y + rng.normal(0.0, sigma),
                               p.z + rng.normal(0.0, sigma)});
      break;
    }
    default:
      throw std::invalid_argument("generate_variant: unhandled generator");
  }
  return splice(cloud, selected, transformed, unknown_label);
}

}  // namespace pointcam::ups
