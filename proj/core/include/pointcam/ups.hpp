#pragma once

#include <vector>

#include "pointcam/geometry.hpp"
#include "pointcam/rng.hpp"

namespace pointcam::ups {

using geometry::PointCloud;
using geometry::RigidTransform;
using geometry::Vec3;

/// How the selected neighborhood is altered into simulated unknown points.
enum class Generator {
  cut_and_mix,       // random rotation + translation into the cloud's box
  rotation_only,     // bounded random rotation about the origin, no shift
  translation_only,  // shift into a fraction of the box around the subset
  scaling,           // isotropic scaling about the subset centroid
  gaussian_noise,    // additive noise, sigma relative to the box diagonal
  none,              // augmentation disabled (plain closed-set training)
};

/// Donor subset choice for sample-level mixing.
enum class DonorSelection { seed_knn, uniform };

struct UpsParams {
  double beta_min = 0.0;
  double beta_max = 0.6;
  Generator generator = Generator::cut_and_mix;
  double aug_ratio = 0.1;  // probability a classification sample is mixed

  // Generator knobs. rotation_max_angle doubles as the cut-and-mix rotation
  // bound; pi means uniform over SO(3).
  double rotation_max_angle = geometry::kPi;
  double translation_range_fraction = 1.0;
  double scale_min = 0.5;
  double scale_max = 1.5;
  double noise_sigma_fraction = 0.05;
  DonorSelection donor_selection = DonorSelection::seed_knn;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Result of a simulator pass. Same point count as the input; rows outside
/// `selected` are bit-identical to the input rows.
struct AugmentedCloud {
  std::vector<Vec3> coords;
  std::vector<int> task_labels;
  std::vector<double> ref_scores;  // 1.0 on simulated points, else 0.0
  std::vector<int> selected;       // ascending row indices of altered points
};

/// Segmentation-task simulator: draws beta ~ U[beta_min, beta_max], cuts the
/// k = round(beta*N) nearest neighbors of a random seed, rigid-transforms
/// them so the subset centroid lands uniformly inside the cloud's bounding
/// box, and overwrites the selected rows in place. Selected rows take
/// task label `unknown_label` and reference score 1. k = 0 returns the
/// input unchanged with an empty selection.
///
/// `forced_transform` is a test hook that bypasses the random transform.
AugmentedCloud ups_segmentation(const PointCloud& cloud, const UpsParams& params, int unknown_label,
                                Rng& rng, const RigidTransform* forced_transform = nullptr);

/// Classification-task simulator: cuts k = round(beta*N) points from
/// `sample_b` (seed + kNN by default), rigid-transforms them into the box of
/// `sample_a`, and writes them over k uniformly chosen rows of `sample_a`.
/// The result is a sample-level unknown: every task label is
/// `unknown_label`; ref_scores mark the inserted rows. Both samples must
/// have equal size and different (known) class labels. A selection that
/// rounds to zero points is an error: sample-level mixing needs
/// beta_min > 0 (a zero-point mix would mislabel an unaltered sample).
AugmentedCloud uss_classification(const PointCloud& sample_a, const PointCloud& sample_b,
                                  const UpsParams& params, int unknown_label, Rng& rng);

/// Ablation generators: same seed + kNN selection as ups_segmentation but
/// with a restricted transform (rotation only, translation only, scaling
/// about the subset centroid, or additive Gaussian noise).
AugmentedCloud generate_variant(const PointCloud& cloud, const UpsParams& params, int unknown_label,
                                Rng& rng);

}  // namespace pointcam::ups
