#pragma once

#include <string>
#include <vector>

#include "pointcam/dataset.hpp"
#include "pointcam/geometry.hpp"
#include "pointcam/rng.hpp"

namespace pointcam::data {

/// Synthetic analytic-surface dataset: desk-scale stand-in for real scan
/// corpora. Shape names: sphere, cube, cylinder, torus, cone.
struct SynthSpec {
  std::vector<std::string> classes = {"sphere", "cube", "cylinder", "torus"};
  int points_per_sample = 512;
  int samples_per_class = 50;
  // Leading fraction of each class's samples goes to the train split (the
  // samples are i.i.d., so slicing by index is as random as drawing lots).
  double train_fraction = 0.8;
  double scale_jitter = 0.2;     // per-sample scale in [1 - j, 1 + j]
  bool rotation_jitter = true;   // uniform random rotation per sample

  void validate() const;
};

/// One analytic surface point, centered shapes of diameter about 1:
/// sphere radius 1, cube half-extent 0.5, cylinder r 0.5 h 1 with caps,
/// torus radii 0.5/0.2, cone r 0.5 h 1 with base disk.
geometry::Vec3 sample_shape_point(const std::string& shape, Rng& rng);

/// samples_per_class clouds per listed class, each jittered by one random
/// scale and rotation. Draw order is fixed (classes in list order, then
/// samples, then points, then jitter), so a seed pins every byte.
Dataset synth_shapes(const SynthSpec& spec, Rng& rng);

/// Segmentation variant: every cloud is a row of three shapes (cycled
/// through the class list) with per-point labels.
Dataset synth_scenes(const SynthSpec& spec, Rng& rng);

}  // namespace pointcam::data
