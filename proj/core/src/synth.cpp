#include "pointcam/synth.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pointcam::data {

namespace {

using geometry::Mat3;
using geometry::Vec3;

constexpr double kTau = 2.0 * geometry::kPi;

Vec3 sphere_point(Rng& rng) {
  // Normal deviates give a uniform direction after normalization.
  while (true) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Vec3 cube_point(Rng& rng) {
  const int face = static_cast<int>(rng.uniform_int(6));
  const double u = rng.uniform(-0.5, 0.5);
  const double v = rng.uniform(-0.5, 0.5);
  const double s = face % 2 == 0 ? 0.5 : -0.5;
  switch (face / 2) {
    case 0: return {s, u, v};
    case 1: return {u, s, v};
    default: return {u, v, s};
  }
}

Vec3 cylinder_point(Rng& rng) {
  const double r = 0.5;
  const double h = 1.0;
  const double side = kTau * r * h;        // lateral area
  const double cap = geometry::kPi * r * r;  // each cap
  const double u = rng.uniform() * (side + 2.0 * cap);
  const double phi = rng.uniform() * kTau;
  if (u < side) {
    return {r * std::cos(phi), r * std::sin(phi), rng.uniform(-0.5, 0.5)};
  }
  const double rr = r * std::sqrt(rng.uniform());  // uniform over the disk
  const double z = u < side + cap ? 0.5 : -0.5;
  return {rr * std::cos(phi), rr * std::sin(phi), z};
}

Vec3 torus_point(Rng& rng) {
  const double major = 0.5;
  const double minor = 0.2;
  // Rejection on the tube angle corrects for the smaller outer-side area
  // near the hole (surface element scales with major + minor*cos(v)).
  while (true) {
    const double u = rng.uniform() * kTau;
    const double v = rng.uniform() * kTau;
    const double accept = rng.uniform();
    const double radius = major + minor * std::cos(v);
    if (accept * (major + minor) <= radius) {
      return {radius * std::cos(u), radius * std::sin(u), minor * std::sin(v)};
    }
  }
}

Vec3 cone_point(Rng& rng) {
  const double r = 0.5;
  const double h = 1.0;
  const double slant = std::sqrt(r * r + h * h);
  const double side = geometry::kPi * r * slant;
  const double base = geometry::kPi * r * r;
  const double u = rng.uniform() * (side + base);
  const double phi = rng.uniform() * kTau;
  if (u < side) {
    const double t = std::sqrt(rng.uniform());  // area grows with distance from apex
    return {t * r * std::cos(phi), t * r * std::sin(phi), 0.5 - t * h};
  }
  const double rr = r * std::sqrt(rng.uniform());
  return {rr * std::cos(phi), rr * std::sin(phi), -0.5};
}

std::string sample_id(const std::string& cls, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", index);
  return cls + "_" + buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (classes.empty()) throw std::invalid_argument("no shape classes listed");
  for (const std::string& c : classes) {
    if (c != "sphere" && c != "cube" && c != "cylinder" && c != "torus" &&
        c != "cone") {
      throw std::invalid_argument("unknown shape '" + c + "'");
    }
  }
  if (points_per_sample < 8) {
    throw std::invalid_argument("points_per_sample must be at least 8, got " +
                                std::to_string(points_per_sample));
  }
  if (samples_per_class < 1) {
    throw std::invalid_argument("samples_per_class must be positive");
  }
  if (train_fraction < 0.0 || train_fraction > 1.0) {
    throw std::invalid_argument("train_fraction must lie in [0,1]");
  }
  if (scale_jitter < 0.0 || scale_jitter >= 1.0) {
    throw std::invalid_argument("scale_jitter must lie in [0,1)");
  }
}

Vec3 sample_shape_point(const std::string& shape, Rng& rng) {
  if (shape == "sphere") return sphere_point(rng);
  if (shape == "cube") return cube_point(rng);
  if (shape == "cylinder") return cylinder_point(rng);
  if (shape == "torus") return torus_point(rng);
  if (shape == "cone") return cone_point(rng);
  throw std::invalid_argument("unknown shape '" + shape + "'");
}

Dataset synth_shapes(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  Dataset dataset;
  dataset.name = "synthetic";
  dataset.task = "classification";
  dataset.class_names = spec.classes;
  const int train_count =
      static_cast<int>(spec.train_fraction * spec.samples_per_class);
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    for (int s = 0; s < spec.samples_per_class; ++s) {
      Sample sample;
      sample.class_name = spec.classes[c];
      sample.split = s < train_count ? "train" : "test";
      sample.cloud.id = sample_id(spec.classes[c], s);
      sample.cloud.coords.reserve(spec.points_per_sample);
      for (int p = 0; p < spec.points_per_sample; ++p) {
        sample.cloud.coords.push_back(sample_shape_point(spec.classes[c], rng));
      }
      const double scale = rng.uniform(1.0 - spec.scale_jitter, 1.0 + spec.scale_jitter);
      const Mat3 rot = spec.rotation_jitter ? geometry::random_rotation(rng, geometry::kPi)
                                            : Mat3::identity();
      for (Vec3& p : sample.cloud.coords) p = rot * (p * scale);
      sample.cloud.labels.emplace(spec.points_per_sample, static_cast<int>(c));
      dataset.samples.push_back(std::move(sample));
    }
  }
  return dataset;
}

Dataset synth_scenes(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  Dataset dataset;
  dataset.name = "synthetic_scenes";
  dataset.task = "segmentation";
  dataset.class_names = spec.classes;
  const int train_count =
      static_cast<int>(spec.train_fraction * spec.samples_per_class);
  const int shapes_per_scene = 3;
  for (int s = 0; s < spec.samples_per_class; ++s) {
    Sample sample;
    sample.split = s < train_count ? "train" : "test";
    sample.cloud.id = sample_id("scene", s);
    sample.cloud.labels.emplace();
    for (int part = 0; part < shapes_per_scene; ++part) {
      const int cls =
          (s * shapes_per_scene + part) % static_cast<int>(spec.classes.size());
      const int count = spec.points_per_sample / shapes_per_scene +
                        (part == 0 ? spec.points_per_sample % shapes_per_scene : 0);
      const Vec3 center{1.5 * (part - 1) + rng.uniform(-0.2, 0.2),
                        rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};
      for (int p = 0; p < count; ++p) {
        sample.cloud.coords.push_back(
            sample_shape_point(spec.classes[cls], rng) + center);
        sample.cloud.labels->push_back(cls);
      }
    }
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

}  // namespace pointcam::data
