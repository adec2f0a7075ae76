#pragma once

#include <string>
#include <vector>

#include "pointcam/metrics.hpp"

namespace pointcam::pipeline {

/// Standalone SVG overlaying the known and unknown score distributions as
/// per-class normalized histograms. Deterministic output for a given dump.
std::string score_histogram_svg(const std::vector<metrics::ScoreRecord>& dump,
                                int bins = 40);

void write_score_histogram(const std::string& path,
                           const std::vector<metrics::ScoreRecord>& dump,
                           int bins = 40);

}  // namespace pointcam::pipeline
