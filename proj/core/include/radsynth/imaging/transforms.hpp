#pragma once

#include "radsynth/imaging/gray_image.hpp"

namespace radsynth::imaging {

/// Bilinear resampling with half-pixel-center alignment and round-half-up.
/// Throws std::invalid_argument for empty input or a zero target dimension.
GrayImage resample(const GrayImage& img, int target_w, int target_h);

/// p -> 255 - p; toggles meta.inverted (unset counts as false).
GrayImage invert(const GrayImage& img);

/// Bone-dark heuristic. Compares the mean of the central 50% x 50% window
/// against the mean of the 10%-wide border frame; a negative scan has a
/// brighter frame than center. Ties are not negative.
bool detect_negative(const GrayImage& img);

struct RegionMeans {
    double center = 0.0;
    double border = 0.0;
};
RegionMeans region_means(const GrayImage& img);

/// Horizontal mirror (column order reversed per row).
GrayImage mirror(const GrayImage& img);

struct OrientationResult {
    GrayImage image;
    bool needs_triage = false;
};

/// Right-facing images are mirrored to left-facing. Unknown facing is passed
/// through unchanged and flagged for human triage.
OrientationResult standardize_orientation(const GrayImage& img, Facing facing);

}  // namespace radsynth::imaging
