#pragma once

#include <cstdint>
#include <vector>

#include "radsynth/imaging/gray_image.hpp"

namespace radsynth::imaging {

/// Procedural lateral-spine phantoms: a vertical stack of 4-7 bright rounded
/// rectangles on a dark background, with a dim anterior soft-tissue band on
/// the left. Position, spacing, tilt and contrast are jittered per image.
/// Output is a pure function of (n, size, seed).
///
/// Requires n >= 1 and size >= 8.
std::vector<GrayImage> make_phantom_set(int n, int size, std::uint64_t seed);

}  // namespace radsynth::imaging
