#pragma once

#include "mfvis/video.hpp"

namespace mfvis {

/// Whether `shape`, translated to frame `t`, covers the pixel center (x+0.5, y+0.5).
bool shape_covers(const ShapeSpec& shape, Index t, Index y, Index x);

/// Binary rasterization of one shape at frame `t`, ignoring occlusion.
Plane<std::uint8_t> rasterize_shape(const ShapeSpec& shape, Index t, Index height, Index width);

/// Throws ValidationError for malformed specs or shapes outside the frame at t = 0.
void validate_spec(const SyntheticSpec& spec);

/// Renders a tube of translating shapes. Instances are painted in order, later
/// ones on top, and the occluder over everything. Noise is Gaussian per channel
/// with standard deviation noise_sigma * 255 sRGB levels. Throws
/// ValidationError if an instance has no visible pixel in some frame.
Tube generate_synthetic_tube(const SyntheticSpec& spec);

}  // namespace mfvis
