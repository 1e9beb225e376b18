#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mfvis/field.hpp"

namespace mfvis {

using Rgb = std::array<std::uint8_t, 3>;

/// Axis-aligned box in pixel coordinates, half-open: [x_min, x_max) x [y_min, y_max).
struct Box {
    double x_min = 0;
    double y_min = 0;
    double x_max = 0;
    double y_max = 0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    bool contains(double x, double y) const {
        return x >= x_min && x < x_max && y >= y_min && y < y_max;
    }
    bool operator==(const Box&) const = default;
};

/// Tight half-open box of the nonzero pixels of `mask`, or nullopt when empty.
template <typename Derived>
std::optional<Box> tight_box(const Eigen::ArrayBase<Derived>& mask) {
    Index x0 = mask.cols(), y0 = mask.rows(), x1 = -1, y1 = -1;
    for (Index y = 0; y < mask.rows(); ++y) {
        for (Index x = 0; x < mask.cols(); ++x) {
            if (mask(y, x) != 0) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
        }
    }
    if (x1 < 0) {
        return std::nullopt;
    }
    return Box{double(x0), double(y0), double(x1 + 1), double(y1 + 1)};
}

struct RgbImage {
    Index height = 0;
    Index width = 0;
    std::vector<std::uint8_t> data;  // row-major, interleaved RGB

    RgbImage() = default;
    RgbImage(Index h, Index w, Rgb fill = {0, 0, 0});

    Rgb at(Index y, Index x) const {
        const auto* p = &data[std::size_t((y * width + x) * 3)];
        return {p[0], p[1], p[2]};
    }
    void set(Index y, Index x, Rgb c) {
        auto* p = &data[std::size_t((y * width + x) * 3)];
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }
    bool operator==(const RgbImage&) const = default;
};

/// One row per pixel (row-major pixel order), columns L, a, b normalized to [0,1].
using LabPixels = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// sRGB bytes to CIE Lab (D65), normalized as (L/100, (a+128)/255, (b+128)/255).
Eigen::Vector3d srgb_to_lab(const Rgb& rgb);

/// Unnormalized CIE Lab: L in [0,100], a and b in roughly [-128,127].
Eigen::Vector3d srgb_to_lab_raw(const Rgb& rgb);

LabPixels rgb_to_lab(const RgbImage& image);

/// A video frame: the source sRGB bytes plus their normalized Lab values.
class Frame {
public:
    Frame() = default;
    explicit Frame(RgbImage rgb);

    Index height() const { return rgb_.height; }
    Index width() const { return rgb_.width; }
    const RgbImage& rgb() const { return rgb_; }
    const LabPixels& lab() const { return lab_; }
    double lab(Index y, Index x, int channel) const { return lab_(y * width() + x, channel); }

private:
    RgbImage rgb_;
    LabPixels lab_;
};

enum class ShapeKind { Rectangle, Disk, Polygon };

/// One synthetic instance. `position` is the rectangle's top-left corner, the
/// disk's center, or the polygon's origin (vertices are relative to it).
struct ShapeSpec {
    ShapeKind kind = ShapeKind::Rectangle;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    Eigen::Vector2d size = Eigen::Vector2d::Zero();
    double radius = 0;
    std::vector<Eigen::Vector2d> vertices;
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();  // pixels per frame
    Rgb color = {255, 255, 255};

    bool operator==(const ShapeSpec&) const = default;
};

struct OccluderSpec {
    Box box;
    Rgb color = {0, 0, 0};

    bool operator==(const OccluderSpec&) const = default;
};

struct SyntheticSpec {
    Index height = 64;
    Index width = 64;
    Index frames = 5;
    Rgb background = {40, 40, 40};
    std::vector<ShapeSpec> instances;
    double noise_sigma = 0;  // normalized color units
    std::optional<OccluderSpec> occluder;
    std::uint64_t seed = 0;

    bool operator==(const SyntheticSpec&) const = default;
};

/// Label value of pixels covered by the static occluder.
inline constexpr std::uint8_t kOccluderLabel = 255;

/// T frames with per-frame boxes per instance and, for synthetic data, the
/// visible instance label map of each frame (0 background, i+1 instance i).
struct Tube {
    std::vector<Frame> frames;
    std::vector<std::vector<Box>> gt_boxes;  // [frame][instance]
    std::optional<std::vector<LabelMap>> gt_labels;
    std::optional<SyntheticSpec> spec;

    Index frame_count() const { return Index(frames.size()); }
    Index height() const { return frames.empty() ? 0 : frames.front().height(); }
    Index width() const { return frames.empty() ? 0 : frames.front().width(); }
    Index instance_count() const { return gt_boxes.empty() ? 0 : Index(gt_boxes.front().size()); }
    bool has_masks() const { return gt_labels.has_value(); }

    /// Binary visible mask of `instance` in `frame`; requires gt_labels.
    Plane<std::uint8_t> gt_mask(Index frame, Index instance) const;

    /// Throws ValidationError if shapes or boxes are inconsistent.
    void validate() const;
};

/// Throws DimensionMismatch unless `field` has the tube's frame count and size.
void check_field_matches(const MaskField& field, const Tube& tube);

}  // namespace mfvis
