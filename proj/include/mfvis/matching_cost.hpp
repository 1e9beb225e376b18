#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mfvis/field.hpp"
#include "mfvis/video.hpp"

namespace mfvis {

/// Per-frame filled-rectangle masks of one instance sequence.
class BoxMaskSequence {
public:
    BoxMaskSequence(Index height, Index width, std::vector<std::optional<Box>> boxes);

    /// GT boxes of one instance, one per frame.
    static BoxMaskSequence from_boxes(Index height, Index width, std::span<const Box> boxes);

    Index frames() const { return Index(boxes_.size()); }
    Index height() const { return height_; }
    Index width() const { return width_; }
    const std::optional<Box>& box(Index t) const { return boxes_[std::size_t(t)]; }
    const Plane<std::uint8_t>& mask(Index t) const { return masks_[std::size_t(t)]; }
    std::uint8_t at(Index t, Index y, Index x) const { return masks_[std::size_t(t)](y, x); }

private:
    Index height_;
    Index width_;
    std::vector<std::optional<Box>> boxes_;
    std::vector<Plane<std::uint8_t>> masks_;
};

/// Binarizes each frame at `threshold` (m >= threshold is foreground) and
/// fills the tight box of the foreground; empty foreground gives an empty frame.
BoxMaskSequence mask_to_boxmask(std::span<const PlaneD> frames, double threshold = 0.5);

/// Frames of one instance of a mask field.
BoxMaskSequence mask_to_boxmask(const MaskField& masks, Index instance, double threshold = 0.5);

enum class SampleMode {
    Uniform,     // n_points uniform pixels per frame
    Exhaustive,  // every pixel exactly once
    InBox,       // uniform over the union of both sequences' boxes
};

struct PixelCoord {
    Index y = 0;
    Index x = 0;
    bool operator==(const PixelCoord&) const = default;
};

/// Per-frame sample coordinates shared by both sequences. Deterministic in `seed`.
std::vector<std::vector<PixelCoord>> sample_points(const BoxMaskSequence& a,
                                                   const BoxMaskSequence& b, Index n_points,
                                                   std::uint64_t seed,
                                                   SampleMode mode = SampleMode::Uniform);

/// Dice loss over the concatenated samples of all frames.
double st_boxmask_cost(const BoxMaskSequence& pred, const BoxMaskSequence& gt, Index n_points,
                       std::uint64_t seed, SampleMode mode = SampleMode::Uniform);

/// Generalized IoU. Zero-area boxes are points; an empty union counts as IoU 1
/// for identical boxes and 0 otherwise, and an empty enclosure adds no penalty.
double generalized_iou(const Box& a, const Box& b);

/// Mean over frames of the L1 distance between coordinates normalized by the
/// frame size, plus 1 - gIoU.
double framewise_cost(std::span<const Box> pred, std::span<const Box> gt, Index height,
                      Index width);

using CostMatrix = Eigen::MatrixXd;

/// Minimum-cost one-to-one assignment. Entry r holds the column assigned to
/// row r, or -1 when rows outnumber columns and r is left over.
std::vector<int> hungarian_assign(const CostMatrix& costs);

double assignment_cost(const CostMatrix& costs, std::span<const int> assignment);

}  // namespace mfvis
