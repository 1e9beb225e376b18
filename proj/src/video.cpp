#include <string>

#include "mfvis/video.hpp"

namespace mfvis {

RgbImage::RgbImage(Index h, Index w, Rgb fill) : height(h), width(w) {
    if (h < 1 || w < 1) {
        throw ValidationError("image dimensions must be positive");
    }
    data.resize(std::size_t(h * w * 3));
    for (Index i = 0; i < h * w; ++i) {
        data[std::size_t(3 * i)] = fill[0];
        data[std::size_t(3 * i + 1)] = fill[1];
        data[std::size_t(3 * i + 2)] = fill[2];
    }
}

Frame::Frame(RgbImage rgb) : rgb_(std::move(rgb)) {
    if (rgb_.height < 1 || rgb_.width < 1) {
        throw ValidationError("frame dimensions must be positive");
    }
    if (rgb_.data.size() != std::size_t(rgb_.height * rgb_.width * 3)) {
        throw DimensionMismatch("rgb buffer size does not match frame dimensions");
    }
    lab_ = rgb_to_lab(rgb_);
}

Plane<std::uint8_t> Tube::gt_mask(Index frame, Index instance) const {
    if (!gt_labels) {
        throw ValidationError("tube has no ground-truth masks");
    }
    const auto label = std::uint8_t(instance + 1);
    return ((*gt_labels)[std::size_t(frame)] == label).cast<std::uint8_t>();
}

void Tube::validate() const {
    if (frames.empty()) {
        throw ValidationError("tube has no frames");
    }
    const Index h = height(), w = width();
    for (const auto& f : frames) {
        if (f.height() != h || f.width() != w) {
            throw DimensionMismatch("tube frames differ in size");
        }
    }
    if (gt_boxes.size() != frames.size()) {
        throw DimensionMismatch("box list length differs from frame count");
    }
    for (std::size_t t = 0; t < gt_boxes.size(); ++t) {
        if (Index(gt_boxes[t].size()) != instance_count()) {
            throw DimensionMismatch("instance count differs between frames");
        }
        for (const auto& b : gt_boxes[t]) {
            if (!(b.x_min < b.x_max && b.y_min < b.y_max) || b.x_min < 0 || b.y_min < 0 ||
                b.x_max > double(w) || b.y_max > double(h)) {
                throw ValidationError("box out of frame bounds or empty in frame " +
                                      std::to_string(t));
            }
        }
    }
    if (gt_labels) {
        if (gt_labels->size() != frames.size()) {
            throw DimensionMismatch("label map count differs from frame count");
        }
        for (const auto& labels : *gt_labels) {
            if (labels.rows() != h || labels.cols() != w) {
                throw DimensionMismatch("label map size differs from frame size");
            }
        }
    }
}

void check_field_matches(const MaskField& field, const Tube& tube) {
    if (field.frames() != tube.frame_count() || field.height() != tube.height() ||
        field.width() != tube.width()) {
        throw DimensionMismatch("mask field shape (T=" + std::to_string(field.frames()) + ", " +
                                std::to_string(field.height()) + "x" +
                                std::to_string(field.width()) + ") does not match tube (T=" +
                                std::to_string(tube.frame_count()) + ", " +
                                std::to_string(tube.height()) + "x" +
                                std::to_string(tube.width()) + ")");
    }
}

}  // namespace mfvis
