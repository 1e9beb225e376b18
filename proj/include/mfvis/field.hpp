#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "mfvis/error.hpp"

namespace mfvis {

using Index = Eigen::Index;

/// Row-major H x W image plane.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PlaneD = Plane<double>;
using LabelMap = Plane<std::uint8_t>;

/// Position of one entry of a field.
struct FieldIndex {
    Index instance = 0;
    Index frame = 0;
    Index y = 0;
    Index x = 0;
};

/// Dense instance x frame x height x width field, stored flat in
/// instance-major, frame-major, row-major order (the on-disk order).
template <typename Scalar>
class BasicField {
public:
    using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    using PlaneMap = Eigen::Map<Plane<Scalar>>;
    using ConstPlaneMap = Eigen::Map<const Plane<Scalar>>;

    BasicField() = default;

    BasicField(Index instances, Index frames, Index height, Index width, Scalar fill = Scalar(0))
        : instances_(instances), frames_(frames), height_(height), width_(width),
          values_(Values::Constant(instances * frames * height * width, fill)) {
        if (instances < 0 || frames < 0 || height < 0 || width < 0) {
            throw ValidationError("field dimensions must be non-negative");
        }
    }

    static BasicField zeros_like(const BasicField& other) {
        return BasicField(other.instances_, other.frames_, other.height_, other.width_);
    }

    Index instances() const { return instances_; }
    Index frames() const { return frames_; }
    Index height() const { return height_; }
    Index width() const { return width_; }
    Index plane_size() const { return height_ * width_; }
    Index size() const { return values_.size(); }

    bool same_shape(const BasicField& other) const {
        return instances_ == other.instances_ && frames_ == other.frames_ &&
               height_ == other.height_ && width_ == other.width_;
    }

    Index offset(Index instance, Index frame) const {
        return (instance * frames_ + frame) * plane_size();
    }
    Index offset(const FieldIndex& e) const {
        return offset(e.instance, e.frame) + e.y * width_ + e.x;
    }

    PlaneMap plane(Index instance, Index frame) {
        return PlaneMap(values_.data() + offset(instance, frame), height_, width_);
    }
    ConstPlaneMap plane(Index instance, Index frame) const {
        return ConstPlaneMap(values_.data() + offset(instance, frame), height_, width_);
    }

    Scalar& operator()(Index instance, Index frame, Index y, Index x) {
        return values_[offset(instance, frame) + y * width_ + x];
    }
    Scalar operator()(Index instance, Index frame, Index y, Index x) const {
        return values_[offset(instance, frame) + y * width_ + x];
    }
    Scalar& operator[](const FieldIndex& e) { return values_[offset(e)]; }
    Scalar operator[](const FieldIndex& e) const { return values_[offset(e)]; }

    Values& values() { return values_; }
    const Values& values() const { return values_; }

    template <typename Other>
    BasicField<Other> cast() const {
        BasicField<Other> out(instances_, frames_, height_, width_);
        out.values() = values_.template cast<Other>();
        return out;
    }

    bool operator==(const BasicField& other) const {
        return same_shape(other) && (values_ == other.values_).all();
    }

private:
    Index instances_ = 0;
    Index frames_ = 0;
    Index height_ = 0;
    Index width_ = 0;
    Values values_;
};

/// Per-instance, per-frame, per-pixel foreground probabilities in [0,1].
using MaskField = BasicField<double>;

}  // namespace mfvis
