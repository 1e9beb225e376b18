#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mfvis/synthetic.hpp"

namespace mfvis {

namespace {

bool inside_polygon(const std::vector<Eigen::Vector2d>& vertices, const Eigen::Vector2d& p) {
    bool inside = false;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = vertices[i];
        const auto& b = vertices[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double cross_x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() < cross_x) {
                inside = !inside;
            }
        }
    }
    return inside;
}

std::uint8_t noisy(std::uint8_t value, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, sigma);
    const double v = std::round(double(value) + normal(rng));
    return std::uint8_t(std::clamp(v, 0.0, 255.0));
}

}  // namespace

bool shape_covers(const ShapeSpec& shape, Index t, Index y, Index x) {
    const Eigen::Vector2d origin = shape.position + double(t) * shape.velocity;
    const Eigen::Vector2d center(double(x) + 0.5, double(y) + 0.5);
    switch (shape.kind) {
        case ShapeKind::Rectangle: {
            const Eigen::Vector2d rel = center - origin;
            return rel.x() >= 0 && rel.y() >= 0 && rel.x() < shape.size.x() &&
                   rel.y() < shape.size.y();
        }
        case ShapeKind::Disk:
            return (center - origin).squaredNorm() <= shape.radius * shape.radius;
        case ShapeKind::Polygon:
            return inside_polygon(shape.vertices, center - origin);
    }
    return false;
}

Plane<std::uint8_t> rasterize_shape(const ShapeSpec& shape, Index t, Index height, Index width) {
    Plane<std::uint8_t> mask = Plane<std::uint8_t>::Zero(height, width);
    for (Index y = 0; y < height; ++y) {
        for (Index x = 0; x < width; ++x) {
            mask(y, x) = shape_covers(shape, t, y, x) ? 1 : 0;
        }
    }
    return mask;
}

void validate_spec(const SyntheticSpec& spec) {
    if (spec.height < 1 || spec.width < 1 || spec.frames < 1) {
        throw ValidationError("synthetic spec needs positive height, width and frames");
    }
    if (spec.instances.empty() || spec.instances.size() > 254) {
        throw ValidationError("synthetic spec needs between 1 and 254 instances");
    }
    if (!(spec.noise_sigma >= 0) || !std::isfinite(spec.noise_sigma)) {
        throw ValidationError("noise_sigma must be finite and non-negative");
    }
    const double w = double(spec.width), h = double(spec.height);
    for (std::size_t i = 0; i < spec.instances.size(); ++i) {
        const auto& s = spec.instances[i];
        const std::string name = "instance " + std::to_string(i);
        Eigen::Vector2d lo, hi;
        switch (s.kind) {
            case ShapeKind::Rectangle:
                if (!(s.size.x() > 0 && s.size.y() > 0)) {
                    throw ValidationError(name + ": rectangle size must be positive");
                }
                lo = s.position;
                hi = s.position + s.size;
                break;
            case ShapeKind::Disk:
                if (!(s.radius > 0)) {
                    throw ValidationError(name + ": disk radius must be positive");
                }
                lo = s.position.array() - s.radius;
                hi = s.position.array() + s.radius;
                break;
            case ShapeKind::Polygon:
                if (s.vertices.size() < 3) {
                    throw ValidationError(name + ": polygon needs at least 3 vertices");
                }
                lo = hi = s.position + s.vertices.front();
                for (const auto& v : s.vertices) {
                    lo = lo.cwiseMin(s.position + v);
                    hi = hi.cwiseMax(s.position + v);
                }
                break;
        }
        if (lo.x() < 0 || lo.y() < 0 || hi.x() > w || hi.y() > h) {
            throw ValidationError(name + ": shape does not fit inside the frame at t=0");
        }
    }
    if (spec.occluder) {
        const Box& b = spec.occluder->box;
        if (!(b.x_min < b.x_max && b.y_min < b.y_max)) {
            throw ValidationError("occluder box is empty");
        }
    }
}

Tube generate_synthetic_tube(const SyntheticSpec& spec) {
    validate_spec(spec);
    const Index h = spec.height, w = spec.width;
    std::mt19937_64 rng(spec.seed);
    const double sigma = spec.noise_sigma * 255.0;

    Tube tube;
    tube.spec = spec;
    tube.gt_labels.emplace();
    for (Index t = 0; t < spec.frames; ++t) {
        RgbImage image(h, w, spec.background);
        LabelMap labels = LabelMap::Zero(h, w);
        for (std::size_t i = 0; i < spec.instances.size(); ++i) {
            const auto& shape = spec.instances[i];
            for (Index y = 0; y < h; ++y) {
                for (Index x = 0; x < w; ++x) {
                    if (shape_covers(shape, t, y, x)) {
                        labels(y, x) = std::uint8_t(i + 1);
                        image.set(y, x, shape.color);
                    }
                }
            }
        }
        if (spec.occluder) {
            for (Index y = 0; y < h; ++y) {
                for (Index x = 0; x < w; ++x) {
                    if (spec.occluder->box.contains(double(x) + 0.5, double(y) + 0.5)) {
                        labels(y, x) = kOccluderLabel;
                        image.set(y, x, spec.occluder->color);
                    }
                }
            }
        }
        if (sigma > 0) {
            for (auto& v : image.data) {
                v = noisy(v, sigma, rng);
            }
        }

        std::vector<Box> boxes;
        for (std::size_t i = 0; i < spec.instances.size(); ++i) {
            const auto box = tight_box(labels == std::uint8_t(i + 1));
            if (!box) {
                throw ValidationError("instance " + std::to_string(i) +
                                      " has no visible pixels in frame " + std::to_string(t));
            }
            boxes.push_back(*box);
        }
        tube.frames.emplace_back(std::move(image));
        tube.gt_boxes.push_back(std::move(boxes));
        tube.gt_labels->push_back(std::move(labels));
    }
    return tube;
}

}  // namespace mfvis
