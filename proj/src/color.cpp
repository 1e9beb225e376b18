#include <cmath>

#include "mfvis/video.hpp"

namespace mfvis {

namespace {

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

Eigen::Vector3d srgb_to_lab_raw(const Rgb& rgb) {
    // sRGB primaries, D65 white
    static const Eigen::Matrix3d to_xyz = (Eigen::Matrix3d() << 0.4124564, 0.3575761, 0.1804375,
                                           0.2126729, 0.7151522, 0.0721750,
                                           0.0193339, 0.1191920, 0.9503041)
                                              .finished();
    static const Eigen::Vector3d white(0.95047, 1.0, 1.08883);

    const Eigen::Vector3d linear(srgb_to_linear(rgb[0] / 255.0), srgb_to_linear(rgb[1] / 255.0),
                                 srgb_to_linear(rgb[2] / 255.0));
    const Eigen::Vector3d xyz = (to_xyz * linear).cwiseQuotient(white);
    const double fx = lab_f(xyz.x());
    const double fy = lab_f(xyz.y());
    const double fz = lab_f(xyz.z());
    return {116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)};
}

Eigen::Vector3d srgb_to_lab(const Rgb& rgb) {
    const Eigen::Vector3d lab = srgb_to_lab_raw(rgb);
    const Eigen::Vector3d normalized(lab.x() / 100.0, (lab.y() + 128.0) / 255.0,
                                     (lab.z() + 128.0) / 255.0);
    return normalized.cwiseMax(0.0).cwiseMin(1.0);
}

LabPixels rgb_to_lab(const RgbImage& image) {
    LabPixels lab(image.height * image.width, 3);
    for (Index y = 0; y < image.height; ++y) {
        for (Index x = 0; x < image.width; ++x) {
            lab.row(y * image.width + x) = srgb_to_lab(image.at(y, x)).transpose();
        }
    }
    return lab;
}

}  // namespace mfvis
