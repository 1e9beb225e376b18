#pragma once

// Scalar reference implementations used as test oracles. None of these call
// into the library code path they are compared against.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mfvis/correspondence.hpp"
#include "mfvis/field.hpp"
#include "mfvis/losses.hpp"
#include "mfvis/matching_cost.hpp"
#include "mfvis/synthetic.hpp"
#include "mfvis/video.hpp"

namespace oracle {

using mfvis::Index;

/// sRGB -> Lab via the CIE epsilon/kappa form and the rounded sRGB matrix.
inline std::array<double, 3> lab_reference(int r, int g, int b) {
    auto lin = [](int v) {
        const double c = v / 255.0;
        return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    };
    const double R = lin(r), G = lin(g), B = lin(b);
    const double X = (0.4124 * R + 0.3576 * G + 0.1805 * B) / 0.9505;
    const double Y = (0.2126 * R + 0.7152 * G + 0.0722 * B) / 1.0;
    const double Z = (0.0193 * R + 0.1192 * G + 0.9505 * B) / 1.0890;
    const double eps = 216.0 / 24389.0, kappa = 24389.0 / 27.0;
    auto f = [&](double t) { return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0; };
    const double L = Y > eps ? 116.0 * std::cbrt(Y) - 16.0 : kappa * Y;
    const double a = 500.0 * (f(X) - f(Y));
    const double bb = 200.0 * (f(Y) - f(Z));
    return {L / 100.0, (a + 128.0) / 255.0, (bb + 128.0) / 255.0};
}

inline double consistency(double a, double b, double eps = 1e-6) {
    double q = a * b + (1 - a) * (1 - b);
    if (q < eps) q = eps;
    return -std::log(q);
}

inline double dice(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return 1.0 - (2.0 * ab + 1e-5) / (aa + bb + 1e-5);
}

/// Temporal loss by direct summation over given match sets.
inline double tk_loss(const mfvis::MaskField& m, const std::vector<mfvis::MatchSet>& sets,
                      double eps = 1e-6) {
    double total = 0;
    for (Index i = 0; i < m.instances(); ++i) {
        for (const auto& s : sets) {
            double sum = 0;
            for (Index y = 0; y < m.height(); ++y) {
                for (Index x = 0; x < m.width(); ++x) {
                    for (const auto& match : s.matches(y, x)) {
                        sum += consistency(m(i, s.source(), y, x), m(i, s.target(), match.y, match.x), eps);
                    }
                }
            }
            total += sum / double(m.height() * m.width());
        }
    }
    return total / double(m.instances());
}

inline double projection_loss(const mfvis::MaskField& m, const mfvis::Tube& tube) {
    double total = 0;
    for (Index i = 0; i < m.instances(); ++i) {
        for (Index t = 0; t < m.frames(); ++t) {
            const mfvis::Box& box = tube.gt_boxes[std::size_t(t)][std::size_t(i)];
            std::vector<double> px(std::size_t(m.width()), 0.0), bx(std::size_t(m.width()), 0.0);
            std::vector<double> py(std::size_t(m.height()), 0.0), by(std::size_t(m.height()), 0.0);
            for (Index y = 0; y < m.height(); ++y) {
                for (Index x = 0; x < m.width(); ++x) {
                    px[std::size_t(x)] = std::max(px[std::size_t(x)], m(i, t, y, x));
                    py[std::size_t(y)] = std::max(py[std::size_t(y)], m(i, t, y, x));
                }
            }
            for (Index x = 0; x < m.width(); ++x) bx[std::size_t(x)] = (x >= box.x_min && x < box.x_max) ? 1 : 0;
            for (Index y = 0; y < m.height(); ++y) by[std::size_t(y)] = (y >= box.y_min && y < box.y_max) ? 1 : 0;
            total += dice(px, bx) + dice(py, by);
        }
    }
    return total / double(m.instances());
}

/// All unordered pixel pairs at Chebyshev offset exactly `d` on the 8-neighbor
/// grid with color similarity >= sigma, found by scanning every pair.
inline std::vector<std::pair<Index, Index>> color_edges(const mfvis::Frame& f, double sigma,
                                                        double theta = 0.1, Index d = 2) {
    std::vector<std::pair<Index, Index>> edges;
    const Index n = f.height() * f.width();
    for (Index a = 0; a < n; ++a) {
        for (Index b = a + 1; b < n; ++b) {
            const Index dy = b / f.width() - a / f.width();
            const Index dx = b % f.width() - a % f.width();
            const bool on_grid = (dy == 0 || std::abs(dy) == d) && (dx == 0 || std::abs(dx) == d);
            if (!on_grid || (dy == 0 && dx == 0)) continue;
            double s = 0;
            for (int c = 0; c < 3; ++c) {
                const double diff = f.lab()(a, c) - f.lab()(b, c);
                s += diff * diff;
            }
            if (std::exp(-std::sqrt(s) / theta) >= sigma) edges.emplace_back(a, b);
        }
    }
    return edges;
}

inline double pairwise_loss(const mfvis::MaskField& m, const std::vector<mfvis::EdgeSet>& edges,
                            double eps = 1e-6) {
    double total = 0;
    for (Index i = 0; i < m.instances(); ++i) {
        for (Index t = 0; t < m.frames(); ++t) {
            const auto& set = edges[std::size_t(t)];
            if (set.empty()) continue;
            double sum = 0;
            for (const auto& e : set) {
                sum += consistency(m.values()[m.offset(i, t) + e.a], m.values()[m.offset(i, t) + e.b], eps);
            }
            total += sum / double(set.size()) / double(m.frames());
        }
    }
    return total / double(m.instances());
}

inline double giou(const mfvis::Box& a, const mfvis::Box& b) {
    const double ix0 = std::max(a.x_min, b.x_min), iy0 = std::max(a.y_min, b.y_min);
    const double ix1 = std::min(a.x_max, b.x_max), iy1 = std::min(a.y_max, b.y_max);
    const double inter = (ix1 > ix0 && iy1 > iy0) ? (ix1 - ix0) * (iy1 - iy0) : 0.0;
    const double area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min);
    const double area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min);
    const double uni = area_a + area_b - inter;
    const double cw = std::max(a.x_max, b.x_max) - std::min(a.x_min, b.x_min);
    const double ch = std::max(a.y_max, b.y_max) - std::min(a.y_min, b.y_min);
    return inter / uni - (cw * ch - uni) / (cw * ch);
}

/// Minimum assignment total by enumerating permutations of the larger side.
inline double assignment_bruteforce(const Eigen::MatrixXd& c) {
    const bool wide = c.rows() <= c.cols();
    const Eigen::MatrixXd m = wide ? c : Eigen::MatrixXd(c.transpose());
    std::vector<int> cols(std::size_t(m.cols()));
    std::iota(cols.begin(), cols.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0;
        for (Index r = 0; r < m.rows(); ++r) s += m(r, cols[std::size_t(r)]);
        best = std::min(best, s);
    } while (std::next_permutation(cols.begin(), cols.end()));
    return best;
}

/// Visible label per pixel: scan shapes from the top of the paint order down.
inline mfvis::LabelMap painter_labels(const mfvis::SyntheticSpec& spec, Index t) {
    mfvis::LabelMap labels(spec.height, spec.width);
    for (Index y = 0; y < spec.height; ++y) {
        for (Index x = 0; x < spec.width; ++x) {
            std::uint8_t label = 0;
            const double cx = x + 0.5, cy = y + 0.5;
            if (spec.occluder && cx >= spec.occluder->box.x_min && cx < spec.occluder->box.x_max &&
                cy >= spec.occluder->box.y_min && cy < spec.occluder->box.y_max) {
                label = mfvis::kOccluderLabel;
            } else {
                for (std::size_t i = spec.instances.size(); i-- > 0;) {
                    const auto& s = spec.instances[i];
                    const double ox = s.position.x() + t * s.velocity.x();
                    const double oy = s.position.y() + t * s.velocity.y();
                    bool in = false;
                    if (s.kind == mfvis::ShapeKind::Rectangle) {
                        in = cx >= ox && cx < ox + s.size.x() && cy >= oy && cy < oy + s.size.y();
                    } else if (s.kind == mfvis::ShapeKind::Disk) {
                        in = (cx - ox) * (cx - ox) + (cy - oy) * (cy - oy) <= s.radius * s.radius;
                    }
                    if (in) {
                        label = std::uint8_t(i + 1);
                        break;
                    }
                }
            }
            labels(y, x) = label;
        }
    }
    return labels;
}

// ---- random generators for property tests ----

inline mfvis::MaskField random_masks(std::mt19937_64& rng, Index n, Index t, Index h, Index w,
                                     double lo = 0.05, double hi = 0.95) {
    std::uniform_real_distribution<double> u(lo, hi);
    mfvis::MaskField m(n, t, h, w);
    for (Index k = 0; k < m.size(); ++k) m.values()(k) = u(rng);
    return m;
}

/// Blocky frames from a small palette, each later frame a shifted, lightly
/// noised copy of the first, so matches exist and exact ties occur.
inline mfvis::Tube random_tube(std::mt19937_64& rng, Index frames, Index h, Index w,
                               Index instances = 1, bool noise = true) {
    std::uniform_int_distribution<int> color(0, 255), block(2, 5), shift(-2, 2), coin(0, 3);
    std::vector<mfvis::Rgb> palette(4);
    for (auto& c : palette) c = {std::uint8_t(color(rng)), std::uint8_t(color(rng)), std::uint8_t(color(rng))};
    const int bs = block(rng);
    std::vector<int> cells(std::size_t((h / bs + 2) * (w / bs + 2)));
    for (auto& c : cells) c = coin(rng);
    const Index cw = w / bs + 2;
    std::normal_distribution<double> jitter(0.0, 2.0);

    mfvis::Tube tube;
    Index sx = 0, sy = 0;
    for (Index t = 0; t < frames; ++t) {
        mfvis::RgbImage img(h, w);
        for (Index y = 0; y < h; ++y) {
            for (Index x = 0; x < w; ++x) {
                const Index yy = std::clamp<Index>(y + sy, 0, h - 1), xx = std::clamp<Index>(x + sx, 0, w - 1);
                mfvis::Rgb c = palette[std::size_t(cells[std::size_t(yy / bs * cw + xx / bs)])];
                if (noise) {
                    for (auto& v : c) v = std::uint8_t(std::clamp(v + std::lround(jitter(rng)), 0l, 255l));
                }
                img.set(y, x, c);
            }
        }
        tube.frames.emplace_back(std::move(img));
        sx += shift(rng);
        sy += shift(rng);
        std::vector<mfvis::Box> boxes;
        for (Index i = 0; i < instances; ++i) {
            std::uniform_int_distribution<Index> px(0, w - 2), py(0, h - 2);
            const Index x0 = px(rng), y0 = py(rng);
            std::uniform_int_distribution<Index> ex(x0 + 1, w), ey(y0 + 1, h);
            boxes.push_back({double(x0), double(y0), double(ex(rng)), double(ey(rng))});
        }
        tube.gt_boxes.push_back(std::move(boxes));
    }
    return tube;
}

/// Entries of `m` whose +-margin perturbation leaves every row and column
/// max-projection argmax unchanged.
inline bool away_from_projection_ties(const mfvis::MaskField& m, const mfvis::FieldIndex& e,
                                      double margin) {
    const auto plane = m.plane(e.instance, e.frame);
    const double v = plane(e.y, e.x);
    for (Index y = 0; y < m.height(); ++y) {
        if (y != e.y && std::abs(plane(y, e.x) - v) <= margin) return false;
    }
    for (Index x = 0; x < m.width(); ++x) {
        if (x != e.x && std::abs(plane(e.y, x) - v) <= margin) return false;
    }
    return true;
}

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
}

}  // namespace oracle
