#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mfvis/losses.hpp"
#include "mfvis/matching_cost.hpp"

namespace mfvis {

BoxMaskSequence::BoxMaskSequence(Index height, Index width, std::vector<std::optional<Box>> boxes)
    : height_(height), width_(width), boxes_(std::move(boxes)) {
    for (const auto& box : boxes_) {
        Plane<std::uint8_t> mask = Plane<std::uint8_t>::Zero(height, width);
        if (box) {
            for (Index y = 0; y < height; ++y) {
                for (Index x = 0; x < width; ++x) {
                    mask(y, x) = box->contains(double(x) + 0.5, double(y) + 0.5) ? 1 : 0;
                }
            }
        }
        masks_.push_back(std::move(mask));
    }
}

BoxMaskSequence BoxMaskSequence::from_boxes(Index height, Index width, std::span<const Box> boxes) {
    return BoxMaskSequence(height, width, std::vector<std::optional<Box>>(boxes.begin(), boxes.end()));
}

BoxMaskSequence mask_to_boxmask(std::span<const PlaneD> frames, double threshold) {
    if (frames.empty()) {
        throw ValidationError("mask sequence is empty");
    }
    std::vector<std::optional<Box>> boxes;
    for (const auto& frame : frames) {
        boxes.push_back(tight_box(frame >= threshold));
    }
    return BoxMaskSequence(frames.front().rows(), frames.front().cols(), std::move(boxes));
}

BoxMaskSequence mask_to_boxmask(const MaskField& masks, Index instance, double threshold) {
    std::vector<PlaneD> frames;
    for (Index t = 0; t < masks.frames(); ++t) {
        frames.emplace_back(masks.plane(instance, t));
    }
    return mask_to_boxmask(frames, threshold);
}

std::vector<std::vector<PixelCoord>> sample_points(const BoxMaskSequence& a,
                                                   const BoxMaskSequence& b, Index n_points,
                                                   std::uint64_t seed, SampleMode mode) {
    if (a.frames() != b.frames() || a.height() != b.height() || a.width() != b.width()) {
        throw DimensionMismatch("box mask sequences differ in shape");
    }
    if (n_points < 1) {
        throw ValidationError("n_points must be >= 1");
    }
    const Index h = a.height(), w = a.width();
    std::mt19937_64 rng(seed);
    std::vector<std::vector<PixelCoord>> samples(std::size_t(a.frames()));
    for (Index t = 0; t < a.frames(); ++t) {
        auto& out = samples[std::size_t(t)];
        if (mode == SampleMode::Exhaustive) {
            for (Index y = 0; y < h; ++y) {
                for (Index x = 0; x < w; ++x) {
                    out.push_back({y, x});
                }
            }
            continue;
        }
        std::vector<PixelCoord> pool;
        if (mode == SampleMode::InBox) {
            for (Index y = 0; y < h; ++y) {
                for (Index x = 0; x < w; ++x) {
                    if (a.at(t, y, x) || b.at(t, y, x)) {
                        pool.push_back({y, x});
                    }
                }
            }
        }
        if (pool.empty()) {
            std::uniform_int_distribution<Index> pick(0, h * w - 1);
            for (Index i = 0; i < n_points; ++i) {
                const Index p = pick(rng);
                out.push_back({p / w, p % w});
            }
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            for (Index i = 0; i < n_points; ++i) {
                out.push_back(pool[pick(rng)]);
            }
        }
    }
    return samples;
}

double st_boxmask_cost(const BoxMaskSequence& pred, const BoxMaskSequence& gt, Index n_points,
                       std::uint64_t seed, SampleMode mode) {
    const auto samples = sample_points(pred, gt, n_points, seed, mode);
    std::size_t total = 0;
    for (const auto& s : samples) {
        total += s.size();
    }
    Eigen::ArrayXd a(static_cast<Index>(total)), b(static_cast<Index>(total));
    Index k = 0;
    for (Index t = 0; t < pred.frames(); ++t) {
        for (const auto& p : samples[std::size_t(t)]) {
            a(k) = pred.at(t, p.y, p.x);
            b(k) = gt.at(t, p.y, p.x);
            ++k;
        }
    }
    return dice_loss(a, b);
}

double generalized_iou(const Box& a, const Box& b) {
    const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    const double enclose = (std::max(a.x_max, b.x_max) - std::min(a.x_min, b.x_min)) *
                           (std::max(a.y_max, b.y_max) - std::min(a.y_min, b.y_min));
    const double iou = uni > 0 ? inter / uni : (a == b ? 1.0 : 0.0);
    const double penalty = enclose > 0 ? (enclose - uni) / enclose : 0.0;
    return iou - penalty;
}

double framewise_cost(std::span<const Box> pred, std::span<const Box> gt, Index height,
                      Index width) {
    if (pred.size() != gt.size()) {
        throw DimensionMismatch("box sequences differ in length");
    }
    if (pred.empty()) {
        throw ValidationError("box sequences are empty");
    }
    const double sx = 1.0 / double(width), sy = 1.0 / double(height);
    double total = 0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        const Box& p = pred[t];
        const Box& g = gt[t];
        const double l1 = std::abs(p.x_min - g.x_min) * sx + std::abs(p.y_min - g.y_min) * sy +
                          std::abs(p.x_max - g.x_max) * sx + std::abs(p.y_max - g.y_max) * sy;
        total += l1 + (1.0 - generalized_iou(p, g));
    }
    return total / double(pred.size());
}

namespace {

// Shortest augmenting path with potentials; requires rows <= cols.
std::vector<int> assign_rows(const CostMatrix& cost) {
    const Index n = cost.rows(), m = cost.cols();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(std::size_t(n + 1), 0.0), v(std::size_t(m + 1), 0.0);
    std::vector<Index> owner(std::size_t(m + 1), 0), way(std::size_t(m + 1), 0);
    for (Index i = 1; i <= n; ++i) {
        owner[0] = i;
        Index j0 = 0;
        std::vector<double> min_slack(std::size_t(m + 1), inf);
        std::vector<bool> used(std::size_t(m + 1), false);
        do {
            used[std::size_t(j0)] = true;
            const Index i0 = owner[std::size_t(j0)];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= m; ++j) {
                if (used[std::size_t(j)]) {
                    continue;
                }
                const double cur = cost(i0 - 1, j - 1) - u[std::size_t(i0)] - v[std::size_t(j)];
                if (cur < min_slack[std::size_t(j)]) {
                    min_slack[std::size_t(j)] = cur;
                    way[std::size_t(j)] = j0;
                }
                if (min_slack[std::size_t(j)] < delta) {
                    delta = min_slack[std::size_t(j)];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= m; ++j) {
                if (used[std::size_t(j)]) {
                    u[std::size_t(owner[std::size_t(j)])] += delta;
                    v[std::size_t(j)] -= delta;
                } else {
                    min_slack[std::size_t(j)] -= delta;
                }
            }
            j0 = j1;
        } while (owner[std::size_t(j0)] != 0);
        do {
            const Index j1 = way[std::size_t(j0)];
            owner[std::size_t(j0)] = owner[std::size_t(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(std::size_t(n), -1);
    for (Index j = 1; j <= m; ++j) {
        if (owner[std::size_t(j)] != 0) {
            assignment[std::size_t(owner[std::size_t(j)] - 1)] = int(j - 1);
        }
    }
    return assignment;
}

}  // namespace

std::vector<int> hungarian_assign(const CostMatrix& costs) {
    if (!costs.allFinite()) {
        throw ValidationError("cost matrix has non-finite entries");
    }
    if (costs.rows() == 0 || costs.cols() == 0) {
        return std::vector<int>(std::size_t(costs.rows()), -1);
    }
    if (costs.rows() <= costs.cols()) {
        return assign_rows(costs);
    }
    const std::vector<int> by_col = assign_rows(costs.transpose());
    std::vector<int> assignment(std::size_t(costs.rows()), -1);
    for (std::size_t c = 0; c < by_col.size(); ++c) {
        assignment[std::size_t(by_col[c])] = int(c);
    }
    return assignment;
}

double assignment_cost(const CostMatrix& costs, std::span<const int> assignment) {
    double total = 0;
    for (std::size_t r = 0; r < assignment.size(); ++r) {
        if (assignment[r] >= 0) {
            total += costs(Index(r), assignment[r]);
        }
    }
    return total;
}

}  // namespace mfvis
