#include <cmath>
#include <string>

#include "mfvis/losses.hpp"
#include "mfvis/parallel.hpp"

namespace mfvis {

void LossWeights::validate() const {
    if (!(lambda_pair >= 0) || !(lambda_temp >= 0) || !std::isfinite(lambda_pair) ||
        !std::isfinite(lambda_temp)) {
        throw ValidationError("loss weights must be finite and non-negative");
    }
    if (!(sigma_pixel > 0)) {
        throw ValidationError("sigma_pixel must be > 0");
    }
    if (!(clamp_eps > 0 && clamp_eps <= 1e-3)) {
        throw ValidationError("clamp_eps must be in (0, 1e-3]");
    }
}

void PairwiseConfig::validate() const {
    if (!(theta > 0)) {
        throw ValidationError("pairwise theta must be > 0");
    }
    if (dilation < 1) {
        throw ValidationError("pairwise dilation must be >= 1");
    }
}

namespace {

// Per-instance values reduced in instance order.
double mean_over_instances(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    double sum = 0;
    for (double v : values) {
        sum += v;
    }
    return sum / double(values.size());
}

}  // namespace

LossTerm tk_loss(const MaskField& masks, std::span<const MatchSet> match_sets, double clamp_eps) {
    const Index n = masks.instances();
    LossTerm out{0.0, MaskField::zeros_like(masks)};
    const double pixel_norm = 1.0 / double(masks.plane_size());
    const double scale = n > 0 ? 1.0 / double(n) : 0.0;
    for (const auto& set : match_sets) {
        if (set.source() >= masks.frames() || set.target() >= masks.frames() ||
            set.height() != masks.height() || set.width() != masks.width()) {
            throw DimensionMismatch("match set does not fit the mask field");
        }
    }

    std::vector<double> per_instance(std::size_t(n), 0.0);
    parallel_for(n, [&](Index i) {
        double total = 0;
        for (const auto& set : match_sets) {
            const auto src = masks.plane(i, set.source());
            const auto dst = masks.plane(i, set.target());
            auto g_src = out.grad.plane(i, set.source());
            auto g_dst = out.grad.plane(i, set.target());
            double pair_sum = 0;
            for (Index y = 0; y < masks.height(); ++y) {
                for (Index x = 0; x < masks.width(); ++x) {
                    for (const Match& m : set.matches(y, x)) {
                        const auto c = consistency_loss(src(y, x), dst(m.y, m.x), clamp_eps);
                        pair_sum += c.value;
                        g_src(y, x) += c.d_a * pixel_norm * scale;
                        g_dst(m.y, m.x) += c.d_b * pixel_norm * scale;
                    }
                }
            }
            total += pair_sum * pixel_norm;
        }
        per_instance[std::size_t(i)] = total;
    });
    out.value = mean_over_instances(per_instance);
    return out;
}

LossTerm tk_loss(const MaskField& masks, const Tube& tube, const PatchConfig& config,
                 ConnectionScheme scheme, double clamp_eps) {
    check_field_matches(masks, tube);
    const auto sets = match_tube(tube, config, scheme);
    return tk_loss(masks, sets, clamp_eps);
}

LossTerm projection_loss(const MaskField& masks, const Tube& tube) {
    check_field_matches(masks, tube);
    const Index n = masks.instances(), h = masks.height(), w = masks.width();
    if (Index(tube.gt_boxes.size()) != masks.frames() || tube.instance_count() != n) {
        throw ValidationError("projection loss needs a ground-truth box for every instance and frame");
    }
    LossTerm out{0.0, MaskField::zeros_like(masks)};
    std::vector<double> per_instance(std::size_t(n), 0.0);

    parallel_for(n, [&](Index i) {
        double total = 0;
        Eigen::ArrayXd proj_x(w), box_x(w), proj_y(h), box_y(h);
        Eigen::Array<Index, Eigen::Dynamic, 1> arg_x(w), arg_y(h);
        for (Index t = 0; t < masks.frames(); ++t) {
            const auto plane = masks.plane(i, t);
            const Box& box = tube.gt_boxes[std::size_t(t)][std::size_t(i)];
            // maxCoeff returns the first occurrence, which fixes the tie subgradient
            for (Index x = 0; x < w; ++x) {
                Index arg;
                proj_x(x) = plane.col(x).maxCoeff(&arg);
                arg_x(x) = arg;
                box_x(x) = (double(x) + 0.5 >= box.x_min && double(x) + 0.5 < box.x_max) ? 1 : 0;
            }
            for (Index y = 0; y < h; ++y) {
                Index arg;
                proj_y(y) = plane.row(y).maxCoeff(&arg);
                arg_y(y) = arg;
                box_y(y) = (double(y) + 0.5 >= box.y_min && double(y) + 0.5 < box.y_max) ? 1 : 0;
            }
            total += dice_loss(proj_x, box_x) + dice_loss(proj_y, box_y);

            auto grad = out.grad.plane(i, t);
            const Eigen::ArrayXd gx = dice_loss_grad(proj_x, box_x) / double(n);
            const Eigen::ArrayXd gy = dice_loss_grad(proj_y, box_y) / double(n);
            for (Index x = 0; x < w; ++x) {
                grad(arg_x(x), x) += gx(x);
            }
            for (Index y = 0; y < h; ++y) {
                grad(y, arg_y(y)) += gy(y);
            }
        }
        per_instance[std::size_t(i)] = total;
    });
    out.value = mean_over_instances(per_instance);
    return out;
}

EdgeSet build_color_edges(const Frame& frame, double sigma_pixel, const PairwiseConfig& config) {
    config.validate();
    const Index h = frame.height(), w = frame.width(), d = config.dilation;
    const Index offsets[4][2] = {{0, d}, {d, -d}, {d, 0}, {d, d}};
    EdgeSet edges;
    for (Index y = 0; y < h; ++y) {
        for (Index x = 0; x < w; ++x) {
            for (const auto& off : offsets) {
                const Index yy = y + off[0], xx = x + off[1];
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) {
                    continue;
                }
                const Index a = y * w + x, b = yy * w + xx;
                const double dist = (frame.lab().row(a) - frame.lab().row(b)).norm();
                if (std::exp(-dist / config.theta) >= sigma_pixel) {
                    edges.push_back({a, b});
                }
            }
        }
    }
    return edges;
}

EdgeSet restrict_edges_to_boxes(const EdgeSet& edges, std::span<const Box> boxes, Index width) {
    const auto in_any = [&](Index p) {
        const double x = double(p % width) + 0.5, y = double(p / width) + 0.5;
        return std::any_of(boxes.begin(), boxes.end(),
                           [&](const Box& b) { return b.contains(x, y); });
    };
    EdgeSet kept;
    for (const Edge& e : edges) {
        if (in_any(e.a) || in_any(e.b)) {
            kept.push_back(e);
        }
    }
    return kept;
}

LossTerm pairwise_loss(const MaskField& masks, std::span<const EdgeSet> edges, double clamp_eps) {
    const Index n = masks.instances(), frames = masks.frames();
    if (Index(edges.size()) != frames) {
        throw DimensionMismatch("need one edge set per frame");
    }
    LossTerm out{0.0, MaskField::zeros_like(masks)};
    std::vector<double> per_instance(std::size_t(n), 0.0);
    parallel_for(n, [&](Index i) {
        double total = 0;
        for (Index t = 0; t < frames; ++t) {
            const EdgeSet& set = edges[std::size_t(t)];
            if (set.empty()) {
                continue;
            }
            const double norm = 1.0 / (double(frames) * double(set.size()));
            const double* m = masks.values().data() + masks.offset(i, t);
            double* g = out.grad.values().data() + masks.offset(i, t);
            double frame_sum = 0;
            for (const Edge& e : set) {
                const auto c = consistency_loss(m[e.a], m[e.b], clamp_eps);
                frame_sum += c.value;
                g[e.a] += c.d_a * norm / double(n);
                g[e.b] += c.d_b * norm / double(n);
            }
            total += frame_sum * norm;
        }
        per_instance[std::size_t(i)] = total;
    });
    out.value = mean_over_instances(per_instance);
    return out;
}

SegmentationObjective::SegmentationObjective(const Tube& tube, const PatchConfig& config,
                                             const LossWeights& weights, ConnectionScheme scheme,
                                             const PairwiseConfig& pairwise)
    : tube_(&tube), weights_(weights) {
    weights.validate();
    config.validate();
    pairwise.validate();
    tube.validate();
    if (weights.lambda_temp != 0) {
        match_sets_ = match_tube(tube, config, scheme);
    }
    if (weights.lambda_pair != 0) {
        for (Index t = 0; t < tube.frame_count(); ++t) {
            EdgeSet e = build_color_edges(tube.frames[std::size_t(t)], weights.sigma_pixel, pairwise);
            if (pairwise.box_only) {
                e = restrict_edges_to_boxes(e, tube.gt_boxes[std::size_t(t)], tube.width());
            }
            edges_.push_back(std::move(e));
        }
    }
}

LossReport SegmentationObjective::evaluate(const MaskField& masks) const {
    LossTerm proj = projection_loss(masks, *tube_);
    LossReport report;
    report.l_proj = proj.value;
    report.grad = std::move(proj.grad);
    if (weights_.lambda_pair != 0) {
        const LossTerm pair = pairwise_loss(masks, edges_, weights_.clamp_eps);
        report.l_pair = pair.value;
        report.grad.values() += weights_.lambda_pair * pair.grad.values();
    }
    report.l_spatial = report.l_proj + weights_.lambda_pair * report.l_pair;
    if (weights_.lambda_temp != 0) {
        const LossTerm temp = tk_loss(masks, match_sets_, weights_.clamp_eps);
        report.l_temp = temp.value;
        report.grad.values() += weights_.lambda_temp * temp.grad.values();
    }
    report.l_seg = report.l_spatial + weights_.lambda_temp * report.l_temp;
    return report;
}

LossReport total_loss(const MaskField& masks, const Tube& tube, const PatchConfig& config,
                      const LossWeights& weights, ConnectionScheme scheme,
                      const PairwiseConfig& pairwise) {
    check_field_matches(masks, tube);
    return SegmentationObjective(tube, config, weights, scheme, pairwise).evaluate(masks);
}

std::vector<double> finite_diff_gradient(const std::function<double(const MaskField&)>& loss,
                                         const MaskField& masks,
                                         std::span<const FieldIndex> entries, double h,
                                         double clamp_eps) {
    if (!(h >= 1e-7 && h <= 1e-3)) {
        throw ValidationError("finite-difference step must be in [1e-7, 1e-3]");
    }
    MaskField probe = masks;
    std::vector<double> partials;
    partials.reserve(entries.size());
    for (const FieldIndex& e : entries) {
        if (e.instance < 0 || e.instance >= masks.instances() || e.frame < 0 ||
            e.frame >= masks.frames() || e.y < 0 || e.y >= masks.height() || e.x < 0 ||
            e.x >= masks.width()) {
            throw ValidationError("finite-difference entry outside the mask field");
        }
        const double m = masks[e];
        if (!(m > clamp_eps && m < 1 - clamp_eps) || m - h < 0 || m + h > 1) {
            throw ValidationError("finite-difference entry " + std::to_string(m) +
                                  " is not strictly inside the valid interior");
        }
        probe[e] = m + h;
        const double up = loss(probe);
        probe[e] = m - h;
        const double down = loss(probe);
        probe[e] = m;
        partials.push_back((up - down) / (2 * h));
    }
    return partials;
}

}  // namespace mfvis
