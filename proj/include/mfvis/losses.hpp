#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "mfvis/correspondence.hpp"
#include "mfvis/field.hpp"
#include "mfvis/video.hpp"

namespace mfvis {

struct LossWeights {
    double lambda_pair = 1.0;
    double lambda_temp = 0.1;
    double sigma_pixel = 0.3;
    double clamp_eps = 1e-6;

    void validate() const;
    bool operator==(const LossWeights&) const = default;
};

/// Color-edge construction for the pairwise term.
struct PairwiseConfig {
    double theta = 0.1;
    int dilation = 2;
    /// Drop edges with both endpoints outside every ground-truth box.
    bool box_only = false;

    void validate() const;
    bool operator==(const PairwiseConfig&) const = default;
};

inline constexpr double kDiceSmoothing = 1e-5;

/// A scalar loss and its gradient with respect to the mask field.
struct LossTerm {
    double value = 0;
    MaskField grad;
};

struct LossReport {
    double l_temp = 0;
    double l_proj = 0;
    double l_pair = 0;
    double l_spatial = 0;
    double l_seg = 0;
    MaskField grad;
};

template <typename Scalar>
struct ConsistencyTerm {
    Scalar value;
    Scalar d_a;
    Scalar d_b;
};

/// -log(a*b + (1-a)*(1-b)), with the agreement clamped to [clamp_eps, 1].
/// Partials are zero where the clamp is active.
template <typename Scalar>
ConsistencyTerm<Scalar> consistency_loss(Scalar a, Scalar b, Scalar clamp_eps = Scalar(1e-6)) {
    using std::log;
    const Scalar agreement = a * b + (Scalar(1) - a) * (Scalar(1) - b);
    if (agreement < clamp_eps) {
        return {-log(clamp_eps), Scalar(0), Scalar(0)};
    }
    if (agreement > Scalar(1)) {
        return {Scalar(0), Scalar(0), Scalar(0)};
    }
    return {-log(agreement), -(Scalar(2) * b - Scalar(1)) / agreement,
            -(Scalar(2) * a - Scalar(1)) / agreement};
}

/// Soft dice loss 1 - (2 sum(ab) + eps) / (sum(a^2) + sum(b^2) + eps).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar dice_loss(const Eigen::ArrayBase<DerivedA>& a,
                                    const Eigen::ArrayBase<DerivedB>& b,
                                    typename DerivedA::Scalar eps = kDiceSmoothing) {
    const auto num = 2 * (a * b).sum() + eps;
    const auto den = a.square().sum() + b.square().sum() + eps;
    return 1 - num / den;
}

/// Partial derivatives of dice_loss with respect to `a`.
template <typename DerivedA, typename DerivedB>
Eigen::Array<typename DerivedA::Scalar, Eigen::Dynamic, 1> dice_loss_grad(
    const Eigen::ArrayBase<DerivedA>& a, const Eigen::ArrayBase<DerivedB>& b,
    typename DerivedA::Scalar eps = kDiceSmoothing) {
    const auto num = 2 * (a * b).sum() + eps;
    const auto den = a.square().sum() + b.square().sum() + eps;
    return -(2 * b * den - num * 2 * a) / (den * den);
}

/// Temporal loss over precomputed match sets: for each set, the mean over
/// source pixels of the summed consistency with every match; summed over sets
/// and averaged over instances.
LossTerm tk_loss(const MaskField& masks, std::span<const MatchSet> match_sets,
                 double clamp_eps = 1e-6);

/// Computes the match sets of `scheme` from the tube frames, then the loss above.
LossTerm tk_loss(const MaskField& masks, const Tube& tube, const PatchConfig& config,
                 ConnectionScheme scheme, double clamp_eps = 1e-6);

/// Dice loss between max-projections of each frame's mask onto the x and y
/// axes and the projections of the ground-truth box; summed over axes and
/// frames, averaged over instances.
LossTerm projection_loss(const MaskField& masks, const Tube& tube);

struct Edge {
    Index a = 0;  // pixel index y * W + x
    Index b = 0;

    bool operator==(const Edge&) const = default;
};
using EdgeSet = std::vector<Edge>;

/// Undirected edges between each pixel and its 8 neighbors at `dilation`,
/// kept when exp(-||lab_a - lab_b|| / theta) >= sigma_pixel.
EdgeSet build_color_edges(const Frame& frame, double sigma_pixel,
                          const PairwiseConfig& config = {});

/// Keeps edges with at least one endpoint inside one of `boxes`.
EdgeSet restrict_edges_to_boxes(const EdgeSet& edges, std::span<const Box> boxes, Index width);

/// (1/T) sum over frames of the mean consistency loss over that frame's
/// edges, averaged over instances. Frames without edges contribute zero.
LossTerm pairwise_loss(const MaskField& masks, std::span<const EdgeSet> edges,
                       double clamp_eps = 1e-6);

/// Everything the combined objective needs that does not depend on the masks:
/// match sets and color edges are computed once at construction.
class SegmentationObjective {
public:
    SegmentationObjective(const Tube& tube, const PatchConfig& config, const LossWeights& weights,
                          ConnectionScheme scheme, const PairwiseConfig& pairwise = {});

    LossReport evaluate(const MaskField& masks) const;

    const std::vector<MatchSet>& match_sets() const { return match_sets_; }
    const std::vector<EdgeSet>& edges() const { return edges_; }
    const LossWeights& weights() const { return weights_; }

private:
    const Tube* tube_;
    LossWeights weights_;
    std::vector<MatchSet> match_sets_;
    std::vector<EdgeSet> edges_;
};

/// L_seg = L_proj + lambda_pair * L_pair + lambda_temp * L_temp. Terms with a
/// zero weight are skipped and reported as zero.
LossReport total_loss(const MaskField& masks, const Tube& tube, const PatchConfig& config,
                      const LossWeights& weights, ConnectionScheme scheme,
                      const PairwiseConfig& pairwise = {});

/// Central differences (f(m + h) - f(m - h)) / 2h at each entry. Entries must
/// lie strictly inside (clamp_eps, 1 - clamp_eps) with room for the step.
std::vector<double> finite_diff_gradient(const std::function<double(const MaskField&)>& loss,
                                         const MaskField& masks,
                                         std::span<const FieldIndex> entries, double h = 1e-5,
                                         double clamp_eps = 1e-6);

}  // namespace mfvis
