#pragma once

#include <cstdint>
#include <vector>

#include "mfvis/correspondence.hpp"
#include "mfvis/losses.hpp"

namespace mfvis {

/// Unconstrained per-pixel mask logits; probabilities are their logistic.
struct LogitField {
    BasicField<double> logits;

    MaskField probabilities() const;
};

struct TrainConfig {
    int steps = 1000;
    double learning_rate = 100.0;
    LossWeights weights;
    PatchConfig patch;
    PairwiseConfig pairwise;
    ConnectionScheme scheme = ConnectionScheme::Cyclic;
    std::uint64_t seed = 0;
    bool disable_pair = false;
    bool disable_temp = false;

    void validate() const;
    /// Weights after applying the ablation toggles.
    LossWeights effective_weights() const;
    bool operator==(const TrainConfig&) const = default;
};

struct StepRecord {
    int step = 0;
    double l_temp = 0;
    double l_proj = 0;
    double l_pair = 0;
    double l_seg = 0;
};

struct TrainResult {
    LogitField initial;
    LogitField final_logits;
    MaskField final_masks;
    /// One record per step before its update, plus a last record for the
    /// final field (steps + 1 records in total).
    std::vector<StepRecord> log;
    /// Frame pairs matched and the bytes their match sets occupy (zero when
    /// the temporal term is disabled).
    std::size_t connections = 0;
    std::size_t match_storage_bytes = 0;

    double initial_l_seg() const { return log.front().l_seg; }
    double final_l_seg() const { return log.back().l_seg; }
};

/// logit(0.5 + u) with u ~ Uniform(-0.01, 0.01) per entry.
LogitField init_logits(const Tube& tube, Index n_instances, std::uint64_t seed);

/// Plain gradient descent on the combined objective through the logistic
/// parameterization. Throws DivergenceError on a non-finite loss.
TrainResult train(const Tube& tube, const TrainConfig& config);

struct IouReport {
    std::vector<double> per_instance;
    double mean = 0;
};

/// Spatio-temporal IoU per instance after binarizing at `threshold`
/// (m >= threshold is foreground). An empty union scores 1.
IouReport evaluate_iou(const MaskField& masks, std::span<const LabelMap> gt_labels,
                       double threshold = 0.5);

}  // namespace mfvis
