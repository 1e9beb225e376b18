#include <cmath>
#include <random>
#include <string>

#include "mfvis/trainer.hpp"

namespace mfvis {

MaskField LogitField::probabilities() const {
    MaskField m = MaskField::zeros_like(logits);
    m.values() = 1.0 / (1.0 + (-logits.values()).exp());
    return m;
}

void TrainConfig::validate() const {
    if (steps < 1) {
        throw ValidationError("steps must be >= 1");
    }
    // zero is allowed: a null update leaves the initial field untouched
    if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
        throw ValidationError("learning_rate must be finite and >= 0");
    }
    weights.validate();
    patch.validate();
    pairwise.validate();
}

LossWeights TrainConfig::effective_weights() const {
    LossWeights w = weights;
    if (disable_pair) {
        w.lambda_pair = 0;
    }
    if (disable_temp) {
        w.lambda_temp = 0;
    }
    return w;
}

LogitField init_logits(const Tube& tube, Index n_instances, std::uint64_t seed) {
    LogitField field{BasicField<double>(n_instances, tube.frame_count(), tube.height(), tube.width())};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    for (Index k = 0; k < field.logits.size(); ++k) {
        const double p = 0.5 + jitter(rng);
        field.logits.values()(k) = std::log(p / (1.0 - p));
    }
    return field;
}

namespace {

StepRecord record(int step, const LossReport& r) {
    return {step, r.l_temp, r.l_proj, r.l_pair, r.l_seg};
}

void check_finite(int step, const LossReport& r) {
    if (!std::isfinite(r.l_seg) || !r.grad.values().allFinite()) {
        throw DivergenceError("non-finite loss at step " + std::to_string(step) +
                              " (l_proj=" + std::to_string(r.l_proj) +
                              ", l_pair=" + std::to_string(r.l_pair) +
                              ", l_temp=" + std::to_string(r.l_temp) + ")");
    }
}

}  // namespace

TrainResult train(const Tube& tube, const TrainConfig& config) {
    config.validate();
    const SegmentationObjective objective(tube, config.patch, config.effective_weights(),
                                          config.scheme, config.pairwise);
    TrainResult result;
    for (const auto& set : objective.match_sets()) {
        result.match_storage_bytes += set.storage_bytes();
    }
    result.connections = objective.match_sets().size();
    result.initial = init_logits(tube, tube.instance_count(), config.seed);
    LogitField current = result.initial;
    for (int step = 0; step < config.steps; ++step) {
        const MaskField masks = current.probabilities();
        const LossReport report = objective.evaluate(masks);
        check_finite(step, report);
        result.log.push_back(record(step, report));
        current.logits.values() -=
            config.learning_rate * report.grad.values() * masks.values() * (1.0 - masks.values());
    }
    result.final_masks = current.probabilities();
    const LossReport last = objective.evaluate(result.final_masks);
    check_finite(config.steps, last);
    result.log.push_back(record(config.steps, last));
    result.final_logits = std::move(current);
    return result;
}

IouReport evaluate_iou(const MaskField& masks, std::span<const LabelMap> gt_labels,
                       double threshold) {
    if (Index(gt_labels.size()) != masks.frames()) {
        throw DimensionMismatch("need one label map per frame");
    }
    IouReport report;
    for (Index i = 0; i < masks.instances(); ++i) {
        std::size_t inter = 0, uni = 0;
        for (Index t = 0; t < masks.frames(); ++t) {
            const LabelMap& labels = gt_labels[std::size_t(t)];
            if (labels.rows() != masks.height() || labels.cols() != masks.width()) {
                throw DimensionMismatch("label map size differs from mask field");
            }
            const auto pred = masks.plane(i, t) >= threshold;
            const auto gt = labels == std::uint8_t(i + 1);
            inter += std::size_t((pred && gt).count());
            uni += std::size_t((pred || gt).count());
        }
        report.per_instance.push_back(uni == 0 ? 1.0 : double(inter) / double(uni));
    }
    double sum = 0;
    for (double v : report.per_instance) {
        sum += v;
    }
    report.mean = report.per_instance.empty() ? 0.0 : sum / double(report.per_instance.size());
    return report;
}

}  // namespace mfvis
