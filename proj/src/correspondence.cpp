#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfvis/correspondence.hpp"
#include "mfvis/parallel.hpp"

namespace mfvis {

void PatchConfig::validate() const {
    if (patch_size < 1 || patch_size % 2 == 0) {
        throw ValidationError("patch_size must be odd and >= 1");
    }
    if (radius < 0) {
        throw ValidationError("radius must be >= 0");
    }
    if (max_matches < 1 || max_matches > 255) {
        throw ValidationError("k must be in [1, 255]");
    }
    if (!(distance_threshold >= 0) || !std::isfinite(distance_threshold)) {
        throw ValidationError("threshold must be finite and >= 0");
    }
    if (dilation < 1) {
        throw ValidationError("dilation must be >= 1");
    }
}

std::string_view to_string(PatchMetric metric) {
    switch (metric) {
        case PatchMetric::L2: return "l2";
        case PatchMetric::L1: return "l1";
        case PatchMetric::NCC: return "ncc";
    }
    return "?";
}

std::string_view to_string(ConnectionScheme scheme) {
    switch (scheme) {
        case ConnectionScheme::Dense: return "dense";
        case ConnectionScheme::Sequential: return "sequential";
        case ConnectionScheme::Cyclic: return "cyclic";
    }
    return "?";
}

PatchMetric parse_metric(std::string_view name) {
    if (name == "l2" || name == "L2") return PatchMetric::L2;
    if (name == "l1" || name == "L1") return PatchMetric::L1;
    if (name == "ncc" || name == "NCC") return PatchMetric::NCC;
    throw ValidationError("unknown patch metric '" + std::string(name) + "'");
}

ConnectionScheme parse_scheme(std::string_view name) {
    if (name == "dense") return ConnectionScheme::Dense;
    if (name == "sequential") return ConnectionScheme::Sequential;
    if (name == "cyclic") return ConnectionScheme::Cyclic;
    throw ValidationError("unknown connection scheme '" + std::string(name) + "'");
}

MatchSet::MatchSet(Index source, Index target, Index height, Index width, int capacity)
    : source_(source), target_(target), height_(height), width_(width), capacity_(capacity),
      counts_(std::size_t(height * width), 0),
      matches_(std::size_t(height * width * capacity)) {}

void MatchSet::assign(Index pixel, std::span<const Match> list) {
    if (list.size() > std::size_t(capacity_)) {
        throw ValidationError("match list exceeds capacity");
    }
    counts_[std::size_t(pixel)] = std::uint8_t(list.size());
    auto* slot = matches_.data() + pixel * capacity_;
    std::copy(list.begin(), list.end(), slot);
    std::fill(slot + list.size(), slot + capacity_, Match{});
}

std::size_t MatchSet::total_matches() const {
    std::size_t total = 0;
    for (auto c : counts_) {
        total += c;
    }
    return total;
}

std::size_t MatchSet::storage_bytes() const {
    return counts_.size() * sizeof(std::uint8_t) + matches_.size() * sizeof(Match);
}

namespace {

// Sequential sums in element order; find_matches_bruteforce relies on the
// same order to reproduce distances bit for bit.
PatchDistance distance_kernel(const double* a, const double* b, std::size_t n,
                              PatchMetric metric) {
    const double count = double(n);
    switch (metric) {
        case PatchMetric::L2: {
            double sum = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = a[i] - b[i];
                sum += d * d;
            }
            return {std::sqrt(sum / count), false};
        }
        case PatchMetric::L1: {
            double sum = 0;
            for (std::size_t i = 0; i < n; ++i) {
                sum += std::abs(a[i] - b[i]);
            }
            return {sum / count, false};
        }
        case PatchMetric::NCC: {
            double sum_a = 0, sum_b = 0;
            for (std::size_t i = 0; i < n; ++i) {
                sum_a += a[i];
                sum_b += b[i];
            }
            const double mean_a = sum_a / count, mean_b = sum_b / count;
            double cov = 0, var_a = 0, var_b = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double da = a[i] - mean_a, db = b[i] - mean_b;
                cov += da * db;
                var_a += da * da;
                var_b += db * db;
            }
            if (var_a <= 1e-18 || var_b <= 1e-18) {
                return {0.5, true};
            }
            const double ncc = std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
            return {(1.0 - ncc) / 2.0, false};
        }
    }
    return {std::numeric_limits<double>::quiet_NaN(), false};
}

using PatchTable = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

PatchTable patch_table(const Frame& frame, int patch_size) {
    const Index h = frame.height(), w = frame.width(), half = patch_size / 2;
    PatchTable table(h * w, Index(patch_size) * patch_size * 3);
    for (Index y = 0; y < h; ++y) {
        for (Index x = 0; x < w; ++x) {
            double* out = table.row(y * w + x).data();
            for (Index dy = -half; dy <= half; ++dy) {
                const Index yy = std::clamp<Index>(y + dy, 0, h - 1);
                for (Index dx = -half; dx <= half; ++dx) {
                    const Index xx = std::clamp<Index>(x + dx, 0, w - 1);
                    const auto lab = frame.lab().row(yy * w + xx);
                    *out++ = lab(0);
                    *out++ = lab(1);
                    *out++ = lab(2);
                }
            }
        }
    }
    return table;
}

}  // namespace

Eigen::VectorXd extract_patch(const Frame& frame, Index y, Index x, int patch_size) {
    const Index h = frame.height(), w = frame.width(), half = patch_size / 2;
    Eigen::VectorXd patch(Index(patch_size) * patch_size * 3);
    Index k = 0;
    for (Index dy = -half; dy <= half; ++dy) {
        for (Index dx = -half; dx <= half; ++dx) {
            const Index yy = std::clamp<Index>(y + dy, 0, h - 1);
            const Index xx = std::clamp<Index>(x + dx, 0, w - 1);
            patch.segment<3>(k) = frame.lab().row(yy * w + xx).transpose();
            k += 3;
        }
    }
    return patch;
}

PatchDistance patch_distance(std::span<const double> a, std::span<const double> b,
                             PatchMetric metric) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("patch lengths differ");
    }
    return distance_kernel(a.data(), b.data(), a.size(), metric);
}

MatchSet find_matches(const Frame& source, const Frame& target, const PatchConfig& config,
                      Index source_index, Index target_index) {
    config.validate();
    if (source.height() != target.height() || source.width() != target.width()) {
        throw DimensionMismatch("frames differ in size");
    }
    const Index h = source.height(), w = source.width();
    const PatchTable src = patch_table(source, config.patch_size);
    const PatchTable dst = patch_table(target, config.patch_size);
    const auto n = std::size_t(src.cols());
    const Index k = config.max_matches, r = config.radius, step = config.dilation;

    MatchSet result(source_index, target_index, h, w, config.max_matches);
    parallel_for(h, [&](Index y) {
        struct Candidate {
            double distance;
            Index order;
            Index y, x;
        };
        std::vector<Candidate> candidates;
        std::vector<Match> kept;
        for (Index x = 0; x < w; ++x) {
            candidates.clear();
            const double* a = src.row(y * w + x).data();
            Index order = 0;
            for (Index i = -r; i <= r; ++i) {
                const Index yy = y + i * step;
                for (Index j = -r; j <= r; ++j, ++order) {
                    const Index xx = x + j * step;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) {
                        continue;
                    }
                    const double d =
                        distance_kernel(a, dst.row(yy * w + xx).data(), n, config.metric).value;
                    if (d < config.distance_threshold) {
                        candidates.push_back({d, order, yy, xx});
                    }
                }
            }
            const auto top = std::min<std::size_t>(candidates.size(), std::size_t(k));
            std::partial_sort(candidates.begin(), candidates.begin() + std::ptrdiff_t(top),
                              candidates.end(), [](const Candidate& lhs, const Candidate& rhs) {
                                  return lhs.distance < rhs.distance ||
                                         (lhs.distance == rhs.distance && lhs.order < rhs.order);
                              });
            kept.clear();
            for (std::size_t c = 0; c < top; ++c) {
                kept.push_back({std::uint16_t(candidates[c].x), std::uint16_t(candidates[c].y),
                                candidates[c].distance});
            }
            result.assign(y * w + x, kept);
        }
    });
    return result;
}

std::vector<FramePair> build_tube_connections(Index frames, ConnectionScheme scheme) {
    if (frames < 2) {
        throw ValidationError("tube connections need at least 2 frames");
    }
    std::vector<FramePair> pairs;
    switch (scheme) {
        case ConnectionScheme::Cyclic:
            for (Index t = 0; t < frames; ++t) {
                pairs.emplace_back(t, (t + 1) % frames);
            }
            break;
        case ConnectionScheme::Sequential:
            for (Index t = 0; t + 1 < frames; ++t) {
                pairs.emplace_back(t, t + 1);
            }
            break;
        case ConnectionScheme::Dense:
            for (Index t = 0; t < frames; ++t) {
                for (Index u = t + 1; u < frames; ++u) {
                    pairs.emplace_back(t, u);
                }
            }
            break;
    }
    return pairs;
}

std::vector<MatchSet> match_tube(const Tube& tube, const PatchConfig& config,
                                 ConnectionScheme scheme) {
    std::vector<MatchSet> sets;
    for (const auto& [t, u] : build_tube_connections(tube.frame_count(), scheme)) {
        sets.push_back(find_matches(tube.frames[std::size_t(t)], tube.frames[std::size_t(u)],
                                    config, t, u));
    }
    return sets;
}

CorrespondenceAccuracy correspondence_accuracy(std::span<const MatchSet> match_sets,
                                               std::span<const LabelMap> labels) {
    CorrespondenceAccuracy result;
    double sum = 0;
    Index counted = 0;
    for (const auto& set : match_sets) {
        const auto frames = Index(labels.size());
        if (set.source() >= frames || set.target() >= frames) {
            throw ValidationError("no ground-truth label map for frame pair (" +
                                  std::to_string(set.source()) + ", " +
                                  std::to_string(set.target()) + ")");
        }
        const LabelMap& from = labels[std::size_t(set.source())];
        const LabelMap& to = labels[std::size_t(set.target())];
        if (from.rows() != set.height() || from.cols() != set.width() ||
            to.rows() != set.height() || to.cols() != set.width()) {
            throw DimensionMismatch("label map size differs from match set");
        }
        std::size_t agree = 0, total = 0;
        for (Index y = 0; y < set.height(); ++y) {
            for (Index x = 0; x < set.width(); ++x) {
                for (const Match& m : set.matches(y, x)) {
                    agree += from(y, x) == to(m.y, m.x) ? 1 : 0;
                    ++total;
                }
            }
        }
        if (total == 0) {
            result.per_pair.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double accuracy = double(agree) / double(total);
        result.per_pair.push_back(accuracy);
        sum += accuracy;
        ++counted;
    }
    result.mean = counted > 0 ? sum / double(counted) : 1.0;
    return result;
}

}  // namespace mfvis
