#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mfvis/video.hpp"

namespace mfvis {

enum class PatchMetric { L2, L1, NCC };

/// Temporal patch search parameters. Candidates sit on a grid of stride
/// `dilation` within +-`radius` grid steps of the source pixel.
struct PatchConfig {
    int patch_size = 3;
    int radius = 5;
    int max_matches = 5;
    double distance_threshold = 0.05;
    int dilation = 3;
    PatchMetric metric = PatchMetric::L2;

    void validate() const;
    bool operator==(const PatchConfig&) const = default;
};

enum class ConnectionScheme { Dense, Sequential, Cyclic };

std::string_view to_string(PatchMetric metric);
std::string_view to_string(ConnectionScheme scheme);
PatchMetric parse_metric(std::string_view name);
ConnectionScheme parse_scheme(std::string_view name);

struct Match {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    double distance = 0;

    bool operator==(const Match&) const = default;
};

/// Matches from every pixel of frame `source` into frame `target`. Each
/// pixel owns `capacity` slots of which the first `count(p)` are used, sorted
/// by ascending distance.
class MatchSet {
public:
    MatchSet() = default;
    MatchSet(Index source, Index target, Index height, Index width, int capacity);

    Index source() const { return source_; }
    Index target() const { return target_; }
    Index height() const { return height_; }
    Index width() const { return width_; }
    int capacity() const { return capacity_; }

    int count(Index pixel) const { return counts_[std::size_t(pixel)]; }
    std::span<const Match> matches(Index pixel) const {
        return {matches_.data() + pixel * capacity_, std::size_t(counts_[std::size_t(pixel)])};
    }
    std::span<const Match> matches(Index y, Index x) const { return matches(y * width_ + x); }

    /// Replaces the list of `pixel`; at most `capacity` entries.
    void assign(Index pixel, std::span<const Match> list);

    std::size_t total_matches() const;
    /// In-memory storage footprint of the match lists, in bytes.
    std::size_t storage_bytes() const;

    bool operator==(const MatchSet&) const = default;

private:
    Index source_ = 0;
    Index target_ = 0;
    Index height_ = 0;
    Index width_ = 0;
    int capacity_ = 0;
    std::vector<std::uint8_t> counts_;
    std::vector<Match> matches_;
};

struct PatchDistance {
    double value = 0;
    bool degenerate = false;  // NCC on a zero-variance patch
};

/// N x N x 3 patch centered at (y, x), clamp-to-edge, row-major with
/// interleaved Lab channels.
Eigen::VectorXd extract_patch(const Frame& frame, Index y, Index x, int patch_size);

/// L2: RMS difference. L1: mean absolute difference. NCC: (1 - ncc) / 2,
/// 0.5 and flagged degenerate when either patch has zero variance.
PatchDistance patch_distance(std::span<const double> a, std::span<const double> b,
                             PatchMetric metric);

inline PatchDistance patch_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                    PatchMetric metric) {
    return patch_distance(std::span<const double>(a.data(), std::size_t(a.size())),
                          std::span<const double>(b.data(), std::size_t(b.size())), metric);
}

/// Windowed one-to-K matching of every pixel of `source` into `target`.
MatchSet find_matches(const Frame& source, const Frame& target, const PatchConfig& config,
                      Index source_index = 0, Index target_index = 1);

/// Exhaustive reference for find_matches: scans every pixel of `target`
/// for every source pixel. Slow; for verification.
MatchSet find_matches_bruteforce(const Frame& source, const Frame& target,
                                 const PatchConfig& config, Index source_index = 0,
                                 Index target_index = 1);

using FramePair = std::pair<Index, Index>;

/// Directed frame pairs of a tube of `frames` frames. Throws ValidationError for T < 2.
std::vector<FramePair> build_tube_connections(Index frames, ConnectionScheme scheme);

/// Match sets for every connection of `scheme` over the tube's frames.
std::vector<MatchSet> match_tube(const Tube& tube, const PatchConfig& config,
                                 ConnectionScheme scheme);

struct CorrespondenceAccuracy {
    std::vector<double> per_pair;  // NaN where a pair had no matches
    double mean = 1.0;
};

/// Fraction of matches whose endpoints carry the same instance label,
/// averaged per frame pair and then over pairs with at least one match.
CorrespondenceAccuracy correspondence_accuracy(std::span<const MatchSet> match_sets,
                                               std::span<const LabelMap> labels);

}  // namespace mfvis
