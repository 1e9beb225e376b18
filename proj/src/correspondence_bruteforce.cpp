#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "mfvis/correspondence.hpp"

namespace mfvis {

namespace {

double lab_clamped(const Frame& frame, Index y, Index x, int channel) {
    y = y < 0 ? 0 : (y >= frame.height() ? frame.height() - 1 : y);
    x = x < 0 ? 0 : (x >= frame.width() ? frame.width() - 1 : x);
    return frame.lab(y, x, channel);
}

double direct_distance(const Frame& a, Index ay, Index ax, const Frame& b, Index by, Index bx,
                       int patch_size, PatchMetric metric) {
    const int half = patch_size / 2;
    std::vector<double> pa, pb;
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
            for (int c = 0; c < 3; ++c) {
                pa.push_back(lab_clamped(a, ay + dy, ax + dx, c));
                pb.push_back(lab_clamped(b, by + dy, bx + dx, c));
            }
        }
    }
    const double n = double(pa.size());
    if (metric == PatchMetric::L2) {
        double s = 0;
        for (std::size_t i = 0; i < pa.size(); ++i) {
            s += (pa[i] - pb[i]) * (pa[i] - pb[i]);
        }
        return std::sqrt(s / n);
    }
    if (metric == PatchMetric::L1) {
        double s = 0;
        for (std::size_t i = 0; i < pa.size(); ++i) {
            s += std::abs(pa[i] - pb[i]);
        }
        return s / n;
    }
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        sa += pa[i];
        sb += pb[i];
    }
    const double ma = sa / n, mb = sb / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        sab += (pa[i] - ma) * (pb[i] - mb);
        saa += (pa[i] - ma) * (pa[i] - ma);
        sbb += (pb[i] - mb) * (pb[i] - mb);
    }
    if (saa <= 1e-18 || sbb <= 1e-18) {
        return 0.5;
    }
    double ncc = sab / std::sqrt(saa * sbb);
    ncc = ncc > 1.0 ? 1.0 : (ncc < -1.0 ? -1.0 : ncc);
    return (1.0 - ncc) / 2.0;
}

}  // namespace

MatchSet find_matches_bruteforce(const Frame& source, const Frame& target,
                                 const PatchConfig& config, Index source_index,
                                 Index target_index) {
    config.validate();
    if (source.height() != target.height() || source.width() != target.width()) {
        throw DimensionMismatch("frames differ in size");
    }
    const Index h = source.height(), w = source.width();
    const Index reach = Index(config.radius) * config.dilation;
    MatchSet result(source_index, target_index, h, w, config.max_matches);

    for (Index y = 0; y < h; ++y) {
        for (Index x = 0; x < w; ++x) {
            // every target pixel in row-major order; keep those on the dilated grid
            std::vector<Match> found;
            for (Index ty = 0; ty < h; ++ty) {
                for (Index tx = 0; tx < w; ++tx) {
                    const Index oy = ty - y, ox = tx - x;
                    if (std::abs(oy) > reach || std::abs(ox) > reach ||
                        oy % config.dilation != 0 || ox % config.dilation != 0) {
                        continue;
                    }
                    const double d = direct_distance(source, y, x, target, ty, tx,
                                                     config.patch_size, config.metric);
                    if (d < config.distance_threshold) {
                        found.push_back({std::uint16_t(tx), std::uint16_t(ty), d});
                    }
                }
            }
            std::stable_sort(found.begin(), found.end(),
                             [](const Match& a, const Match& b) { return a.distance < b.distance; });
            if (found.size() > std::size_t(config.max_matches)) {
                found.resize(std::size_t(config.max_matches));
            }
            result.assign(y * w + x, found);
        }
    }
    return result;
}

}  // namespace mfvis
