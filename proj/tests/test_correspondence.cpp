#include <doctest.h>

#include <random>
#include <set>

#include "mfvis/correspondence.hpp"
#include "mfvis/synthetic.hpp"
#include "oracles.hpp"

using namespace mfvis;

namespace {

Frame gradient_frame(Index h, Index w) {
    RgbImage img(h, w);
    for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x)
            img.set(y, x, {std::uint8_t(10 + 20 * x), std::uint8_t(10 + 30 * y), 90});
    return Frame(img);
}

}  // namespace

TEST_CASE("extract_patch at a corner clamps to the edge") {
    const Frame f = gradient_frame(4, 5);
    const Eigen::VectorXd p = extract_patch(f, 0, 0, 3);
    REQUIRE(p.size() == 27);
    int k = 0;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            const Index y = std::max(0, dy), x = std::max(0, dx);
            for (int c = 0; c < 3; ++c) CHECK(p(k++) == f.lab(y, x, c));
        }
    }
    const Eigen::VectorXd q = extract_patch(f, 3, 4, 5);
    REQUIRE(q.size() == 75);
    // Bottom-right entry of a 5x5 patch at the last pixel is that pixel again.
    for (int c = 0; c < 3; ++c) CHECK(q(72 + c) == f.lab(3, 4, c));
}

TEST_CASE("extract_patch with N=1 is the pixel's Lab") {
    const Frame f = gradient_frame(3, 3);
    for (Index y = 0; y < 3; ++y)
        for (Index x = 0; x < 3; ++x) {
            const Eigen::VectorXd p = extract_patch(f, y, x, 1);
            REQUIRE(p.size() == 3);
            for (int c = 0; c < 3; ++c) CHECK(p(c) == f.lab(y, x, c));
        }
}

TEST_CASE("patch distances against scalar formulas") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXd a(27), b(27);
        for (int k = 0; k < 27; ++k) {
            a(k) = u(rng);
            b(k) = u(rng);
        }
        double sq = 0, ab = 0, ma = 0, mb = 0;
        for (int k = 0; k < 27; ++k) {
            sq += (a(k) - b(k)) * (a(k) - b(k));
            ab += std::abs(a(k) - b(k));
            ma += a(k);
            mb += b(k);
        }
        ma /= 27;
        mb /= 27;
        double cov = 0, va = 0, vb = 0;
        for (int k = 0; k < 27; ++k) {
            cov += (a(k) - ma) * (b(k) - mb);
            va += (a(k) - ma) * (a(k) - ma);
            vb += (b(k) - mb) * (b(k) - mb);
        }
        CHECK(std::abs(patch_distance(a, b, PatchMetric::L2).value - std::sqrt(sq / 27)) < 1e-12);
        CHECK(std::abs(patch_distance(a, b, PatchMetric::L1).value - ab / 27) < 1e-12);
        const double ncc = cov / std::sqrt(va * vb);
        CHECK(std::abs(patch_distance(a, b, PatchMetric::NCC).value - (1 - ncc) / 2) < 1e-12);
        CHECK(patch_distance(a, a, PatchMetric::L2).value == 0.0);
        CHECK(std::abs(patch_distance(a, a, PatchMetric::NCC).value) < 1e-12);
    }
}

TEST_CASE("patch distance extremes") {
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(27), ones = Eigen::VectorXd::Ones(27);
    CHECK(patch_distance(zeros, ones, PatchMetric::L2).value == doctest::Approx(1.0));
    CHECK(patch_distance(zeros, ones, PatchMetric::L1).value == doctest::Approx(1.0));
    const auto ncc = patch_distance(zeros, ones, PatchMetric::NCC);
    CHECK(ncc.degenerate);
    CHECK(ncc.value == 0.5);
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(27, 0, 1);
    const auto anti = patch_distance(v, Eigen::VectorXd(1.0 - v.array()), PatchMetric::NCC);
    CHECK_FALSE(anti.degenerate);
    CHECK(anti.value == doctest::Approx(1.0));
}

TEST_CASE("self matching finds the pixel itself first") {
    std::mt19937_64 rng(8);
    const Tube tube = oracle::random_tube(rng, 1, 14, 14);
    PatchConfig cfg;
    cfg.dilation = 1;
    cfg.radius = 2;
    for (PatchMetric metric : {PatchMetric::L2, PatchMetric::L1}) {
        cfg.metric = metric;
        const MatchSet set = find_matches(tube.frames[0], tube.frames[0], cfg, 0, 0);
        for (Index y = 0; y < 14; ++y)
            for (Index x = 0; x < 14; ++x) {
                const auto list = set.matches(y, x);
                REQUIRE(!list.empty());
                CHECK(list[0].distance == 0.0);
                const bool self = list[0].x == x && list[0].y == y;
                // Any other zero-distance pixel would be an exact tie ahead in row-major order.
                if (!self) CHECK(list[0].y * 14 + list[0].x < y * 14 + x);
            }
    }
}

TEST_CASE("zero threshold yields no matches") {
    std::mt19937_64 rng(2);
    const Tube tube = oracle::random_tube(rng, 2, 10, 10, 1, false);
    PatchConfig cfg;
    cfg.distance_threshold = 0.0;
    const MatchSet set = find_matches(tube.frames[0], tube.frames[0], cfg, 0, 0);
    CHECK(set.total_matches() == 0);
}

TEST_CASE("fast matching equals the exhaustive scan") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> pick(0, 1000);
    const PatchMetric metrics[] = {PatchMetric::L2, PatchMetric::L1, PatchMetric::NCC};
    for (int trial = 0; trial < 40; ++trial) {
        const Index h = 6 + pick(rng) % 10, w = 6 + pick(rng) % 10;
        const Tube tube = oracle::random_tube(rng, 2, h, w, 1, pick(rng) % 2 == 0);
        PatchConfig cfg;
        cfg.metric = metrics[trial % 3];
        cfg.patch_size = 1 + 2 * (pick(rng) % 3);
        cfg.radius = 1 + pick(rng) % 3;
        cfg.dilation = 1 + pick(rng) % 3;
        cfg.max_matches = 1 + pick(rng) % 6;
        cfg.distance_threshold = (pick(rng) % 4) * 0.1 + 0.05;
        const MatchSet fast = find_matches(tube.frames[0], tube.frames[1], cfg);
        const MatchSet slow = find_matches_bruteforce(tube.frames[0], tube.frames[1], cfg);
        CHECK(fast == slow);
    }
}

TEST_CASE("match lists respect the window, threshold and order") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Tube tube = oracle::random_tube(rng, 2, 16, 13);
        PatchConfig cfg;
        cfg.radius = 1 + trial % 3;
        cfg.dilation = 1 + trial % 4;
        cfg.distance_threshold = 0.2;
        cfg.max_matches = 4;
        cfg.metric = trial % 2 ? PatchMetric::L1 : PatchMetric::L2;
        const MatchSet set = find_matches(tube.frames[0], tube.frames[1], cfg);
        const int reach = cfg.radius * cfg.dilation;
        for (Index y = 0; y < 16; ++y)
            for (Index x = 0; x < 13; ++x) {
                const auto list = set.matches(y, x);
                CHECK(list.size() <= 4);
                std::set<std::pair<int, int>> seen;
                for (std::size_t k = 0; k < list.size(); ++k) {
                    const int dx = int(list[k].x) - int(x), dy = int(list[k].y) - int(y);
                    CHECK(std::abs(dx) <= reach);
                    CHECK(std::abs(dy) <= reach);
                    CHECK(dx % cfg.dilation == 0);
                    CHECK(dy % cfg.dilation == 0);
                    CHECK(list[k].distance < 0.2);
                    CHECK(seen.insert({dx, dy}).second);
                    if (k > 0) CHECK(list[k - 1].distance <= list[k].distance);
                }
            }
    }
}

TEST_CASE("smaller K gives a prefix of the larger list") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 10; ++trial) {
        const Tube tube = oracle::random_tube(rng, 2, 12, 12, 1, trial % 2 == 0);
        PatchConfig big;
        big.radius = 2;
        big.dilation = 1;
        big.distance_threshold = 0.3;
        big.max_matches = 5;
        const MatchSet full = find_matches(tube.frames[0], tube.frames[1], big);
        for (int k = 1; k < 5; ++k) {
            PatchConfig small = big;
            small.max_matches = k;
            const MatchSet part = find_matches(tube.frames[0], tube.frames[1], small);
            for (Index p = 0; p < 144; ++p) {
                const auto a = part.matches(p), b = full.matches(p);
                REQUIRE(a.size() == std::min<std::size_t>(std::size_t(k), b.size()));
                for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
            }
        }
    }
}

TEST_CASE("raising the threshold only adds matches") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 10; ++trial) {
        const Tube tube = oracle::random_tube(rng, 2, 12, 12);
        PatchConfig cfg;
        cfg.radius = 2;
        cfg.dilation = 1;
        cfg.max_matches = 25;
        cfg.distance_threshold = 0.05;
        const MatchSet lo = find_matches(tube.frames[0], tube.frames[1], cfg);
        cfg.distance_threshold = 0.25;
        const MatchSet hi = find_matches(tube.frames[0], tube.frames[1], cfg);
        for (Index p = 0; p < 144; ++p) {
            std::vector<Match> expect;
            for (const auto& m : hi.matches(p))
                if (m.distance < 0.05) expect.push_back(m);
            const auto got = lo.matches(p);
            REQUIRE(got.size() == expect.size());
            for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expect[i]);
        }
    }
}

TEST_CASE("match set storage") {
    MatchSet set(2, 3, 4, 5, 3);
    CHECK(set.total_matches() == 0);
    const Match ms[] = {{1, 2, 0.1}, {0, 0, 0.2}};
    set.assign(7, ms);
    CHECK(set.count(7) == 2);
    CHECK(set.total_matches() == 2);
    CHECK(set.matches(1, 2)[1] == ms[1]);
    const Match too_many[] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    CHECK_THROWS(set.assign(0, too_many));
    CHECK(set.storage_bytes() > 0);
}

TEST_CASE("invalid patch configs") {
    const Frame f = gradient_frame(4, 4);
    PatchConfig cfg;
    cfg.patch_size = 2;
    CHECK_THROWS_AS(find_matches(f, f, cfg), ValidationError);
    cfg = {};
    cfg.max_matches = 0;
    CHECK_THROWS_AS(find_matches(f, f, cfg), ValidationError);
    cfg = {};
    cfg.dilation = 0;
    CHECK_THROWS_AS(find_matches(f, f, cfg), ValidationError);
    cfg = {};
    cfg.distance_threshold = -0.1;
    CHECK_THROWS_AS(find_matches(f, f, cfg), ValidationError);
    CHECK_THROWS(find_matches(f, gradient_frame(4, 5), PatchConfig{}));
}

TEST_CASE("connection schemes") {
    CHECK_THROWS_AS(build_tube_connections(1, ConnectionScheme::Cyclic), ValidationError);
    for (Index t = 2; t <= 10; ++t) {
        const auto cyc = build_tube_connections(t, ConnectionScheme::Cyclic);
        const auto seq = build_tube_connections(t, ConnectionScheme::Sequential);
        const auto dense = build_tube_connections(t, ConnectionScheme::Dense);
        CHECK(Index(cyc.size()) == t);
        CHECK(Index(seq.size()) == t - 1);
        CHECK(Index(dense.size()) == t * (t - 1) / 2);
        for (Index k = 0; k < t; ++k) CHECK(cyc[std::size_t(k)] == FramePair{k, (k + 1) % t});
        for (const auto& [a, b] : dense) CHECK(a < b);
        std::set<FramePair> unique(dense.begin(), dense.end());
        CHECK(unique.size() == dense.size());
    }
    CHECK(parse_scheme("dense") == ConnectionScheme::Dense);
    CHECK(parse_metric("ncc") == PatchMetric::NCC);
    CHECK_THROWS_AS(parse_metric("cosine"), ValidationError);
}

TEST_CASE("correspondence accuracy") {
    SyntheticSpec spec;
    spec.height = 32;
    spec.width = 32;
    ShapeSpec a;
    a.kind = ShapeKind::Rectangle;
    a.position = {4, 4};
    a.size = {10, 8};
    a.color = {220, 40, 40};
    ShapeSpec b;
    b.kind = ShapeKind::Disk;
    b.position = {22, 22};
    b.radius = 5;
    b.color = {40, 40, 220};
    spec.instances = {a, b};

    SUBCASE("static scene is perfectly consistent") {
        const Tube tube = generate_synthetic_tube(spec);
        const auto sets = match_tube(tube, PatchConfig{}, ConnectionScheme::Cyclic);
        const auto acc = correspondence_accuracy(sets, *tube.gt_labels);
        CHECK(acc.mean == 1.0);
        CHECK(acc.per_pair.size() == 5);
    }
    SUBCASE("rigid translation stays consistent") {
        spec.instances[0].velocity = {1, 1};
        spec.instances[1].velocity = {-1, 0};
        const Tube tube = generate_synthetic_tube(spec);
        const auto sets = match_tube(tube, PatchConfig{}, ConnectionScheme::Dense);
        CHECK(correspondence_accuracy(sets, *tube.gt_labels).mean >= 0.95);
    }
    SUBCASE("labels that never agree score zero") {
        const Tube tube = generate_synthetic_tube(spec);
        const auto sets = match_tube(tube, PatchConfig{}, ConnectionScheme::Sequential);
        std::vector<LabelMap> labels;
        for (Index t = 0; t < 5; ++t) labels.push_back(LabelMap::Constant(32, 32, std::uint8_t(t)));
        const auto acc = correspondence_accuracy(sets, labels);
        CHECK(acc.mean == 0.0);
    }
    SUBCASE("pairs without matches are skipped") {
        const Tube tube = generate_synthetic_tube(spec);
        PatchConfig none;
        none.distance_threshold = 0;
        const auto sets = match_tube(tube, none, ConnectionScheme::Cyclic);
        const auto acc = correspondence_accuracy(sets, *tube.gt_labels);
        CHECK(std::isnan(acc.per_pair[0]));
        CHECK(acc.mean == 1.0);
    }
}
