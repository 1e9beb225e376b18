#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>

#include "mfvis/config.hpp"
#include "mfvis/correspondence.hpp"
#include "mfvis/io.hpp"
#include "mfvis/losses.hpp"
#include "mfvis/matching_cost.hpp"
#include "mfvis/synthetic.hpp"
#include "mfvis/trainer.hpp"

namespace mfvis::cli {

namespace {

/// Flags shared by every subcommand; set values override the config file.
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> patch_size, radius, k, dilation, steps;
    std::optional<double> threshold, lambda_pair, lambda_temp, lr;
    std::optional<std::string> metric, scheme;
    bool disable_pair = false;
    bool disable_temp = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--seed", o.seed, "Seed override");
    cmd->add_option("--out", o.out, "Output path");
    cmd->add_option("--patch-size", o.patch_size, "Patch size N (odd)");
    cmd->add_option("--radius", o.radius, "Search radius R in grid steps");
    cmd->add_option("--k", o.k, "Maximum matches K");
    cmd->add_option("--threshold", o.threshold, "Patch distance threshold D");
    cmd->add_option("--dilation", o.dilation, "Search grid stride in pixels");
    cmd->add_option("--metric", o.metric, "Patch metric: l2, l1, ncc");
    cmd->add_option("--scheme", o.scheme, "Tube connections: dense, sequential, cyclic");
    cmd->add_option("--lambda-pair", o.lambda_pair, "Pairwise loss weight");
    cmd->add_option("--lambda-temp", o.lambda_temp, "Temporal loss weight");
    cmd->add_option("--steps", o.steps, "Training steps");
    cmd->add_option("--lr", o.lr, "Learning rate");
    cmd->add_flag("--disable-pair", o.disable_pair, "Drop the pairwise term");
    cmd->add_flag("--disable-temp", o.disable_temp, "Drop the temporal term");
}

RunConfig resolve(const Overrides& o) {
    RunConfig config = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    TrainConfig& t = config.train;
    if (o.seed) {
        t.seed = *o.seed;
        if (config.synthetic) config.synthetic->seed = *o.seed;
    }
    if (o.patch_size) t.patch.patch_size = *o.patch_size;
    if (o.radius) t.patch.radius = *o.radius;
    if (o.k) t.patch.max_matches = *o.k;
    if (o.threshold) t.patch.distance_threshold = *o.threshold;
    if (o.dilation) t.patch.dilation = *o.dilation;
    if (o.metric) t.patch.metric = parse_metric(*o.metric);
    if (o.scheme) t.scheme = parse_scheme(*o.scheme);
    if (o.lambda_pair) t.weights.lambda_pair = *o.lambda_pair;
    if (o.lambda_temp) t.weights.lambda_temp = *o.lambda_temp;
    if (o.steps) t.steps = *o.steps;
    if (o.lr) t.learning_rate = *o.lr;
    t.disable_pair = t.disable_pair || o.disable_pair;
    t.disable_temp = t.disable_temp || o.disable_temp;
    t.patch.validate();
    t.weights.validate();
    t.pairwise.validate();
    return config;
}

fs::path require_out(const Overrides& o, const char* what) {
    if (o.out.empty()) {
        throw ValidationError(std::string("--out is required for ") + what);
    }
    return o.out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw ValidationError("cannot write " + path.string());
    }
    f << text;
}

std::string pair_name(const MatchSet& set) {
    char name[64];
    std::snprintf(name, sizeof(name), "match_%02d_%02d.bin", int(set.source()), int(set.target()));
    return name;
}

Rgb palette(std::size_t i) {
    static const Rgb colors[] = {{230, 25, 75},  {60, 180, 75},  {255, 225, 25}, {0, 130, 200},
                                 {245, 130, 48}, {145, 30, 180}, {70, 240, 240}, {240, 50, 230}};
    return colors[i % std::size(colors)];
}

void dot(RgbImage& image, Index cy, Index cx, Rgb color) {
    for (Index y = cy - 1; y <= cy + 1; ++y) {
        for (Index x = cx - 1; x <= cx + 1; ++x) {
            if (y >= 0 && y < image.height && x >= 0 && x < image.width) {
                image.set(y, x, color);
            }
        }
    }
}

/// Side-by-side frames with 100 sampled source points and their matches.
RgbImage correspondence_overlay(const Tube& tube, const MatchSet& set, std::uint64_t seed) {
    const Index h = tube.height(), w = tube.width();
    RgbImage image(h, 2 * w);
    const RgbImage& a = tube.frames[std::size_t(set.source())].rgb();
    const RgbImage& b = tube.frames[std::size_t(set.target())].rgb();
    for (Index y = 0; y < h; ++y) {
        for (Index x = 0; x < w; ++x) {
            image.set(y, x, a.at(y, x));
            image.set(y, x + w, b.at(y, x));
        }
    }
    std::vector<Index> candidates;
    for (Index p = 0; p < h * w; ++p) {
        if (set.count(p) > 0) candidates.push_back(p);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(std::min<std::size_t>(candidates.size(), 100));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Index p = candidates[i];
        const Rgb color = palette(i);
        dot(image, p / w, p % w, color);
        for (const Match& m : set.matches(p)) {
            dot(image, m.y, Index(m.x) + w, color);
        }
    }
    return image;
}

RgbImage mask_overlay(const Frame& frame, const MaskField& masks, Index t) {
    RgbImage image = frame.rgb();
    for (Index i = 0; i < masks.instances(); ++i) {
        const Rgb color = palette(std::size_t(i));
        const auto plane = masks.plane(i, t);
        for (Index y = 0; y < image.height; ++y) {
            for (Index x = 0; x < image.width; ++x) {
                const double alpha = 0.6 * plane(y, x);
                Rgb px = image.at(y, x);
                for (int c = 0; c < 3; ++c) {
                    px[std::size_t(c)] = std::uint8_t(
                        std::lround((1 - alpha) * px[std::size_t(c)] + alpha * color[std::size_t(c)]));
                }
                image.set(y, x, px);
            }
        }
    }
    return image;
}

Json step_json(const StepRecord& r) {
    return {{"step", r.step}, {"l_temp", r.l_temp}, {"l_proj", r.l_proj}, {"l_pair", r.l_pair},
            {"l_seg", r.l_seg}};
}

int cmd_gen(const Overrides& o, std::ostream& out) {
    const RunConfig config = resolve(o);
    if (!config.synthetic) {
        throw ValidationError("config has no 'synthetic' section");
    }
    const fs::path dir = require_out(o, "gen");
    const Tube tube = generate_synthetic_tube(*config.synthetic);
    save_tube(dir, tube);
    out << "tube " << dir.string() << ": T=" << tube.frame_count() << " H=" << tube.height()
        << " W=" << tube.width() << " instances=" << tube.instance_count() << '\n';
    for (Index t = 0; t < tube.frame_count(); ++t) {
        out << "  frame " << t << ':';
        for (const Box& b : tube.gt_boxes[std::size_t(t)]) {
            out << " [" << b.x_min << ' ' << b.y_min << ' ' << b.x_max << ' ' << b.y_max << ']';
        }
        out << '\n';
    }
    return kExitOk;
}

int cmd_match(const std::string& tube_dir, const Overrides& o, bool overlay, std::ostream& out) {
    const RunConfig config = resolve(o);
    const fs::path dir = require_out(o, "match");
    const Tube tube = load_tube(tube_dir);
    const auto sets = match_tube(tube, config.train.patch, config.train.scheme);
    fs::create_directories(dir);
    Json report = {{"scheme", to_string(config.train.scheme)},
                   {"patch", to_json(config.train.patch)},
                   {"pairs", Json::array()}};
    std::optional<CorrespondenceAccuracy> accuracy;
    if (tube.has_masks()) {
        accuracy = correspondence_accuracy(sets, *tube.gt_labels);
    }
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const MatchSet& set = sets[s];
        save_matchset(dir / pair_name(set), set);
        Json pair = {{"source", set.source()},
                     {"target", set.target()},
                     {"matches", set.total_matches()},
                     {"file", pair_name(set)}};
        if (accuracy) {
            const double a = accuracy->per_pair[s];
            pair["accuracy"] = std::isnan(a) ? Json(nullptr) : Json(a);
        }
        report["pairs"].push_back(pair);
        if (overlay) {
            char name[64];
            std::snprintf(name, sizeof(name), "overlay_%02d_%02d.png", int(set.source()),
                          int(set.target()));
            write_png_rgb(dir / name, correspondence_overlay(tube, set, config.train.seed));
        }
    }
    if (accuracy) {
        report["mean_accuracy"] = accuracy->mean;
    }
    write_text(dir / "matches.json", report.dump(2) + "\n");
    out << "matched " << sets.size() << " frame pairs (" << to_string(config.train.scheme) << ")\n";
    for (const auto& pair : report["pairs"]) {
        out << "  " << pair["source"] << " -> " << pair["target"] << ": " << pair["matches"]
            << " matches";
        if (pair.contains("accuracy") && !pair["accuracy"].is_null()) {
            out << ", accuracy " << pair["accuracy"].get<double>();
        }
        out << '\n';
    }
    if (accuracy) {
        out << "mean accuracy " << accuracy->mean << '\n';
    }
    return kExitOk;
}

int cmd_loss(const std::string& tube_dir, const std::string& mask_path, const std::string& grad_out,
             const Overrides& o, std::ostream& out) {
    const RunConfig config = resolve(o);
    const Tube tube = load_tube(tube_dir);
    const MaskField masks = load_maskfield(mask_path, tube);
    if (masks.instances() != tube.instance_count()) {
        throw DimensionMismatch("mask field has " + std::to_string(masks.instances()) +
                                " instances, tube has " + std::to_string(tube.instance_count()));
    }
    const TrainConfig& t = config.train;
    const LossReport report =
        total_loss(masks, tube, t.patch, t.effective_weights(), t.scheme, t.pairwise);
    Json j = {{"l_temp", report.l_temp},
              {"l_proj", report.l_proj},
              {"l_pair", report.l_pair},
              {"l_spatial", report.l_spatial},
              {"l_seg", report.l_seg}};
    if (!grad_out.empty()) {
        save_maskfield(grad_out, report.grad);
        j["grad_path"] = grad_out;
    }
    const std::string text = j.dump(2) + "\n";
    if (!o.out.empty()) {
        write_text(o.out, text);
    }
    out << text;
    return kExitOk;
}

/// Sequence matching cost of every predicted instance against every
/// ground-truth instance, and the optimal assignment.
int cmd_assign(const std::string& tube_dir, const std::string& mask_path, Index n_points,
               bool exhaustive, const Overrides& o, std::ostream& out) {
    const RunConfig config = resolve(o);
    const Tube tube = load_tube(tube_dir);
    const MaskField masks = load_maskfield(mask_path, tube);
    if (n_points < 1) {
        throw ValidationError("--points must be >= 1");
    }
    const Index h = tube.height(), w = tube.width();
    const SampleMode mode = exhaustive ? SampleMode::Exhaustive : SampleMode::Uniform;
    CostMatrix costs(masks.instances(), tube.instance_count());
    for (Index j = 0; j < tube.instance_count(); ++j) {
        std::vector<Box> boxes;
        for (const auto& frame_boxes : tube.gt_boxes) {
            boxes.push_back(frame_boxes[std::size_t(j)]);
        }
        const BoxMaskSequence gt = BoxMaskSequence::from_boxes(h, w, boxes);
        for (Index i = 0; i < masks.instances(); ++i) {
            costs(i, j) = st_boxmask_cost(mask_to_boxmask(masks, i), gt, n_points,
                                          config.train.seed, mode);
        }
    }
    const std::vector<int> assignment = hungarian_assign(costs);
    Json rows = Json::array();
    for (Index i = 0; i < costs.rows(); ++i) {
        rows.push_back(std::vector<double>(costs.row(i).begin(), costs.row(i).end()));
    }
    Json j = {{"costs", rows},
              {"assignment", assignment},
              {"total_cost", assignment_cost(costs, assignment)}};
    const std::string text = j.dump(2) + "\n";
    if (!o.out.empty()) {
        write_text(o.out, text);
    }
    out << text;
    return kExitOk;
}

int cmd_train(const std::string& tube_dir, const Overrides& o, bool overlay, std::ostream& out) {
    const RunConfig config = resolve(o);
    const fs::path dir = require_out(o, "train");
    const Tube tube = load_tube(tube_dir);
    const TrainResult result = train(tube, config.train);
    fs::create_directories(dir);
    save_maskfield(dir / "masks.bin", result.final_masks);
    std::ostringstream log;
    for (const auto& r : result.log) {
        log << step_json(r).dump() << '\n';
    }
    write_text(dir / "train_log.jsonl", log.str());

    Json summary = {{"steps", config.train.steps},
                    {"initial_l_seg", result.initial_l_seg()},
                    {"final_l_seg", result.final_l_seg()}};
    out << "trained " << config.train.steps << " steps: l_seg " << result.initial_l_seg()
        << " -> " << result.final_l_seg() << '\n';
    if (tube.has_masks()) {
        const IouReport iou = evaluate_iou(result.final_masks, *tube.gt_labels);
        summary["iou_per_instance"] = iou.per_instance;
        summary["mean_iou"] = iou.mean;
        out << "mean IoU " << std::fixed << std::setprecision(4) << iou.mean << '\n';
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    if (overlay) {
        for (Index t = 0; t < tube.frame_count(); ++t) {
            char name[64];
            std::snprintf(name, sizeof(name), "overlay_%04d.png", int(t));
            write_png_rgb(dir / name, mask_overlay(tube.frames[std::size_t(t)], result.final_masks, t));
        }
    }
    return kExitOk;
}

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

int parse_int(const std::string& s, const std::string& axis) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError("value '" + s + "' is not an integer for axis " + axis);
}

int cmd_ablate(const std::string& tube_dir, const std::string& axis, const std::string& values,
               const Overrides& o, std::ostream& out) {
    static const std::vector<std::string> axes = {"K", "R", "N", "metric", "scheme"};
    if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
        throw ValidationError("unknown ablation axis '" + axis + "' (expected K, R, N, metric or scheme)");
    }
    const auto list = split(values);
    if (list.empty()) {
        throw ValidationError("--values is empty");
    }
    const RunConfig base = resolve(o);
    const Tube tube = load_tube(tube_dir);
    if (!tube.has_masks()) {
        throw ValidationError("ablation needs a tube with ground-truth masks");
    }
    std::ostringstream csv;
    csv << "axis,value,connections,mean_iou,l_temp,l_proj,l_pair,l_seg,wall_time_s,match_bytes\n";
    for (const auto& value : list) {
        TrainConfig t = base.train;
        if (axis == "K") t.patch.max_matches = parse_int(value, axis);
        if (axis == "R") t.patch.radius = parse_int(value, axis);
        if (axis == "N") t.patch.patch_size = parse_int(value, axis);
        if (axis == "metric") t.patch.metric = parse_metric(value);
        if (axis == "scheme") t.scheme = parse_scheme(value);
        const auto start = std::chrono::steady_clock::now();
        const TrainResult result = train(tube, t);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const IouReport iou = evaluate_iou(result.final_masks, *tube.gt_labels);
        const StepRecord& last = result.log.back();
        csv << axis << ',' << value << ',' << result.connections << ',' << std::setprecision(6)
            << iou.mean << ',' << last.l_temp << ',' << last.l_proj << ',' << last.l_pair << ','
            << last.l_seg << ',' << seconds << ',' << result.match_storage_bytes << '\n';
    }
    if (!o.out.empty()) {
        write_text(o.out, csv.str());
    }
    out << csv.str();
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mask-free video instance segmentation losses and toy trainer", "mfvis"};
    app.require_subcommand(1);

    Overrides gen_o, match_o, loss_o, train_o, ablate_o, assign_o;
    std::string match_tube_dir, loss_tube_dir, train_tube_dir, ablate_tube_dir;
    std::string mask_path, grad_out, axis, values, assign_tube_dir, assign_mask;
    bool match_overlay = false, train_overlay = false, exhaustive = false;
    Index n_points = 4096;

    auto* gen = app.add_subcommand("gen", "Generate a synthetic tube from a config's synthetic section");
    add_common(gen, gen_o);

    auto* match = app.add_subcommand("match", "Compute temporal patch matches for a tube");
    match->add_option("tube", match_tube_dir, "Tube directory")->required();
    match->add_flag("--overlay", match_overlay, "Write correspondence overlay PNGs");
    add_common(match, match_o);

    auto* loss = app.add_subcommand("loss", "Evaluate the combined loss for a mask field");
    loss->add_option("tube", loss_tube_dir, "Tube directory")->required();
    loss->add_option("--mask", mask_path, "Mask field file")->required();
    loss->add_option("--grad-out", grad_out, "Write the gradient in mask field format");
    add_common(loss, loss_o);

    auto* tr = app.add_subcommand("train", "Optimize per-pixel masks from box supervision");
    tr->add_option("tube", train_tube_dir, "Tube directory")->required();
    tr->add_flag("--overlay", train_overlay, "Write per-frame mask overlay PNGs");
    add_common(tr, train_o);

    auto* ablate = app.add_subcommand("ablate", "Train once per value of one axis; CSV output");
    ablate->add_option("tube", ablate_tube_dir, "Tube directory")->required();
    ablate->add_option("--axis", axis, "K, R, N, metric or scheme")->required();
    ablate->add_option("--values", values, "Comma-separated values")->required();
    add_common(ablate, ablate_o);

    auto* assign = app.add_subcommand("assign", "Match predicted instances to ground-truth boxes");
    assign->add_option("tube", assign_tube_dir, "Tube directory")->required();
    assign->add_option("--mask", assign_mask, "Mask field file")->required();
    assign->add_option("--points", n_points, "Sample points per frame");
    assign->add_flag("--exhaustive", exhaustive, "Use every pixel instead of sampling");
    add_common(assign, assign_o);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen) return cmd_gen(gen_o, out);
        if (*match) return cmd_match(match_tube_dir, match_o, match_overlay, out);
        if (*loss) return cmd_loss(loss_tube_dir, mask_path, grad_out, loss_o, out);
        if (*tr) return cmd_train(train_tube_dir, train_o, train_overlay, out);
        if (*assign) return cmd_assign(assign_tube_dir, assign_mask, n_points, exhaustive, assign_o, out);
        if (*ablate) return cmd_ablate(ablate_tube_dir, axis, values, ablate_o, out);
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace mfvis::cli
