#include <fstream>
#include <set>
#include <string>

#include "mfvis/config.hpp"

namespace mfvis {

namespace {

// Tracks which keys of an object were read so leftovers can be reported.
class StrictObject {
public:
    StrictObject(const Json& j, std::string section) : j_(j), section_(std::move(section)) {
        if (!j.is_object()) {
            throw ValidationError("section '" + section_ + "' must be a JSON object");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (!has(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const Json::exception& e) {
            throw ValidationError("bad value for '" + section_ + "." + key + "': " + e.what());
        }
    }

    const Json& at(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ValidationError("unknown key '" + key + "' in section '" + section_ + "'");
            }
        }
    }

private:
    const Json& j_;
    std::string section_;
    std::set<std::string> seen_;
};

Rgb rgb_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) {
        throw ValidationError(what + " must be an [r, g, b] array");
    }
    Rgb c{};
    for (std::size_t k = 0; k < 3; ++k) {
        const int v = j[k].get<int>();
        if (v < 0 || v > 255) {
            throw ValidationError(what + " channel out of [0, 255]");
        }
        c[k] = std::uint8_t(v);
    }
    return c;
}

Eigen::Vector2d vec2_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2) {
        throw ValidationError(what + " must be a 2-element array");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

Json to_json(const Eigen::Vector2d& v) { return Json::array({v.x(), v.y()}); }
Json to_json(const Rgb& c) { return Json::array({c[0], c[1], c[2]}); }

std::string_view shape_name(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Rectangle: return "rectangle";
        case ShapeKind::Disk: return "disk";
        case ShapeKind::Polygon: return "polygon";
    }
    return "?";
}

ShapeSpec shape_from_json(const Json& j, const std::string& section) {
    StrictObject obj(j, section);
    ShapeSpec s;
    std::string kind;
    obj.read("shape", kind);
    if (kind == "rectangle") {
        s.kind = ShapeKind::Rectangle;
    } else if (kind == "disk") {
        s.kind = ShapeKind::Disk;
    } else if (kind == "polygon") {
        s.kind = ShapeKind::Polygon;
    } else {
        throw ValidationError(section + ": unknown shape '" + kind + "'");
    }
    if (obj.has("position")) s.position = vec2_from_json(obj.at("position"), section + ".position");
    if (obj.has("size")) s.size = vec2_from_json(obj.at("size"), section + ".size");
    obj.read("radius", s.radius);
    if (obj.has("vertices")) {
        for (const auto& v : obj.at("vertices")) {
            s.vertices.push_back(vec2_from_json(v, section + ".vertices"));
        }
    }
    if (obj.has("velocity")) s.velocity = vec2_from_json(obj.at("velocity"), section + ".velocity");
    if (obj.has("color")) s.color = rgb_from_json(obj.at("color"), section + ".color");
    obj.finish();
    return s;
}

Json to_json(const LossWeights& w) {
    return {{"lambda_pair", w.lambda_pair},
            {"lambda_temp", w.lambda_temp},
            {"sigma_pixel", w.sigma_pixel},
            {"clamp_eps", w.clamp_eps}};
}

Json to_json(const PairwiseConfig& p) {
    return {{"theta", p.theta}, {"dilation", p.dilation}, {"box_only", p.box_only}};
}

}  // namespace

Json to_json(const SyntheticSpec& spec) {
    Json instances = Json::array();
    for (const auto& s : spec.instances) {
        Json shape = {{"shape", shape_name(s.kind)},
                      {"position", to_json(s.position)},
                      {"velocity", to_json(s.velocity)},
                      {"color", to_json(s.color)}};
        switch (s.kind) {
            case ShapeKind::Rectangle: shape["size"] = to_json(s.size); break;
            case ShapeKind::Disk: shape["radius"] = s.radius; break;
            case ShapeKind::Polygon: {
                Json vs = Json::array();
                for (const auto& v : s.vertices) vs.push_back(to_json(v));
                shape["vertices"] = vs;
                break;
            }
        }
        instances.push_back(shape);
    }
    Json j = {{"height", spec.height},
              {"width", spec.width},
              {"frames", spec.frames},
              {"background", to_json(spec.background)},
              {"noise_sigma", spec.noise_sigma},
              {"seed", spec.seed},
              {"instances", instances}};
    if (spec.occluder) {
        const Box& b = spec.occluder->box;
        j["occluder"] = {{"box", {b.x_min, b.y_min, b.x_max, b.y_max}},
                         {"color", to_json(spec.occluder->color)}};
    }
    return j;
}

SyntheticSpec synthetic_spec_from_json(const Json& j) {
    StrictObject obj(j, "synthetic");
    SyntheticSpec spec;
    obj.read("height", spec.height);
    obj.read("width", spec.width);
    obj.read("frames", spec.frames);
    if (obj.has("background")) spec.background = rgb_from_json(obj.at("background"), "background");
    obj.read("noise_sigma", spec.noise_sigma);
    obj.read("seed", spec.seed);
    if (obj.has("instances")) {
        const Json& list = obj.at("instances");
        if (!list.is_array()) {
            throw ValidationError("synthetic.instances must be an array");
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            spec.instances.push_back(
                shape_from_json(list[i], "synthetic.instances[" + std::to_string(i) + "]"));
        }
    }
    if (obj.has("occluder")) {
        StrictObject occ(obj.at("occluder"), "synthetic.occluder");
        OccluderSpec o;
        if (occ.has("box")) {
            const Json& b = occ.at("box");
            if (!b.is_array() || b.size() != 4) {
                throw ValidationError("occluder.box must be [x_min, y_min, x_max, y_max]");
            }
            o.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
        }
        if (occ.has("color")) o.color = rgb_from_json(occ.at("color"), "occluder.color");
        occ.finish();
        spec.occluder = o;
    }
    obj.finish();
    return spec;
}

Json to_json(const PatchConfig& c) {
    return {{"patch_size", c.patch_size},
            {"radius", c.radius},
            {"k", c.max_matches},
            {"threshold", c.distance_threshold},
            {"dilation", c.dilation},
            {"metric", to_string(c.metric)}};
}

PatchConfig patch_config_from_json(const Json& j, PatchConfig c) {
    StrictObject obj(j, "patch");
    obj.read("patch_size", c.patch_size);
    obj.read("radius", c.radius);
    obj.read("k", c.max_matches);
    obj.read("threshold", c.distance_threshold);
    obj.read("dilation", c.dilation);
    std::string metric(to_string(c.metric));
    obj.read("metric", metric);
    c.metric = parse_metric(metric);
    obj.finish();
    return c;
}

Json to_json(const RunConfig& config) {
    const TrainConfig& t = config.train;
    Json j = {{"patch", to_json(t.patch)},
              {"loss", to_json(t.weights)},
              {"pairwise", to_json(t.pairwise)},
              {"scheme", to_string(t.scheme)},
              {"train",
               {{"steps", t.steps},
                {"learning_rate", t.learning_rate},
                {"seed", t.seed},
                {"disable_pair", t.disable_pair},
                {"disable_temp", t.disable_temp}}}};
    if (config.synthetic) {
        j["synthetic"] = to_json(*config.synthetic);
    }
    return j;
}

RunConfig run_config_from_json(const Json& j) {
    StrictObject obj(j, "config");
    RunConfig config;
    TrainConfig& t = config.train;
    if (obj.has("synthetic")) {
        config.synthetic = synthetic_spec_from_json(obj.at("synthetic"));
    }
    if (obj.has("patch")) {
        t.patch = patch_config_from_json(obj.at("patch"), t.patch);
    }
    if (obj.has("loss")) {
        StrictObject loss(obj.at("loss"), "loss");
        loss.read("lambda_pair", t.weights.lambda_pair);
        loss.read("lambda_temp", t.weights.lambda_temp);
        loss.read("sigma_pixel", t.weights.sigma_pixel);
        loss.read("clamp_eps", t.weights.clamp_eps);
        loss.finish();
    }
    if (obj.has("pairwise")) {
        StrictObject pw(obj.at("pairwise"), "pairwise");
        pw.read("theta", t.pairwise.theta);
        pw.read("dilation", t.pairwise.dilation);
        pw.read("box_only", t.pairwise.box_only);
        pw.finish();
    }
    std::string scheme(to_string(t.scheme));
    obj.read("scheme", scheme);
    t.scheme = parse_scheme(scheme);
    if (obj.has("train")) {
        StrictObject tr(obj.at("train"), "train");
        tr.read("steps", t.steps);
        tr.read("learning_rate", t.learning_rate);
        tr.read("seed", t.seed);
        tr.read("disable_pair", t.disable_pair);
        tr.read("disable_temp", t.disable_temp);
        tr.finish();
    }
    obj.finish();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config file " + path.string());
    }
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

}  // namespace mfvis
