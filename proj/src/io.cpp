#include <png.h>

#include <array>
#include <bit>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "mfvis/config.hpp"
#include "mfvis/io.hpp"

namespace mfvis {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr std::array<char, 16> kMaskMagic = {'M', 'F', 'V', 'I', 'S', 'M', 'S', 'K'};
constexpr std::array<char, 8> kMatchMagic = {'M', 'F', 'V', 'I', 'S', 'M', 'C', 'H'};

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const fs::path& path, const char* mode) {
    File f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw ValidationError("cannot open " + path.string());
    }
    return f;
}

// libpng reports errors by longjmp; the message is kept for the exception
// thrown after setjmp returns.
void png_error_handler(png_structp png, png_const_charp message) {
    auto* out = static_cast<std::string*>(png_get_error_ptr(png));
    *out = message;
    png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

void write_png(const fs::path& path, Index height, Index width, int color_type, int channels,
               const std::uint8_t* data) {
    File f = open_file(path, "wb");
    std::string error;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler, png_warning_handler);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError(path.string() + ": png: " + error);
    }
    {
        png_init_io(png, f.get());
        png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8, color_type,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (Index y = 0; y < height; ++y) {
            png_write_row(png, data + y * width * channels);
        }
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> read_png(const fs::path& path, int want_channels, Index& height,
                                   Index& width) {
    File f = open_file(path, "rb");
    std::string error;
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler, png_warning_handler);
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> data;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": png: " + error);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    const char* problem = nullptr;
    if (depth != 8) {
        problem = "only 8-bit PNG is supported";
    } else if (want_channels == 3 && color != PNG_COLOR_TYPE_RGB) {
        problem = "expected an RGB PNG";
    } else if (want_channels == 1 && color != PNG_COLOR_TYPE_GRAY) {
        problem = "expected a grayscale PNG";
    }
    if (problem) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": " + problem);
    }
    {
        width = Index(png_get_image_width(png, info));
        height = Index(png_get_image_height(png, info));
        data.resize(std::size_t(width * height * want_channels));
        for (Index y = 0; y < height; ++y) {
            png_read_row(png, data.data() + y * width * want_channels, nullptr);
        }
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return data;
}

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    template <typename T>
    void put(T v) {
        bytes(&v, sizeof(T));
    }
    std::vector<std::uint8_t> out;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> data, const char* what) : data_(data), what_(what) {}

    void bytes(void* p, std::size_t n) {
        if (pos_ + n > data_.size()) {
            throw TruncatedPayload(std::string(what_) + " file is truncated");
        }
        std::memcpy(p, data_.data() + pos_, n);
        pos_ += n;
    }
    template <typename T>
    T get() {
        T v;
        bytes(&v, sizeof(T));
        return v;
    }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    std::span<const std::uint8_t> data_;
    const char* what_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

std::string numbered(const char* stem, Index t) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04d.png", stem, int(t));
    return name;
}

Json box_json(const Box& b) { return Json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

}  // namespace

void write_png_rgb(const fs::path& path, const RgbImage& image) {
    write_png(path, image.height, image.width, PNG_COLOR_TYPE_RGB, 3, image.data.data());
}

RgbImage read_png_rgb(const fs::path& path) {
    RgbImage image;
    image.data = read_png(path, 3, image.height, image.width);
    return image;
}

void write_png_gray(const fs::path& path, const LabelMap& image) {
    write_png(path, image.rows(), image.cols(), PNG_COLOR_TYPE_GRAY, 1, image.data());
}

LabelMap read_png_gray(const fs::path& path) {
    Index h = 0, w = 0;
    const auto data = read_png(path, 1, h, w);
    return Eigen::Map<const LabelMap>(data.data(), h, w);
}

void save_tube(const fs::path& dir, const Tube& tube) {
    tube.validate();
    fs::create_directories(dir);
    Json boxes = Json::array();
    for (Index t = 0; t < tube.frame_count(); ++t) {
        write_png_rgb(dir / numbered("frame", t), tube.frames[std::size_t(t)].rgb());
        if (tube.gt_labels) {
            write_png_gray(dir / numbered("labels", t), (*tube.gt_labels)[std::size_t(t)]);
        }
        Json per_frame = Json::array();
        for (const Box& b : tube.gt_boxes[std::size_t(t)]) {
            per_frame.push_back(box_json(b));
        }
        boxes.push_back(per_frame);
    }
    Json meta = {{"T", tube.frame_count()},
                 {"H", tube.height()},
                 {"W", tube.width()},
                 {"instances", tube.instance_count()},
                 {"has_masks", tube.has_masks()},
                 {"boxes", boxes},
                 {"spec", tube.spec ? to_json(*tube.spec) : Json(nullptr)}};
    std::ofstream out(dir / "tube.json", std::ios::trunc);
    out << meta.dump(2) << '\n';
}

Tube load_tube(const fs::path& dir) {
    const fs::path meta_path = dir / "tube.json";
    if (!fs::exists(meta_path)) {
        throw ValidationError("no tube at " + dir.string() + " (missing tube.json)");
    }
    Json meta;
    try {
        std::ifstream in(meta_path);
        meta = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw FormatError("tube.json is not valid JSON: " + std::string(e.what()));
    }
    Tube tube;
    Index frames = 0, h = 0, w = 0, instances = 0;
    bool has_masks = false;
    try {
        frames = meta.at("T").get<Index>();
        h = meta.at("H").get<Index>();
        w = meta.at("W").get<Index>();
        instances = meta.at("instances").get<Index>();
        has_masks = meta.at("has_masks").get<bool>();
        const Json& boxes = meta.at("boxes");
        if (Index(boxes.size()) != frames) {
            throw DimensionMismatch("tube.json lists boxes for " + std::to_string(boxes.size()) +
                                    " frames, expected " + std::to_string(frames));
        }
        for (const auto& per_frame : boxes) {
            std::vector<Box> list;
            for (const auto& b : per_frame) {
                list.push_back({b.at(0).get<double>(), b.at(1).get<double>(),
                                b.at(2).get<double>(), b.at(3).get<double>()});
            }
            if (Index(list.size()) != instances) {
                throw DimensionMismatch("tube.json box count differs from instance count");
            }
            tube.gt_boxes.push_back(std::move(list));
        }
        if (meta.contains("spec") && !meta.at("spec").is_null()) {
            tube.spec = synthetic_spec_from_json(meta.at("spec"));
        }
    } catch (const Json::exception& e) {
        throw FormatError("malformed tube.json: " + std::string(e.what()));
    }
    if (has_masks) {
        tube.gt_labels.emplace();
    }
    for (Index t = 0; t < frames; ++t) {
        RgbImage rgb = read_png_rgb(dir / numbered("frame", t));
        if (rgb.height != h || rgb.width != w) {
            throw DimensionMismatch("frame " + std::to_string(t) + " size differs from tube.json");
        }
        tube.frames.emplace_back(std::move(rgb));
        if (has_masks) {
            LabelMap labels = read_png_gray(dir / numbered("labels", t));
            if (labels.rows() != h || labels.cols() != w) {
                throw DimensionMismatch("label map " + std::to_string(t) +
                                        " size differs from tube.json");
            }
            tube.gt_labels->push_back(std::move(labels));
        }
    }
    tube.validate();
    return tube;
}

std::vector<std::uint8_t> encode_maskfield(const MaskField& field) {
    Writer w;
    w.bytes(kMaskMagic.data(), kMaskMagic.size());
    w.put(std::uint32_t(field.instances()));
    w.put(std::uint32_t(field.frames()));
    w.put(std::uint32_t(field.height()));
    w.put(std::uint32_t(field.width()));
    for (Index k = 0; k < field.size(); ++k) {
        w.put(float(field.values()(k)));
    }
    return std::move(w.out);
}

MaskField decode_maskfield(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "mask field");
    std::array<char, 16> magic{};
    r.bytes(magic.data(), magic.size());
    if (magic != kMaskMagic) {
        throw FormatError("not a mask field file (bad magic)");
    }
    const auto n = r.get<std::uint32_t>();
    const auto t = r.get<std::uint32_t>();
    const auto h = r.get<std::uint32_t>();
    const auto w = r.get<std::uint32_t>();
    const std::uint64_t count = std::uint64_t(n) * t * h * w;
    if (r.remaining() < count * sizeof(float)) {
        throw TruncatedPayload("mask field payload is truncated: expected " +
                               std::to_string(count * sizeof(float)) + " bytes, found " +
                               std::to_string(r.remaining()));
    }
    MaskField field(n, t, h, w);
    for (Index k = 0; k < field.size(); ++k) {
        field.values()(k) = double(r.get<float>());
    }
    if (r.remaining() != 0) {
        throw FormatError("mask field file has trailing bytes");
    }
    return field;
}

void save_maskfield(const fs::path& path, const MaskField& field) {
    write_file(path, encode_maskfield(field));
}

MaskField load_field(const fs::path& path) { return decode_maskfield(read_file(path)); }

MaskField load_maskfield(const fs::path& path) {
    MaskField field = load_field(path);
    if (!((field.values() >= 0.0) && (field.values() <= 1.0)).all()) {
        throw FormatError("mask field has values outside [0, 1]");
    }
    return field;
}

MaskField load_maskfield(const fs::path& path, const Tube& tube) {
    MaskField field = load_maskfield(path);
    check_field_matches(field, tube);
    return field;
}

std::vector<std::uint8_t> encode_matchset(const MatchSet& set) {
    Writer w;
    w.bytes(kMatchMagic.data(), kMatchMagic.size());
    w.put(std::uint32_t(set.source()));
    w.put(std::uint32_t(set.target()));
    w.put(std::uint32_t(set.height()));
    w.put(std::uint32_t(set.width()));
    w.put(std::uint32_t(set.capacity()));
    for (Index p = 0; p < set.height() * set.width(); ++p) {
        w.put(std::uint8_t(set.count(p)));
        for (const Match& m : set.matches(p)) {
            w.put(m.x);
            w.put(m.y);
            w.put(float(m.distance));
        }
    }
    return std::move(w.out);
}

MatchSet decode_matchset(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "match set");
    std::array<char, 8> magic{};
    r.bytes(magic.data(), magic.size());
    if (magic != kMatchMagic) {
        throw FormatError("not a match set file (bad magic)");
    }
    const auto t = r.get<std::uint32_t>();
    const auto u = r.get<std::uint32_t>();
    const auto h = r.get<std::uint32_t>();
    const auto w = r.get<std::uint32_t>();
    const auto k = r.get<std::uint32_t>();
    if (k < 1 || k > 255) {
        throw FormatError("match set capacity out of range");
    }
    MatchSet set(t, u, h, w, int(k));
    std::vector<Match> list;
    for (Index p = 0; p < Index(h) * w; ++p) {
        const auto count = r.get<std::uint8_t>();
        if (count > k) {
            throw FormatError("match count exceeds K");
        }
        list.clear();
        for (int c = 0; c < count; ++c) {
            Match m;
            m.x = r.get<std::uint16_t>();
            m.y = r.get<std::uint16_t>();
            m.distance = double(r.get<float>());
            if (m.x >= w || m.y >= h) {
                throw DimensionMismatch("match position outside the frame");
            }
            list.push_back(m);
        }
        set.assign(p, list);
    }
    if (r.remaining() != 0) {
        throw FormatError("match set file has trailing bytes");
    }
    return set;
}

void save_matchset(const fs::path& path, const MatchSet& set) {
    write_file(path, encode_matchset(set));
}

MatchSet load_matchset(const fs::path& path) { return decode_matchset(read_file(path)); }

}  // namespace mfvis
