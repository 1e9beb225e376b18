#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "mfvis/correspondence.hpp"
#include "mfvis/field.hpp"
#include "mfvis/video.hpp"

namespace mfvis {

namespace fs = std::filesystem;

// 8-bit PNG helpers (libpng).
void write_png_rgb(const fs::path& path, const RgbImage& image);
RgbImage read_png_rgb(const fs::path& path);
void write_png_gray(const fs::path& path, const LabelMap& image);
LabelMap read_png_gray(const fs::path& path);

/// Tube directory: frame_%04d.png, labels_%04d.png when masks exist, and
/// tube.json with T, H, W, boxes and the generating spec.
void save_tube(const fs::path& dir, const Tube& tube);
Tube load_tube(const fs::path& dir);

/// Mask field file: 16-byte magic "MFVISMSK" + 8 NUL bytes, u32 instances,
/// T, H, W, then little-endian f32 values in instance, frame, row-major order.
void save_maskfield(const fs::path& path, const MaskField& field);

/// Reads any field in the mask file format without a range check.
MaskField load_field(const fs::path& path);

/// As load_field, and rejects values outside [0, 1].
MaskField load_maskfield(const fs::path& path);

/// Also checks the field against the tube's T, H and W.
MaskField load_maskfield(const fs::path& path, const Tube& tube);

/// Match set file: magic "MFVISMCH", u32 t, t_hat, H, W, K, then per pixel a
/// u8 count followed by (u16 x, u16 y, f32 distance) triples.
void save_matchset(const fs::path& path, const MatchSet& set);
MatchSet load_matchset(const fs::path& path);

std::vector<std::uint8_t> encode_maskfield(const MaskField& field);
MaskField decode_maskfield(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_matchset(const MatchSet& set);
MatchSet decode_matchset(std::span<const std::uint8_t> bytes);

}  // namespace mfvis
