#pragma once

#include "panogs/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace panogs {

using Bytes = std::vector<std::uint8_t>;

/// 8-bit PNG, gray (1 channel) or RGB (3 channels); values are clamped to [0, 1] and rounded.
Bytes encode_png(const Image& image);
Image decode_png(const Bytes& png);

/// Mask as 8-bit gray PNG with 255 where the mask is set.
Bytes encode_mask_png(const Mask& mask);
Mask decode_mask_png(const Bytes& png);

/// Single-channel PFM: "Pf", little-endian scale -1.0, rows stored bottom-up.
Bytes encode_pfm(const Image& map);
Image decode_pfm(const Bytes& pfm);

std::string base64_encode(const Bytes& bytes);
Bytes base64_decode(const std::string& text);

std::string sha256_hex(const Bytes& bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);

void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Image& map);
Image read_pfm(const std::filesystem::path& path);

}  // namespace panogs
