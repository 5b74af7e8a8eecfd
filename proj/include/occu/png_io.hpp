#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "occu/image.hpp"

namespace occu {

/// Decodes an 8-bit PNG into a 1- or 3-channel image. Alpha is dropped
/// without compositing; palette and sub-byte gray images are expanded.
/// Throws kMalformedFile or kUnsupportedFormat (16-bit samples). A positive
/// max_dimension rejects wider or taller images with kTooLarge before any
/// pixel buffer is allocated.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes, int max_dimension = 0);

/// Lossless PNG encoding (gray or truecolor, 8 bits per sample).
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);

ImageBuffer load_image(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const ImageBuffer& img);
MaskImage load_mask(const std::filesystem::path& path);

}  // namespace occu
