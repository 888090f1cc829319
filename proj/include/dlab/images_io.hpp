#pragma once

#include <filesystem>
#include <vector>

#include "dlab/image.hpp"

namespace dlab {

/// 8-bit binary PGM (P5).
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

/// 8-bit grayscale PNG (zlib-compressed).
void write_png(const std::filesystem::path& path, const GrayImage& image);

/// Tile images left-to-right, top-to-bottom into a grid with `cols` columns
/// and a light separator between cells.
GrayImage tile_images(const std::vector<GrayImage>& images, int cols, int gap = 2);

}  // namespace dlab
