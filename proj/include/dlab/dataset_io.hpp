#pragma once

#include <filesystem>

#include "dlab/dataset.hpp"

namespace dlab {

// DSEQ container, version 1, little-endian:
//   magic "DSEQ", version u16, width u16, height u16, factor count u8,
//   per factor: name length u8 + UTF-8 name, value count u32, values f64,
//   image count u64, labels u32 (image-major, factor-minor), pixels u8.
void write_dataset(const std::filesystem::path& path, const ImageDataset& dataset);
ImageDataset read_dataset(const std::filesystem::path& path);

}  // namespace dlab
