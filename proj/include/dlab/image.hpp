#pragma once

#include <cstdint>
#include <vector>

namespace dlab {

/// Binary image, row-major, pixel values in {0, 1}.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }
};

/// Grayscale image with values in [0, 1] (traversals, afterimages, grids).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline GrayImage to_gray(const Image& im) {
  GrayImage g{im.width, im.height, {}};
  g.pixels.assign(im.pixels.begin(), im.pixels.end());
  return g;
}

}  // namespace dlab
