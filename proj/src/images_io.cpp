#include "dlab/images_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dlab/errors.hpp"

namespace dlab {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.width <= 0 || image.height <= 0) throw ConfigError("write_pgm: empty image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open \"" + path.string() + "\" for writing");
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  std::vector<std::uint8_t> bytes(image.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(image.pixels[i]);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write failed for \"" + path.string() + "\"");
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open \"" + path.string() + "\" for reading");
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) {
    throw FormatError("not an 8-bit P5 PGM", 0);
  }
  in.get();  // single whitespace after the header
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw FormatError("truncated PGM payload", static_cast<std::size_t>(in.tellg()));
  GrayImage image{w, h, std::vector<double>(bytes.size())};
  for (std::size_t i = 0; i < bytes.size(); ++i) image.pixels[i] = bytes[i] / 255.0;
  return image;
}

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::ofstream& out, const char type[4], const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> buf;
  put_u32_be(buf, static_cast<std::uint32_t>(data.size()));
  buf.insert(buf.end(), type, type + 4);
  buf.insert(buf.end(), data.begin(), data.end());
  std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0, buf.data() + 4, static_cast<uInt>(buf.size() - 4)));
  put_u32_be(buf, crc);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  if (image.width <= 0 || image.height <= 0) throw ConfigError("write_png: empty image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open \"" + path.string() + "\" for writing");

  static const std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  out.write(reinterpret_cast<const char*>(kSig), 8);

  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  put_chunk(out, "IHDR", ihdr);

  // One filter byte (0 = none) per scanline.
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(image.height) * (image.width + 1));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);
    for (int x = 0; x < image.width; ++x) raw.push_back(to_byte(image.at(x, y)));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw ConfigError("png: zlib compression failed");
  }
  compressed.resize(bound);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", {});
  if (!out) throw ConfigError("write failed for \"" + path.string() + "\"");
}

GrayImage tile_images(const std::vector<GrayImage>& images, int cols, int gap) {
  if (images.empty()) throw ConfigError("tile_images: nothing to tile");
  if (cols < 1) throw ConfigError("tile_images: cols must be >= 1");
  int w = images.front().width, h = images.front().height;
  for (const auto& im : images) {
    if (im.width != w || im.height != h) throw ConfigError("tile_images: mixed tile sizes");
  }
  int n = static_cast<int>(images.size());
  int rows = (n + cols - 1) / cols;
  int out_w = cols * w + (cols - 1) * gap;
  int out_h = rows * h + (rows - 1) * gap;
  GrayImage out{out_w, out_h,
                std::vector<double>(static_cast<std::size_t>(out_w) * out_h, 0.25)};
  for (int i = 0; i < n; ++i) {
    int r = i / cols, c = i % cols;
    int oy = r * (h + gap), ox = c * (w + gap);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.pixels[static_cast<std::size_t>(oy + y) * out_w + ox + x] = images[i].at(x, y);
      }
    }
  }
  return out;
}

}  // namespace dlab
