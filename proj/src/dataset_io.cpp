#include "dlab/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "dlab/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "DSEQ i/o assumes a little-endian host");

namespace dlab {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'E', 'Q'};
constexpr std::uint16_t kVersion = 1;

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T read(const char* what) {
    T value;
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw FormatError(std::string("truncated file while reading ") + what, offset_);
    offset_ += sizeof(T);
    return value;
  }

  void read_bytes(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!in_) throw FormatError(std::string("truncated file while reading ") + what, offset_);
    offset_ += n;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const ImageDataset& dataset) {
  dataset.validate();
  if (dataset.spec().factors.empty()) {
    throw ConfigError("refusing to write a dataset without factors");
  }
  if (dataset.width() > std::numeric_limits<std::uint16_t>::max() ||
      dataset.height() > std::numeric_limits<std::uint16_t>::max()) {
    throw ConfigError("dataset dimensions exceed the container limit");
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open \"" + path.string() + "\" for writing");

  out.write(kMagic, 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(dataset.width()));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(dataset.height()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dataset.spec().count()));
  for (const auto& f : dataset.spec().factors) {
    if (f.name.size() > 255) throw ConfigError("factor name longer than 255 bytes");
    put<std::uint8_t>(out, static_cast<std::uint8_t>(f.name.size()));
    out.write(f.name.data(), static_cast<std::streamsize>(f.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.values.size()));
    for (double v : f.values) put<double>(out, v);
  }
  put<std::uint64_t>(out, dataset.count());
  out.write(reinterpret_cast<const char*>(dataset.labels().data()),
            static_cast<std::streamsize>(dataset.labels().size() * sizeof(std::uint32_t)));
  out.write(reinterpret_cast<const char*>(dataset.pixels().data()),
            static_cast<std::streamsize>(dataset.pixels().size()));
  out.flush();
  if (!out) throw ConfigError("write failed for \"" + path.string() + "\"");
}

ImageDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open \"" + path.string() + "\" for reading");
  Reader r(in);

  char magic[4];
  r.read_bytes(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic, expected \"DSEQ\"", 0);
  auto version = r.read<std::uint16_t>("version");
  if (version != kVersion) {
    throw FormatError("unsupported version " + std::to_string(version), 4);
  }
  auto width = r.read<std::uint16_t>("width");
  auto height = r.read<std::uint16_t>("height");
  if (width == 0 || height == 0) throw FormatError("zero image dimension", 6);
  auto factor_count = r.read<std::uint8_t>("factor count");
  if (factor_count == 0) throw FormatError("dataset with zero factors", 10);

  FactorSpec spec;
  for (int k = 0; k < factor_count; ++k) {
    auto name_len = r.read<std::uint8_t>("factor name length");
    std::string name(name_len, '\0');
    r.read_bytes(name.data(), name_len, "factor name");
    auto value_count = r.read<std::uint32_t>("factor value count");
    if (value_count == 0) {
      throw FormatError("factor \"" + name + "\" with zero values", r.offset() - 4);
    }
    std::vector<double> values(value_count);
    r.read_bytes(values.data(), value_count * sizeof(double), "factor values");
    spec.factors.push_back({std::move(name), std::move(values)});
  }

  auto image_count = r.read<std::uint64_t>("image count");
  std::size_t image_size = static_cast<std::size_t>(width) * height;

  ImageDataset dataset(width, height, spec);
  std::vector<std::uint32_t> label(factor_count);
  std::vector<std::uint32_t> all_labels(image_count * factor_count);
  r.read_bytes(all_labels.data(), all_labels.size() * sizeof(std::uint32_t), "labels");
  std::vector<std::uint8_t> pixels(image_count * image_size);
  r.read_bytes(pixels.data(), pixels.size(), "pixels");

  Image im{width, height, {}};
  for (std::uint64_t i = 0; i < image_count; ++i) {
    im.pixels.assign(pixels.begin() + static_cast<std::ptrdiff_t>(i * image_size),
                     pixels.begin() + static_cast<std::ptrdiff_t>((i + 1) * image_size));
    label.assign(all_labels.begin() + static_cast<std::ptrdiff_t>(i * factor_count),
                 all_labels.begin() + static_cast<std::ptrdiff_t>((i + 1) * factor_count));
    dataset.add_image(im, label);
  }
  dataset.validate();
  return dataset;
}

}  // namespace dlab
