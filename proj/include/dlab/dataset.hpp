#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dlab/image.hpp"

namespace dlab {

struct Factor {
  std::string name;
  std::vector<double> values;  // strictly ordered for continuous factors
};

/// Ordered list of generative factors; the label of an image is one index
/// per factor, in this order.
struct FactorSpec {
  std::vector<Factor> factors;

  std::size_t count() const { return factors.size(); }
  /// Index of the named factor, or throws ConfigError.
  std::size_t index_of(std::string_view name) const;
  /// Product of factor cardinalities.
  std::uint64_t grid_size() const;
  void validate() const;
};

/// Binary images plus per-image factor labels.
///
/// Pixels are stored image-major, row-major, one byte per pixel in {0, 1};
/// labels image-major, factor-minor. Generated datasets enumerate the full
/// factor grid exactly once, last factor fastest.
class ImageDataset {
 public:
  ImageDataset() = default;
  ImageDataset(int width, int height, FactorSpec spec);

  void add_image(const Image& image, const std::vector<std::uint32_t>& label);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t image_size() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t count() const { return count_; }
  const FactorSpec& spec() const { return spec_; }

  const std::uint8_t* image_data(std::size_t i) const { return pixels_.data() + i * image_size(); }
  Image image(std::size_t i) const;
  const std::uint32_t* label_data(std::size_t i) const {
    return labels_.data() + i * spec_.count();
  }
  std::vector<std::uint32_t> label(std::size_t i) const;

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }

  /// Index of the image carrying the given label, or throws ConfigError.
  std::size_t find(const std::vector<std::uint32_t>& label) const;

  /// Checks the container invariants (valid label indices, binary pixels).
  void validate() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::size_t count_ = 0;
  FactorSpec spec_;
  std::vector<std::uint8_t> pixels_;
  std::vector<std::uint32_t> labels_;
  mutable std::map<std::vector<std::uint32_t>, std::size_t> lookup_;  // built on demand
};

/// Ordered image subset produced by traversing one factor with the others
/// fixed; frame order matches the varying factor's value order.
struct ActionSequence {
  int width = 0;
  int height = 0;
  std::vector<Image> frames;
  std::string varying_factor;
  std::map<std::string, std::uint32_t> fixed_labels;
  std::vector<double> parameter_values;
};

/// Traverse `varying` over its full range with all other factors pinned to
/// the given indices.
ActionSequence extract_action(const ImageDataset& dataset, std::string_view varying,
                              const std::map<std::string, std::uint32_t>& fixed);

/// Package a sequence as a single-factor dataset (frame order preserved).
ImageDataset sequence_to_dataset(const ActionSequence& seq);

}  // namespace dlab
