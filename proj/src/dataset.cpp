#include "dlab/dataset.hpp"

#include <algorithm>
#include <set>

#include "dlab/errors.hpp"

namespace dlab {

std::size_t FactorSpec::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i].name == name) return i;
  }
  throw ConfigError("unknown factor \"" + std::string(name) + "\"");
}

std::uint64_t FactorSpec::grid_size() const {
  std::uint64_t n = 1;
  for (const auto& f : factors) n *= f.values.size();
  return n;
}

void FactorSpec::validate() const {
  std::set<std::string> names;
  for (const auto& f : factors) {
    if (f.name.empty()) throw ConfigError("factor with empty name");
    if (!names.insert(f.name).second) throw ConfigError("duplicate factor \"" + f.name + "\"");
    if (f.values.empty()) throw ConfigError("factor \"" + f.name + "\" has no values");
  }
}

ImageDataset::ImageDataset(int width, int height, FactorSpec spec)
    : width_(width), height_(height), spec_(std::move(spec)) {
  if (width <= 0 || height <= 0) throw ConfigError("dataset dimensions must be positive");
  spec_.validate();
}

void ImageDataset::add_image(const Image& image, const std::vector<std::uint32_t>& label) {
  if (image.width != width_ || image.height != height_) {
    throw ConfigError("image size does not match dataset");
  }
  if (label.size() != spec_.count()) throw ConfigError("label arity does not match factor spec");
  for (std::size_t k = 0; k < label.size(); ++k) {
    if (label[k] >= spec_.factors[k].values.size()) {
      throw ConfigError("label index out of range for factor \"" + spec_.factors[k].name + "\"");
    }
  }
  pixels_.insert(pixels_.end(), image.pixels.begin(), image.pixels.end());
  labels_.insert(labels_.end(), label.begin(), label.end());
  ++count_;
  lookup_.clear();
}

Image ImageDataset::image(std::size_t i) const {
  Image im{width_, height_, {}};
  const std::uint8_t* p = image_data(i);
  im.pixels.assign(p, p + image_size());
  return im;
}

std::vector<std::uint32_t> ImageDataset::label(std::size_t i) const {
  const std::uint32_t* l = label_data(i);
  return std::vector<std::uint32_t>(l, l + spec_.count());
}

std::size_t ImageDataset::find(const std::vector<std::uint32_t>& label) const {
  if (lookup_.empty()) {
    for (std::size_t i = 0; i < count_; ++i) lookup_.emplace(this->label(i), i);
  }
  auto it = lookup_.find(label);
  if (it == lookup_.end()) throw ConfigError("no image with the requested label");
  return it->second;
}

void ImageDataset::validate() const {
  spec_.validate();
  if (spec_.factors.empty()) throw ConfigError("dataset has no factors");
  for (std::uint8_t p : pixels_) {
    if (p > 1) throw ConfigError("non-binary pixel value");
  }
  for (std::size_t i = 0; i < count_; ++i) {
    const std::uint32_t* l = label_data(i);
    for (std::size_t k = 0; k < spec_.count(); ++k) {
      if (l[k] >= spec_.factors[k].values.size()) throw ConfigError("label index out of range");
    }
  }
}

ActionSequence extract_action(const ImageDataset& dataset, std::string_view varying,
                              const std::map<std::string, std::uint32_t>& fixed) {
  const FactorSpec& spec = dataset.spec();
  std::size_t vi = spec.index_of(varying);

  std::vector<std::uint32_t> label(spec.count(), 0);
  for (std::size_t k = 0; k < spec.count(); ++k) {
    if (k == vi) continue;
    auto it = fixed.find(spec.factors[k].name);
    if (it == fixed.end()) {
      throw ConfigError("extract_action: missing fixed index for factor \"" +
                        spec.factors[k].name + "\"");
    }
    if (it->second >= spec.factors[k].values.size()) {
      throw ConfigError("extract_action: fixed index out of range for factor \"" +
                        spec.factors[k].name + "\"");
    }
    label[k] = it->second;
  }
  for (const auto& [name, idx] : fixed) {
    std::size_t k = spec.index_of(name);  // throws on unknown names
    if (k == vi) throw ConfigError("extract_action: varying factor listed in fixed set");
  }

  ActionSequence seq;
  seq.width = dataset.width();
  seq.height = dataset.height();
  seq.varying_factor = std::string(varying);
  for (const auto& [name, idx] : fixed) seq.fixed_labels.emplace(name, idx);
  seq.parameter_values = spec.factors[vi].values;
  seq.frames.reserve(seq.parameter_values.size());
  for (std::uint32_t v = 0; v < seq.parameter_values.size(); ++v) {
    label[vi] = v;
    seq.frames.push_back(dataset.image(dataset.find(label)));
  }
  return seq;
}

ImageDataset sequence_to_dataset(const ActionSequence& seq) {
  FactorSpec spec;
  spec.factors.push_back({seq.varying_factor, seq.parameter_values});
  ImageDataset out(seq.width, seq.height, spec);
  for (std::uint32_t i = 0; i < seq.frames.size(); ++i) {
    out.add_image(seq.frames[i], {i});
  }
  return out;
}

}  // namespace dlab
