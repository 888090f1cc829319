#include "dlab/vae.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dlab/errors.hpp"

namespace dlab {

void ArchitectureConfig::validate() const {
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (input_h < 1 || input_w < 1) throw ConfigError("input shape must be positive");
  if (backbone == Backbone::kMlp && (encoder_widths.empty() || decoder_widths.empty())) {
    throw ConfigError("mlp tier needs at least one hidden width per side");
  }
  for (int w : encoder_widths) {
    if (w < 1) throw ConfigError("encoder width must be positive");
  }
  for (int w : decoder_widths) {
    if (w < 1) throw ConfigError("decoder width must be positive");
  }
}

Eigen::VectorXd reparameterize(const GaussianPosterior& post, const Eigen::VectorXd& noise) {
  if (noise.size() != post.mean.size()) {
    throw ConfigError("reparameterize: noise length does not match latent dim");
  }
  return post.mean.array() + (0.5 * post.log_var.array()).exp() * noise.array();
}

double recon_log_likelihood(std::span<const double> x, const Eigen::VectorXd& p) {
  if (static_cast<Eigen::Index>(x.size()) != p.size()) {
    throw ConfigError("recon_log_likelihood: shape mismatch");
  }
  double ll = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    double pi = p[i];
    if (!(pi > 0.0 && pi < 1.0)) {
      throw ConfigError("recon_log_likelihood: pixel mean outside (0,1); missing squashing?");
    }
    ll += x[i] * std::log(pi) + (1.0 - x[i]) * std::log(1.0 - pi);
  }
  return ll;
}

std::pair<Eigen::VectorXd, double> kl_divergence(const GaussianPosterior& post) {
  Eigen::ArrayXd mu = post.mean.array();
  Eigen::ArrayXd lv = post.log_var.array();
  Eigen::VectorXd per_dim = (0.5 * (mu.square() + lv.exp() - 1.0 - lv)).matrix();
  return {per_dim, per_dim.sum()};
}

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& logits) {
  return 0.5 * (1.0 + (0.5 * logits).tanh());
}

VaeModel VaeModel::create(const ArchitectureConfig& arch, int label_width, RandomStream& init) {
  arch.validate();
  if (label_width < 0) throw ConfigError("label width must be >= 0");
  VaeModel m;
  m.arch = arch;
  m.label_width = label_width;
  if (arch.backbone == Backbone::kMlp) {
    m.encoder = FeedForwardNet(
        mlp_stack(arch.input_dim(), arch.encoder_widths, 2 * arch.latent_dim, arch.nonlinearity));
    m.decoder = FeedForwardNet(mlp_stack(arch.latent_dim + label_width, arch.decoder_widths,
                                         arch.input_dim(), arch.nonlinearity));
  } else {
    m.encoder = FeedForwardNet(
        conv4_encoder_stack(arch.input_h, arch.input_w, 2 * arch.latent_dim, arch.nonlinearity));
    m.decoder = FeedForwardNet(conv4_decoder_stack(arch.latent_dim + label_width, arch.input_h,
                                                   arch.input_w, arch.nonlinearity));
  }
  m.encoder.init_params(init);
  m.decoder.init_params(init);
  return m;
}

GaussianPosterior VaeModel::encode(std::span<const double> image) const {
  if (static_cast<int>(image.size()) != arch.input_dim()) {
    throw ConfigError("encode: image size does not match the input shape");
  }
  Eigen::Map<const Eigen::VectorXd> x(image.data(), image.size());
  Eigen::MatrixXd h = encoder.forward(x, nullptr);
  int d = arch.latent_dim;
  GaussianPosterior post;
  post.mean = h.col(0).head(d);
  post.log_var = h.col(0).tail(d);
  return post;
}

Eigen::VectorXd VaeModel::decode(const Eigen::VectorXd& z, std::span<const double> labels) const {
  if (z.size() != arch.latent_dim) throw ConfigError("decode: z length does not match latent dim");
  if (static_cast<int>(labels.size()) != label_width) {
    throw ConfigError("decode: label width mismatch (got " + std::to_string(labels.size()) +
                      ", model expects " + std::to_string(label_width) + ")");
  }
  Eigen::VectorXd in(z.size() + label_width);
  in.head(z.size()) = z;
  for (int i = 0; i < label_width; ++i) in[z.size() + i] = labels[i];
  Eigen::MatrixXd logits = decoder.forward(in, nullptr);
  // Clamp so saturated logits still honor the open-interval contract.
  return sigmoid(logits.col(0).array()).max(1e-12).min(1.0 - 1e-12).matrix();
}

// --- checkpoint container ---------------------------------------------------

namespace {

constexpr char kMagic[4] = {'V', 'C', 'K', 'P'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in, std::size_t& off, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError(std::string("truncated checkpoint while reading ") + what, off);
  off += sizeof(T);
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open \"" + path.string() + "\" for writing");
  out.write(kMagic, 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint32_t>(out, ckpt.phase_index);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.model_spec.size()));
  out.write(ckpt.model_spec.data(), static_cast<std::streamsize>(ckpt.model_spec.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.blocks.size()));
  for (std::size_t i = 0; i < ckpt.blocks.size(); ++i) {
    const std::string& name = ckpt.block_names[i];
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.blocks[i].rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.blocks[i].cols()));
    out.write(reinterpret_cast<const char*>(ckpt.blocks[i].data()),
              static_cast<std::streamsize>(sizeof(double) * ckpt.blocks[i].size()));
  }
  out.flush();
  if (!out) throw ConfigError("write failed for \"" + path.string() + "\"");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open \"" + path.string() + "\" for reading");
  std::size_t off = 0;
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad checkpoint magic, expected \"VCKP\"", 0);
  }
  off = 4;
  auto version = take<std::uint16_t>(in, off, "version");
  if (version != kVersion) throw FormatError("unsupported checkpoint version", 4);

  Checkpoint ckpt;
  ckpt.phase_index = take<std::uint32_t>(in, off, "phase index");
  auto spec_len = take<std::uint32_t>(in, off, "spec length");
  ckpt.model_spec.resize(spec_len);
  in.read(ckpt.model_spec.data(), spec_len);
  if (!in) throw FormatError("truncated checkpoint while reading model spec", off);
  off += spec_len;
  auto n_blocks = take<std::uint32_t>(in, off, "block count");
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    auto name_len = take<std::uint16_t>(in, off, "block name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw FormatError("truncated checkpoint while reading block name", off);
    off += name_len;
    auto rows = take<std::uint32_t>(in, off, "block rows");
    auto cols = take<std::uint32_t>(in, off, "block cols");
    Eigen::MatrixXd block(rows, cols);
    in.read(reinterpret_cast<char*>(block.data()),
            static_cast<std::streamsize>(sizeof(double) * block.size()));
    if (!in) throw FormatError("truncated checkpoint while reading block data", off);
    off += sizeof(double) * static_cast<std::size_t>(block.size());
    ckpt.block_names.push_back(std::move(name));
    ckpt.blocks.push_back(std::move(block));
  }
  return ckpt;
}

std::string arch_to_spec(const ArchitectureConfig& arch) {
  std::ostringstream s;
  s << "backbone=" << (arch.backbone == Backbone::kMlp ? "mlp" : "conv4");
  s << ";input=" << arch.input_h << "x" << arch.input_w;
  s << ";latent=" << arch.latent_dim;
  s << ";nl=" << (arch.nonlinearity == Activation::kRelu ? "relu" : "tanh");
  s << ";enc=";
  for (std::size_t i = 0; i < arch.encoder_widths.size(); ++i) {
    s << (i ? "," : "") << arch.encoder_widths[i];
  }
  s << ";dec=";
  for (std::size_t i = 0; i < arch.decoder_widths.size(); ++i) {
    s << (i ? "," : "") << arch.decoder_widths[i];
  }
  return s.str();
}

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

}  // namespace

ArchitectureConfig arch_from_spec(const std::string& text) {
  ArchitectureConfig arch;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ';')) {
    auto eq = field.find('=');
    if (eq == std::string::npos) throw ConfigError("bad model spec field \"" + field + "\"");
    std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "backbone") {
      arch.backbone = value == "conv4" ? Backbone::kConv4 : Backbone::kMlp;
    } else if (key == "input") {
      auto x = value.find('x');
      arch.input_h = std::stoi(value.substr(0, x));
      arch.input_w = std::stoi(value.substr(x + 1));
    } else if (key == "latent") {
      arch.latent_dim = std::stoi(value);
    } else if (key == "nl") {
      arch.nonlinearity = value == "tanh" ? Activation::kTanh : Activation::kRelu;
    } else if (key == "enc") {
      arch.encoder_widths = parse_int_list(value);
    } else if (key == "dec") {
      arch.decoder_widths = parse_int_list(value);
    } else if (key == "labels" || key == "groups") {
      // consumed by the model-level loaders
    } else {
      throw ConfigError("unknown model spec key \"" + key + "\"");
    }
  }
  return arch;
}

void save_vae(const std::filesystem::path& path, const VaeModel& model) {
  Checkpoint ckpt;
  ckpt.model_spec = arch_to_spec(model.arch) + ";labels=" + std::to_string(model.label_width);
  for (std::size_t i = 0; i < model.encoder.blocks().size(); ++i) {
    ckpt.block_names.push_back("enc." + model.encoder.block_names()[i]);
    ckpt.blocks.push_back(model.encoder.blocks()[i]);
  }
  for (std::size_t i = 0; i < model.decoder.blocks().size(); ++i) {
    ckpt.block_names.push_back("dec." + model.decoder.block_names()[i]);
    ckpt.blocks.push_back(model.decoder.blocks()[i]);
  }
  write_checkpoint(path, ckpt);
}

VaeModel load_vae(const std::filesystem::path& path) {
  Checkpoint ckpt = read_checkpoint(path);
  ArchitectureConfig arch = arch_from_spec(ckpt.model_spec);
  int label_width = 0;
  auto pos = ckpt.model_spec.find("labels=");
  if (pos != std::string::npos) {
    label_width = std::stoi(ckpt.model_spec.substr(pos + 7));
  }
  RandomStream dummy(0, "init");
  VaeModel model = VaeModel::create(arch, label_width, dummy);
  std::size_t n_enc = model.encoder.blocks().size();
  if (ckpt.blocks.size() != n_enc + model.decoder.blocks().size()) {
    throw FormatError("checkpoint block count does not match the declared architecture", 0);
  }
  for (std::size_t i = 0; i < ckpt.blocks.size(); ++i) {
    Eigen::MatrixXd& dst =
        i < n_enc ? model.encoder.blocks()[i] : model.decoder.blocks()[i - n_enc];
    if (dst.rows() != ckpt.blocks[i].rows() || dst.cols() != ckpt.blocks[i].cols()) {
      throw FormatError("checkpoint block shape mismatch at \"" + ckpt.block_names[i] + "\"", 0);
    }
    dst = ckpt.blocks[i];
  }
  return model;
}

}  // namespace dlab
