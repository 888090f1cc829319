#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dlab/adam.hpp"
#include "dlab/errors.hpp"
#include "dlab/generators.hpp"
#include "dlab/train.hpp"
#include "dlab/vae.hpp"

using namespace dlab;

namespace {

// Independent forward pass: plain scalar loops straight over the blocks.
Eigen::VectorXd naive_mlp_forward(const FeedForwardNet& net, const Eigen::VectorXd& input) {
  std::vector<double> cur(input.data(), input.data() + input.size());
  std::size_t block = 0;
  for (const LayerDesc& l : net.layers()) {
    if (l.kind == LayerDesc::Kind::kDense) {
      const Eigen::MatrixXd& w = net.blocks()[block];
      const Eigen::MatrixXd& b = net.blocks()[block + 1];
      block += 2;
      std::vector<double> next(static_cast<std::size_t>(l.out), 0.0);
      for (int o = 0; o < l.out; ++o) {
        double acc = b(o, 0);
        for (int i = 0; i < l.in; ++i) acc += w(o, i) * cur[i];
        next[o] = acc;
      }
      cur = std::move(next);
    } else if (l.kind == LayerDesc::Kind::kRelu) {
      for (double& v : cur) v = v > 0.0 ? v : 0.0;
    } else if (l.kind == LayerDesc::Kind::kTanh) {
      for (double& v : cur) v = std::tanh(v);
    } else {
      REQUIRE(false);
    }
  }
  return Eigen::Map<Eigen::VectorXd>(cur.data(), static_cast<Eigen::Index>(cur.size()));
}

// Direct convolution, no im2col.
Eigen::VectorXd naive_conv_forward(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                                   const Eigen::VectorXd& x, int in_c, int in_h, int in_w,
                                   int out_c, int k, int stride, int pad) {
  int out_h = (in_h + 2 * pad - k) / stride + 1;
  int out_w = (in_w + 2 * pad - k) / stride + 1;
  Eigen::VectorXd y(out_c * out_h * out_w);
  for (int oc = 0; oc < out_c; ++oc) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = b(oc, 0);
        for (int ic = 0; ic < in_c; ++ic) {
          for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
              int iy = oy * stride - pad + ki;
              int ix = ox * stride - pad + kj;
              if (iy < 0 || iy >= in_h || ix < 0 || ix >= in_w) continue;
              acc += w(oc, (ic * k + ki) * k + kj) * x[(ic * in_h + iy) * in_w + ix];
            }
          }
        }
        y[(oc * out_h + oy) * out_w + ox] = acc;
      }
    }
  }
  return y;
}

ArchitectureConfig tiny_arch(int h, int w, int latent, std::vector<int> widths) {
  ArchitectureConfig a;
  a.input_h = h;
  a.input_w = w;
  a.encoder_widths = widths;
  a.decoder_widths = widths;
  a.latent_dim = latent;
  return a;
}

ImageDataset toy_data() { return gen_a4(0.0, 20.0, 8, 64); }

}  // namespace

TEST_CASE("a zero final encoder layer yields the standard-normal posterior") {
  RandomStream init(1, "init");
  VaeModel m = VaeModel::create(tiny_arch(8, 8, 3, {16}), 0, init);
  m.encoder.blocks()[2].setZero();
  m.encoder.blocks()[3].setZero();
  std::vector<double> image(64, 0.0);
  image[10] = 1.0;
  GaussianPosterior post = m.encode(image);
  CHECK(post.mean.isZero(0.0));
  CHECK(post.log_var.isZero(0.0));
}

TEST_CASE("encode/decode are deterministic and match an independent forward pass to 1e-10") {
  RandomStream init(7, "init");
  VaeModel m = VaeModel::create(tiny_arch(8, 8, 4, {32, 16}), 0, init);
  RandomStream pix(3, "pixels");
  std::vector<double> image(64);
  for (double& v : image) v = pix.uniform() < 0.3 ? 1.0 : 0.0;

  GaussianPosterior a = m.encode(image);
  GaussianPosterior b = m.encode(image);
  CHECK(a.mean == b.mean);
  CHECK(a.log_var == b.log_var);
  for (double v : a.mean) CHECK(std::isfinite(v));

  Eigen::Map<const Eigen::VectorXd> x(image.data(), 64);
  Eigen::VectorXd h = naive_mlp_forward(m.encoder, x);
  CHECK((h.head(4) - a.mean).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((h.tail(4) - a.log_var).lpNorm<Eigen::Infinity>() < 1e-10);

  Eigen::VectorXd z = a.mean;
  Eigen::VectorXd p = m.decode(z);
  Eigen::VectorXd logits = naive_mlp_forward(m.decoder, z);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
    CHECK(std::abs(p[i] - 1.0 / (1.0 + std::exp(-logits[i]))) < 1e-10);
  }
  CHECK(m.decode(z) == m.decode(z));
}

TEST_CASE("zero decoder weights put every pixel at one half") {
  RandomStream init(7, "init");
  VaeModel m = VaeModel::create(tiny_arch(8, 8, 4, {16}), 0, init);
  for (auto& b : m.decoder.blocks()) b.setZero();
  Eigen::VectorXd p = m.decode(Eigen::VectorXd::Ones(4));
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(0.5));
}

TEST_CASE("conv forward matches direct convolution") {
  FeedForwardNet net({LayerDesc::conv(2, 6, 6, 3, 4, 2, 1)});
  RandomStream init(9, "init");
  net.init_params(init);
  RandomStream rx(1, "x");
  Eigen::VectorXd x(2 * 6 * 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rx.normal();
  Eigen::MatrixXd y = net.forward(x, nullptr);
  Eigen::VectorXd ref =
      naive_conv_forward(net.blocks()[0], net.blocks()[1], x, 2, 6, 6, 3, 4, 2, 1);
  CHECK((y.col(0) - ref).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("reparameterize is mu + sigma * noise") {
  GaussianPosterior post{Eigen::Vector3d(1.0, -2.0, 0.5), Eigen::Vector3d(0.0, 1.0, -1.0)};
  CHECK(reparameterize(post, Eigen::Vector3d::Zero()) == post.mean);

  GaussianPosterior std_post{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  Eigen::Vector3d noise(0.3, -0.7, 2.0);
  CHECK(reparameterize(std_post, noise) == noise);

  // Monte Carlo: the sample mean approaches mu at the 3 sigma / sqrt(n) rate.
  RandomStream rng(5, "mc");
  const int n = 100000;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d eps(rng.normal(), rng.normal(), rng.normal());
    sum += reparameterize(post, eps);
  }
  Eigen::Vector3d mean = sum / n;
  for (int j = 0; j < 3; ++j) {
    double sigma = std::exp(0.5 * post.log_var[j]);
    CHECK(std::abs(mean[j] - post.mean[j]) < 3.0 * sigma / std::sqrt(static_cast<double>(n)));
  }
  CHECK_THROWS_AS(reparameterize(post, Eigen::Vector2d::Zero()), ConfigError);
}

TEST_CASE("reconstruction log-likelihood closed forms and oracle") {
  std::vector<double> x = {1, 0, 1, 1, 0, 0};
  Eigen::VectorXd p(6);
  for (int i = 0; i < 6; ++i) p[i] = x[i] > 0.5 ? 1.0 - 1e-7 : 1e-7;
  CHECK(recon_log_likelihood(x, p) == doctest::Approx(0.0).epsilon(1e-5));

  Eigen::VectorXd half = Eigen::VectorXd::Constant(6, 0.5);
  CHECK(recon_log_likelihood(x, half) == doctest::Approx(-6.0 * std::log(2.0)));

  RandomStream rng(2, "ll");
  Eigen::VectorXd q(6);
  std::vector<double> xr(6);
  for (int i = 0; i < 6; ++i) {
    q[i] = 0.05 + 0.9 * rng.uniform();
    xr[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  }
  double direct = 0.0;
  for (int i = 0; i < 6; ++i) {
    direct += xr[i] * std::log(q[i]) + (1.0 - xr[i]) * std::log(1.0 - q[i]);
  }
  CHECK(recon_log_likelihood(xr, q) == doctest::Approx(direct).epsilon(1e-9));

  Eigen::VectorXd bad = q;
  bad[0] = 1.0;
  CHECK_THROWS_AS(recon_log_likelihood(xr, bad), ConfigError);
}

TEST_CASE("gaussian KL closed forms") {
  GaussianPosterior std_post{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  auto [per_dim0, total0] = kl_divergence(std_post);
  CHECK(total0 == 0.0);

  GaussianPosterior unit_mean{Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Zero(1)};
  CHECK(kl_divergence(unit_mean).second == doctest::Approx(0.5));

  GaussianPosterior wide{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, std::log(2.0))};
  CHECK(kl_divergence(wide).second == doctest::Approx(0.5 * (2.0 - 1.0 - std::log(2.0))));

  // Non-negativity across random posteriors, zero only at the prior.
  RandomStream rng(8, "kl");
  for (int trial = 0; trial < 200; ++trial) {
    GaussianPosterior p{Eigen::VectorXd::Constant(1, rng.normal()),
                        Eigen::VectorXd::Constant(1, rng.normal())};
    CHECK(kl_divergence(p).second >= 0.0);
  }
}

TEST_CASE("gaussian KL matches Monte Carlo within three standard errors") {
  RandomStream rng(4, "mc-kl");
  for (int trial = 0; trial < 3; ++trial) {
    GaussianPosterior post{Eigen::Vector2d(rng.normal(), rng.normal()),
                           Eigen::Vector2d(0.5 * rng.normal(), 0.5 * rng.normal())};
    double analytic = kl_divergence(post).second;
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double term = 0.0;
      for (int j = 0; j < 2; ++j) {
        double sigma = std::exp(0.5 * post.log_var[j]);
        double z = post.mean[j] + sigma * rng.normal();
        double log_q = -0.5 * std::log(2.0 * M_PI) - 0.5 * post.log_var[j] -
                       0.5 * (z - post.mean[j]) * (z - post.mean[j]) / (sigma * sigma);
        double log_p = -0.5 * std::log(2.0 * M_PI) - 0.5 * z * z;
        term += log_q - log_p;
      }
      sum += term;
      sum2 += term * term;
    }
    double mc = sum / n;
    double se = std::sqrt((sum2 / n - mc * mc) / n);
    CHECK(std::abs(mc - analytic) < 3.0 * se);
  }
}

TEST_CASE("full beta-VAE gradients match central finite differences on a toy input") {
  // 6-pixel input (2x3), tiny widths: every parameter checked.
  ArchitectureConfig arch = tiny_arch(2, 3, 2, {5});
  RandomStream init(12, "init");
  VaeModel model = VaeModel::create(arch, 0, init);

  Eigen::MatrixXd x(6, 2);
  x << 1, 0, 0, 1, 1, 1, 0, 0, 1, 0, 0, 1;
  RandomStream nrng(3, "noise");
  Eigen::MatrixXd noise(2, 2);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = nrng.normal();
  Eigen::MatrixXd labels(0, 2);
  ObjectiveConfig obj;
  obj.kind = ObjectiveKind::kBetaVae;
  obj.beta = 4.0;

  auto loss_at = [&]() {
    return vae_batch_loss(model, x, noise, labels, obj, 0, nullptr, nullptr).loss;
  };
  auto enc_grads = model.encoder.make_grad_buffers();
  auto dec_grads = model.decoder.make_grad_buffers();
  vae_batch_loss(model, x, noise, labels, obj, 0, &enc_grads, &dec_grads);

  const double step = 1e-5;
  auto check_blocks = [&](std::vector<Eigen::MatrixXd>& blocks,
                          const std::vector<Eigen::MatrixXd>& grads) {
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      for (Eigen::Index k = 0; k < blocks[bi].size(); ++k) {
        double saved = blocks[bi].data()[k];
        blocks[bi].data()[k] = saved + step;
        double up = loss_at();
        blocks[bi].data()[k] = saved - step;
        double down = loss_at();
        blocks[bi].data()[k] = saved;
        double fd = (up - down) / (2.0 * step);
        double got = grads[bi].data()[k];
        double denom = std::max({std::abs(fd), std::abs(got), 1e-8});
        REQUIRE(std::abs(fd - got) / denom < 1e-4);
      }
    }
  };
  check_blocks(model.encoder.blocks(), enc_grads);
  check_blocks(model.decoder.blocks(), dec_grads);
}

TEST_CASE("conv4 gradients match finite differences on sampled parameters") {
  ArchitectureConfig arch;
  arch.input_h = 16;
  arch.input_w = 16;
  arch.latent_dim = 2;
  arch.backbone = Backbone::kConv4;
  RandomStream init(21, "init");
  VaeModel model = VaeModel::create(arch, 0, init);

  Eigen::MatrixXd x(256, 1);
  RandomStream prng(5, "pixels");
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = prng.uniform() < 0.3 ? 1.0 : 0.0;
  Eigen::MatrixXd noise(2, 1);
  noise << 0.4, -1.1;
  Eigen::MatrixXd labels(0, 1);
  ObjectiveConfig obj;
  obj.kind = ObjectiveKind::kBetaVae;
  obj.beta = 2.0;

  auto loss_at = [&]() {
    return vae_batch_loss(model, x, noise, labels, obj, 0, nullptr, nullptr).loss;
  };
  auto enc_grads = model.encoder.make_grad_buffers();
  auto dec_grads = model.decoder.make_grad_buffers();
  vae_batch_loss(model, x, noise, labels, obj, 0, &enc_grads, &dec_grads);

  RandomStream pick(77, "pick");
  const double step = 1e-5;
  auto sample_check = [&](std::vector<Eigen::MatrixXd>& blocks,
                          const std::vector<Eigen::MatrixXd>& grads) {
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      int trials = std::min<int>(6, static_cast<int>(blocks[bi].size()));
      for (int t = 0; t < trials; ++t) {
        Eigen::Index k = pick.uniform_index(static_cast<std::uint32_t>(blocks[bi].size()));
        double saved = blocks[bi].data()[k];
        blocks[bi].data()[k] = saved + step;
        double up = loss_at();
        blocks[bi].data()[k] = saved - step;
        double down = loss_at();
        blocks[bi].data()[k] = saved;
        double fd = (up - down) / (2.0 * step);
        double got = grads[bi].data()[k];
        double denom = std::max({std::abs(fd), std::abs(got), 1e-6});
        REQUIRE(std::abs(fd - got) / denom < 1e-4);
      }
    }
  };
  sample_check(model.encoder.blocks(), enc_grads);
  sample_check(model.decoder.blocks(), dec_grads);
}

TEST_CASE("gradients disconnected from the loss are zero") {
  RandomStream init(2, "init");
  VaeModel model = VaeModel::create(tiny_arch(2, 3, 2, {4}), 0, init);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 1);
  NetTrace trace;
  model.encoder.forward(x, &trace);
  auto grads = model.encoder.make_grad_buffers();
  model.encoder.backward(trace, Eigen::MatrixXd::Zero(4, 1), grads);  // constant loss
  for (const auto& g : grads) CHECK(g.isZero(0.0));
}

TEST_CASE("adam: frozen, first step, and a quadratic bowl") {
  AdamConfig cfg;
  std::vector<Eigen::MatrixXd> params{Eigen::MatrixXd::Constant(1, 1, 1.0)};
  std::vector<Eigen::MatrixXd> grads{Eigen::MatrixXd::Constant(1, 1, 1.0)};
  AdamState frozen(params);
  std::vector<std::string> names{"p"};
  frozen.step(params, grads, 0.0, cfg, names);
  CHECK(params[0](0, 0) == 1.0);  // bit-identical under lr = 0

  AdamState state(params);
  state.step(params, grads, 0.01, cfg, names);
  CHECK(params[0](0, 0) == doctest::Approx(1.0 - 0.01).epsilon(1e-6));

  // f(x) = x^2 from x0 = 1 at lr = 0.05 reaches |x| < 0.1 within 100 steps.
  params[0](0, 0) = 1.0;
  AdamState bowl(params);
  for (int i = 0; i < 100; ++i) {
    grads[0](0, 0) = 2.0 * params[0](0, 0);
    bowl.step(params, grads, 0.05, cfg, names);
  }
  CHECK(std::abs(params[0](0, 0)) < 0.1);

  grads[0](0, 0) = std::nan("");
  CHECK_THROWS_AS(state.step(params, grads, 0.01, cfg, names), TrainingError);
}

TEST_CASE("training twice with one seed gives bit-identical traces") {
  ImageDataset data = toy_data();
  ArchitectureConfig arch = tiny_arch(64, 64, 3, {24});
  ObjectiveConfig obj;
  obj.kind = ObjectiveKind::kBetaVae;
  obj.beta = 2.0;
  TrainConfig cfg;
  cfg.steps = 25;
  cfg.batch = 4;
  cfg.lr = 1e-3;

  RandomStream i1(9, "init"), i2(9, "init");
  VaeModel m1 = VaeModel::create(arch, 0, i1);
  VaeModel m2 = VaeModel::create(arch, 0, i2);
  TrainingTrace t1 = train_vae(m1, data, obj, cfg, 9);
  TrainingTrace t2 = train_vae(m2, data, obj, cfg, 9);
  CHECK(t1.loss == t2.loss);
  CHECK(t1.kl_total == t2.kl_total);
  CHECK(t1.final_kl == t2.final_kl);
  for (std::size_t b = 0; b < m1.encoder.blocks().size(); ++b) {
    CHECK(m1.encoder.blocks()[b] == m2.encoder.blocks()[b]);
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  RandomStream init(31, "init");
  VaeModel m = VaeModel::create(tiny_arch(8, 8, 3, {12}), 2, init);
  auto path = std::filesystem::temp_directory_path() / "dlab_test_ckpt.vckp";
  save_vae(path, m);
  VaeModel back = load_vae(path);
  CHECK(back.arch.latent_dim == 3);
  CHECK(back.label_width == 2);
  for (std::size_t b = 0; b < m.encoder.blocks().size(); ++b) {
    CHECK(back.encoder.blocks()[b] == m.encoder.blocks()[b]);
  }
  for (std::size_t b = 0; b < m.decoder.blocks().size(); ++b) {
    CHECK(back.decoder.blocks()[b] == m.decoder.blocks()[b]);
  }
}

TEST_CASE("shape mismatches are rejected") {
  RandomStream init(1, "init");
  VaeModel m = VaeModel::create(tiny_arch(8, 8, 3, {12}), 0, init);
  std::vector<double> wrong(63, 0.0);
  CHECK_THROWS_AS(m.encode(wrong), ConfigError);
  CHECK_THROWS_AS(m.decode(Eigen::VectorXd::Zero(2)), ConfigError);
  CHECK_THROWS_AS(m.decode(Eigen::VectorXd::Zero(3), std::vector<double>{1.0}), ConfigError);
}
