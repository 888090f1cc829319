#include "dlab/adam.hpp"

#include <cmath>

#include "dlab/errors.hpp"

namespace dlab {

AdamState::AdamState(const std::vector<Eigen::MatrixXd>& blocks) {
  m_.reserve(blocks.size());
  v_.reserve(blocks.size());
  for (const auto& b : blocks) {
    m_.emplace_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
    v_.emplace_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
  }
}

void adam_step(Eigen::MatrixXd& params, const Eigen::MatrixXd& grad, Eigen::MatrixXd& m,
               Eigen::MatrixXd& v, long t, double lr, const AdamConfig& cfg) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grad.array().square()).matrix();
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  params.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
}

void AdamState::step(std::vector<Eigen::MatrixXd>& blocks,
                     const std::vector<Eigen::MatrixXd>& grads, double lr, const AdamConfig& cfg,
                     const std::vector<std::string>& block_names) {
  if (lr == 0.0) return;  // frozen: no parameter or state change
  if (blocks.size() != m_.size() || grads.size() != m_.size()) {
    throw ConfigError("adam: block/grad layout does not match the optimizer state");
  }
  ++t_;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!grads[i].allFinite()) {
      throw TrainingError("non-finite gradient in block \"" +
                              (i < block_names.size() ? block_names[i] : std::to_string(i)) + "\"",
                          /*phase=*/0, t_);
    }
    adam_step(blocks[i], grads[i], m_[i], v_[i], t_, lr, cfg);
  }
}

}  // namespace dlab
