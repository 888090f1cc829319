#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace dlab {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam moment buffers for one set of parameter blocks. A step with lr == 0
/// leaves both the parameters and the state bit-identical (frozen contract).
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const std::vector<Eigen::MatrixXd>& blocks);

  void step(std::vector<Eigen::MatrixXd>& blocks, const std::vector<Eigen::MatrixXd>& grads,
            double lr, const AdamConfig& cfg, const std::vector<std::string>& block_names);

  long iterations() const { return t_; }

 private:
  std::vector<Eigen::MatrixXd> m_, v_;
  long t_ = 0;
};

/// One Adam update on a single block (the building block of AdamState).
void adam_step(Eigen::MatrixXd& params, const Eigen::MatrixXd& grad, Eigen::MatrixXd& m,
               Eigen::MatrixXd& v, long t, double lr, const AdamConfig& cfg);

}  // namespace dlab
