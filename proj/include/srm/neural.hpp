#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "srm/environments.hpp"

namespace srm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Fully connected network with ReLU hidden layers and a linear output layer.
///
/// Parameters live in one flat vector: for each layer the weight matrix
/// (out x in, row-major) followed by the bias. Batches are column-major,
/// one sample per column.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> inputs;  // input to each layer (post-activation of the previous one)
  };

  Mlp() = default;
  /// dims = {input, hidden..., output}. Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0.
  Mlp(std::vector<std::size_t> dims, Rng& rng);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;

  /// Backpropagates d loss / d output. Accumulates parameter gradients into
  /// `grad_params` when non-null and writes d loss / d input into `grad_input` when non-null.
  void backward(const Cache& cache, const Matrix& grad_output, Vector* grad_params,
                Matrix* grad_input = nullptr) const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;  // start of each layer's weights
  Vector params_;
};

struct AdamState {
  Vector m;
  Vector v;
  long long t = 0;
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

/// Bias-corrected Adam step (minimization). Throws InternalError on shape mismatch.
void adam_step(Vector& params, const Vector& grads, AdamState& state, double lr);

/// target <- nu * online + (1 - nu) * target.
void polyak_update(Vector& target, const Vector& online, double nu);

}  // namespace srm
