#include "srm/neural.hpp"

#include <cmath>

#include "srm/errors.hpp"

namespace srm {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Mlp::Mlp(std::vector<std::size_t> dims, Rng& rng) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw InternalError("Mlp: need at least input and output dims");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += dims_[l + 1] * dims_[l] + dims_[l + 1];
  }
  params_ = Vector::Zero(static_cast<Eigen::Index>(total));
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    std::uniform_real_distribution<double> unif(-bound, bound);
    const std::size_t count = dims_[l + 1] * dims_[l];
    for (std::size_t k = 0; k < count; ++k) params_[static_cast<Eigen::Index>(offsets_[l] + k)] = unif(rng);
  }
}

Matrix Mlp::forward(const Matrix& x, Cache* cache) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim()) {
    throw InternalError("Mlp::forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                        std::to_string(input_dim()));
  }
  if (cache) cache->inputs.clear();
  Matrix a = x;
  const std::size_t layers = dims_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<Eigen::Index>(dims_[l]);
    const auto out = static_cast<Eigen::Index>(dims_[l + 1]);
    Eigen::Map<const RowMajor> w(params_.data() + offsets_[l], out, in);
    Eigen::Map<const Vector> b(params_.data() + offsets_[l] + out * in, out);
    Matrix z = w * a;
    z.colwise() += b;
    if (cache) cache->inputs.push_back(std::move(a));
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

void Mlp::backward(const Cache& cache, const Matrix& grad_output, Vector* grad_params,
                   Matrix* grad_input) const {
  const std::size_t layers = dims_.size() - 1;
  if (cache.inputs.size() != layers) throw InternalError("Mlp::backward: cache does not match network");
  if (grad_params && grad_params->size() != params_.size()) {
    throw InternalError("Mlp::backward: gradient buffer size mismatch");
  }
  Matrix g = grad_output;
  for (std::size_t l = layers; l-- > 0;) {
    const auto in = static_cast<Eigen::Index>(dims_[l]);
    const auto out = static_cast<Eigen::Index>(dims_[l + 1]);
    const Matrix& a = cache.inputs[l];
    if (grad_params) {
      Eigen::Map<RowMajor> gw(grad_params->data() + offsets_[l], out, in);
      Eigen::Map<Vector> gb(grad_params->data() + offsets_[l] + out * in, out);
      gw.noalias() += g * a.transpose();
      gb += g.rowwise().sum();
    }
    if (l == 0 && !grad_input) break;
    Eigen::Map<const RowMajor> w(params_.data() + offsets_[l], out, in);
    Matrix prev = w.transpose() * g;
    if (l > 0) prev = prev.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
    g = std::move(prev);
  }
  if (grad_input) *grad_input = std::move(g);
}

void adam_step(Vector& params, const Vector& grads, AdamState& state, double lr) {
  if (grads.size() != params.size()) throw InternalError("adam_step: gradient size mismatch");
  if (state.m.size() == 0) {
    state.m = Vector::Zero(params.size());
    state.v = Vector::Zero(params.size());
  }
  if (state.m.size() != params.size()) throw InternalError("adam_step: optimizer state size mismatch");
  ++state.t;
  state.m = kAdamBeta1 * state.m + (1.0 - kAdamBeta1) * grads;
  state.v = kAdamBeta2 * state.v + (1.0 - kAdamBeta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + kAdamEps);
}

void polyak_update(Vector& target, const Vector& online, double nu) {
  if (target.size() != online.size()) throw InternalError("polyak_update: size mismatch");
  target = nu * online + (1.0 - nu) * target;
}

}  // namespace srm
