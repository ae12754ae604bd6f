// Finite-difference verification of the analytic gradients used by the
// neural learners. Builds the spec'd network at its random initialization
// (training nothing) and compares against central differences.
#include <algorithm>
#include <cmath>

#include "jamshield/common.hpp"
#include "jamshield/learners.hpp"
#include "jamshield/learners/lstm.hpp"
#include "jamshield/learners/net.hpp"

namespace jamshield {

namespace {

double relative_error(double analytic, double numeric) {
  return std::fabs(analytic - numeric) /
         std::max(1e-8, std::fabs(analytic) + std::fabs(numeric));
}

// Zero-initialized biases leave dead-input samples sitting exactly on the
// ReLU kink (pre-activation 0), where central differences and the subgradient
// legitimately disagree. Nudging every parameter moves the comparison to a
// generic smooth point without favoring either gradient computation. Only the
// dense (ReLU) path needs this.
template <typename Net>
void jitter_params(Net& net, Rng& rng) {
  std::vector<double> params = net.flat_params();
  for (double& p : params) p += rng.uniform(-0.05, 0.05);
  net.set_flat_params(params);
}

template <typename Net, typename LossFn>
double max_relative_error(Net& net, const std::vector<double>& analytic, LossFn&& loss_at,
                          double h) {
  const std::vector<double> base = net.flat_params();
  std::vector<double> perturbed = base;
  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    perturbed[i] = base[i] + h;
    net.set_flat_params(perturbed);
    const double up = loss_at();
    perturbed[i] = base[i] - h;
    net.set_flat_params(perturbed);
    const double down = loss_at();
    perturbed[i] = base[i];
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  net.set_flat_params(base);
  return worst;
}

}  // namespace

double gradient_check(const LearnerSpec& spec, const Matrix& x, const std::vector<int>& y,
                      double h) {
  if (x.rows() == 0 || x.rows() != y.size()) {
    throw InputError("gradient check: empty or misaligned data");
  }
  if (!(h > 0.0)) throw ContractError("gradient check: step must be positive");

  if (spec.algo == Algo::Mlp || spec.algo == Algo::Comp1 || spec.algo == Algo::Comp3) {
    std::vector<std::size_t> sizes;
    sizes.push_back(x.cols());
    for (int hsize : spec.net.hidden) sizes.push_back(static_cast<std::size_t>(hsize));
    sizes.push_back(2);
    DenseNet net;
    Rng init_rng(derive_seed(spec.seed, 0));
    net.init(sizes, init_rng);
    jitter_params(net, init_rng);
    std::vector<double> grad;
    net.loss_and_grad(x, y, grad, /*dropout=*/0.0, nullptr);
    return max_relative_error(net, grad, [&net, &x, &y]() { return net.loss(x, y); }, h);
  }

  if (spec.algo == Algo::Lstm) {
    const std::size_t window = static_cast<std::size_t>(std::max(spec.lstm.window, 1));
    std::vector<Matrix> windows;
    windows.reserve(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      windows.push_back(window_ending_at(x, i, window));
    }
    LstmNet net;
    Rng init_rng(derive_seed(spec.seed, 0));
    net.init(x.cols(), static_cast<std::size_t>(spec.lstm.hidden),
             static_cast<std::size_t>(spec.lstm.layers), init_rng);
    // No jitter here: sigmoid/tanh are smooth everywhere, so the init point is
    // already differentiable.
    std::vector<double> grad;
    net.loss_and_grad(windows, y, grad);
    return max_relative_error(
        net, grad, [&net, &windows, &y]() { return net.loss(windows, y); }, h);
  }

  throw ContractError("gradient check applies to the neural learners only");
}

}  // namespace jamshield
