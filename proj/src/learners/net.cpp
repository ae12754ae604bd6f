#include "jamshield/learners/net.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "jamshield/common.hpp"
#include "jamshield/learners/svm.hpp"

namespace jamshield {

namespace {

// Numerically stable two-class softmax from logits.
void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

double cross_entropy(const std::vector<double>& probs, int label) {
  const double p = std::max(probs[static_cast<std::size_t>(label)], 1e-300);
  return -std::log(p);
}

}  // namespace

void DenseNet::init(const std::vector<std::size_t>& layer_sizes, Rng& rng) {
  if (layer_sizes.size() < 2) {
    throw ContractError("net: at least input and output layers are required");
  }
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ContractError("net: zero-width layer");
  }
  sizes = layer_sizes;
  weights.clear();
  biases.clear();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t fan_in = sizes[l];
    const std::size_t fan_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
    weights.push_back(std::move(w));
    biases.emplace_back(fan_out, 0.0);
  }
}

std::vector<double> DenseNet::forward(const std::vector<double>& x) const {
  if (x.size() != input_width()) {
    throw ContractError("net: input width mismatch");
  }
  std::vector<double> a = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::vector<double> z = matvec(weights[l], a);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += biases[l][i];
    if (l + 1 < weights.size()) {
      for (double& v : z) v = std::max(0.0, v);
    } else {
      softmax_inplace(z);
    }
    a = std::move(z);
  }
  return a;
}

std::vector<double> dense_hidden_activations(const DenseNet& net, const std::vector<double>& x) {
  if (net.layer_count() < 2) {
    throw ContractError("net: no hidden layer to read activations from");
  }
  if (x.size() != net.input_width()) {
    throw ContractError("net: input width mismatch");
  }
  std::vector<double> a = x;
  for (std::size_t l = 0; l + 1 < net.weights.size(); ++l) {
    std::vector<double> z = matvec(net.weights[l], a);
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] = std::max(0.0, z[i] + net.biases[l][i]);
    }
    a = std::move(z);
  }
  return a;
}

double DenseNet::loss(const Matrix& x, const std::vector<int>& y) const {
  if (x.rows() == 0 || x.rows() != y.size()) {
    throw ContractError("net: loss needs non-empty aligned data");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    total += cross_entropy(forward(x.row(r)), y[r]);
  }
  return total / static_cast<double>(x.rows());
}

std::size_t DenseNet::param_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    count += weights[l].rows() * weights[l].cols() + biases[l].size();
  }
  return count;
}

std::vector<double> DenseNet::flat_params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].data().begin(), weights[l].data().end());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void DenseNet::set_flat_params(const std::vector<double>& flat) {
  if (flat.size() != param_count()) {
    throw ContractError("net: flat parameter size mismatch");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + weights[l].data().size()),
              weights[l].data().begin());
    off += weights[l].data().size();
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + biases[l].size()),
              biases[l].begin());
    off += biases[l].size();
  }
}

void DenseNet::add_scaled(const std::vector<double>& delta, double scale) {
  if (delta.size() != param_count()) {
    throw ContractError("net: flat delta size mismatch");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (double& v : weights[l].data()) v += scale * delta[off++];
    for (double& v : biases[l]) v += scale * delta[off++];
  }
}

double DenseNet::loss_and_grad(const Matrix& x, const std::vector<int>& y,
                               std::vector<double>& grad, double dropout,
                               Rng* drop_rng) const {
  if (x.rows() == 0 || x.rows() != y.size()) {
    throw ContractError("net: gradient needs non-empty aligned data");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ContractError("net: dropout must lie in [0, 1)");
  }
  if (dropout > 0.0 && drop_rng == nullptr) {
    throw ContractError("net: dropout requires an rng");
  }
  const std::size_t n_layers = weights.size();
  grad.assign(param_count(), 0.0);

  // Flat offsets of each layer's weight block; biases follow immediately.
  std::vector<std::size_t> w_off(n_layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    w_off[l] = off;
    off += weights[l].data().size() + biases[l].size();
  }

  const double keep = 1.0 - dropout;
  double total_loss = 0.0;
  std::vector<std::vector<double>> acts(n_layers + 1);
  std::vector<std::vector<double>> masks(n_layers);  // only hidden entries used

  for (std::size_t r = 0; r < x.rows(); ++r) {
    acts[0] = x.row(r);
    for (std::size_t l = 0; l < n_layers; ++l) {
      std::vector<double> z = matvec(weights[l], acts[l]);
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += biases[l][i];
      if (l + 1 < n_layers) {
        for (double& v : z) v = std::max(0.0, v);
        if (dropout > 0.0) {
          masks[l].resize(z.size());
          for (std::size_t i = 0; i < z.size(); ++i) {
            const double m = (drop_rng->uniform() < keep) ? 1.0 / keep : 0.0;
            masks[l][i] = m;
            z[i] *= m;
          }
        }
      } else {
        softmax_inplace(z);
      }
      acts[l + 1] = std::move(z);
    }
    total_loss += cross_entropy(acts[n_layers], y[r]);

    std::vector<double> d = acts[n_layers];  // softmax probabilities
    d[static_cast<std::size_t>(y[r])] -= 1.0;
    for (std::size_t l = n_layers; l-- > 0;) {
      double* gw = grad.data() + w_off[l];
      double* gb = gw + weights[l].data().size();
      const std::vector<double>& a_in = acts[l];
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double di = d[i];
        if (di != 0.0) {
          double* grow = gw + i * a_in.size();
          for (std::size_t j = 0; j < a_in.size(); ++j) grow[j] += di * a_in[j];
        }
        gb[i] += di;
      }
      if (l == 0) break;
      std::vector<double> d_prev(weights[l].cols(), 0.0);
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double di = d[i];
        if (di == 0.0) continue;
        const double* wrow = weights[l].row_ptr(i);
        for (std::size_t j = 0; j < d_prev.size(); ++j) d_prev[j] += di * wrow[j];
      }
      // ReLU (and dropout) gate: activations at layer l are post-ReLU,
      // post-mask, so a positive entry identifies an active, kept unit.
      for (std::size_t j = 0; j < d_prev.size(); ++j) {
        if (acts[l][j] > 0.0) {
          d_prev[j] *= (dropout > 0.0) ? masks[l - 1][j] : 1.0;
        } else {
          d_prev[j] = 0.0;
        }
      }
      d = std::move(d_prev);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (double& g : grad) g *= inv_n;
  return total_loss * inv_n;
}

MlpModel::MlpModel(Algo algo, NetParams params, DenseNet net)
    : algo_(algo), params_(std::move(params)), net_(std::move(net)) {
  if (algo_ != Algo::Mlp && algo_ != Algo::Comp1 && algo_ != Algo::Comp3) {
    throw ContractError("mlp: model tag must be mlp, comp1, or comp3");
  }
}

double MlpModel::score(const std::vector<double>& x) const {
  if (x.size() != net_.input_width()) {
    throw InputError("mlp: query width " + std::to_string(x.size()) +
                     " does not match training width " + std::to_string(net_.input_width()));
  }
  return net_.forward(x)[1];
}

HybridNetSvmModel::HybridNetSvmModel(NetParams params, DenseNet net,
                                     std::unique_ptr<SvmModel> svm)
    : params_(std::move(params)), net_(std::move(net)), svm_(std::move(svm)) {
  if (!svm_) throw ContractError("comp2: missing stacked svm");
  if (svm_->input_width() != net_.sizes[net_.sizes.size() - 2]) {
    throw ContractError("comp2: svm width does not match last hidden layer");
  }
}

HybridNetSvmModel::~HybridNetSvmModel() = default;

std::vector<double> HybridNetSvmModel::embed(const std::vector<double>& x) const {
  return dense_hidden_activations(net_, x);
}

double HybridNetSvmModel::score(const std::vector<double>& x) const {
  if (x.size() != net_.input_width()) {
    throw InputError("comp2: query width " + std::to_string(x.size()) +
                     " does not match training width " + std::to_string(net_.input_width()));
  }
  return svm_->score(embed(x));
}

}  // namespace jamshield
