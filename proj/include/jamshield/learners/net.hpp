// Fully connected feed-forward network with ReLU hidden layers and a
// two-way softmax head, trained by mini-batch SGD on cross-entropy.
// Backs the MLP learner and the three reference baselines.
#pragma once

#include "jamshield/learners.hpp"

namespace jamshield {

struct DenseNet {
  // sizes = {input, hidden..., 2}. weights[l] is sizes[l+1] x sizes[l];
  // biases[l] has sizes[l+1] entries.
  std::vector<std::size_t> sizes;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  void init(const std::vector<std::size_t>& layer_sizes, Rng& rng);

  std::size_t input_width() const { return sizes.empty() ? 0 : sizes.front(); }
  std::size_t layer_count() const { return weights.size(); }

  // Class probabilities (softmax over two logits).
  std::vector<double> forward(const std::vector<double>& x) const;

  // Mean cross-entropy over the rows of x.
  double loss(const Matrix& x, const std::vector<int>& y) const;

  // Mean cross-entropy and its gradient in flat-parameter order. dropout is
  // the drop probability applied to hidden activations (inverted dropout);
  // drop_rng must be non-null when dropout > 0.
  double loss_and_grad(const Matrix& x, const std::vector<int>& y,
                       std::vector<double>& grad, double dropout, Rng* drop_rng) const;

  // Flat parameter vector: weights row-major then biases, layer by layer.
  std::size_t param_count() const;
  std::vector<double> flat_params() const;
  void set_flat_params(const std::vector<double>& flat);
  void add_scaled(const std::vector<double>& delta, double scale);
};

class MlpModel : public Model {
public:
  // algo distinguishes the native MLP from the Comp1/Comp3 baselines that
  // reuse the same network type with different shapes.
  MlpModel(Algo algo, NetParams params, DenseNet net);

  Algo algo() const override { return algo_; }
  std::size_t input_width() const override { return net_.input_width(); }
  // P(attack) from the softmax head.
  double score(const std::vector<double>& x) const override;

  const NetParams& params() const { return params_; }
  const DenseNet& net() const { return net_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  void set_loss_history(std::vector<double> history) { loss_history_ = std::move(history); }

private:
  Algo algo_;
  NetParams params_;
  DenseNet net_;
  std::vector<double> loss_history_;
};

// Activations of the last hidden layer (post-ReLU) for one input row.
std::vector<double> dense_hidden_activations(const DenseNet& net,
                                             const std::vector<double>& x);

class SvmModel;

// Baseline that feeds the last hidden layer of a trained network into an
// RBF-kernel SVM.
class HybridNetSvmModel : public Model {
public:
  HybridNetSvmModel(NetParams params, DenseNet net, std::unique_ptr<SvmModel> svm);
  ~HybridNetSvmModel() override;

  Algo algo() const override { return Algo::Comp2; }
  std::size_t input_width() const override { return net_.input_width(); }
  double score(const std::vector<double>& x) const override;

  // Activations of the last hidden layer (post-ReLU).
  std::vector<double> embed(const std::vector<double>& x) const;

  const NetParams& params() const { return params_; }
  const DenseNet& net() const { return net_; }
  const SvmModel& svm() const { return *svm_; }

private:
  NetParams params_;
  DenseNet net_;
  std::unique_ptr<SvmModel> svm_;
};

}  // namespace jamshield
