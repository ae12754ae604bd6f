// Stacked LSTM over sliding windows of consecutive samples, with a softmax
// read-out on the final step's top-layer hidden state. Trained by full
// backpropagation through time on cross-entropy.
#pragma once

#include "jamshield/learners.hpp"

namespace jamshield {

struct LstmLayer {
  // Gate order within the stacked dimension: input, forget, cell, output.
  // wx is (4H x I), wh is (4H x H), b has 4H entries (forget block +1.0 at init).
  Matrix wx;
  Matrix wh;
  std::vector<double> b;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;

  void init(std::size_t input, std::size_t hidden, Rng& rng);
};

struct LstmNet {
  std::vector<LstmLayer> layers;
  // Read-out on the last step's top hidden state: wo is (2 x H), bo has 2.
  Matrix wo;
  std::vector<double> bo;

  void init(std::size_t input, std::size_t hidden, std::size_t n_layers, Rng& rng);

  std::size_t input_width() const {
    return layers.empty() ? 0 : layers.front().input_size;
  }
  std::size_t hidden_size() const {
    return layers.empty() ? 0 : layers.front().hidden_size;
  }

  // window: (L x input_width) rows are consecutive ticks, oldest first.
  // Returns class probabilities from the final step.
  std::vector<double> forward(const Matrix& window) const;

  // Mean cross-entropy over a batch of windows sharing one label each.
  double loss(const std::vector<Matrix>& windows, const std::vector<int>& y) const;
  double loss_and_grad(const std::vector<Matrix>& windows, const std::vector<int>& y,
                       std::vector<double>& grad) const;

  std::size_t param_count() const;
  std::vector<double> flat_params() const;
  void set_flat_params(const std::vector<double>& flat);
  void add_scaled(const std::vector<double>& delta, double scale);
};

class LstmModel : public Model {
public:
  LstmModel(LstmParams params, LstmNet net);

  Algo algo() const override { return Algo::Lstm; }
  std::size_t input_width() const override { return net_.input_width(); }
  bool is_sequence() const override { return true; }
  std::size_t window_length() const override {
    return static_cast<std::size_t>(params_.window);
  }

  // Single-sample fallback: the sample is repeated window-length times.
  double score(const std::vector<double>& x) const override;
  // history holds at least one row; the window ends at the last row and is
  // front-padded with the first row when history is shorter than the window.
  double score_sequence(const Matrix& history) const override;

  const LstmParams& params() const { return params_; }
  const LstmNet& net() const { return net_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  void set_loss_history(std::vector<double> history) { loss_history_ = std::move(history); }

private:
  LstmParams params_;
  LstmNet net_;
  std::vector<double> loss_history_;
};

// Window over rows [start-L+1, start] of x, front-padded by repeating row 0
// while start+1 < L. Rows are emitted oldest first.
Matrix window_ending_at(const Matrix& x, std::size_t start, std::size_t window_len);

}  // namespace jamshield
