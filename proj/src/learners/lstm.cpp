#include "jamshield/learners/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "jamshield/common.hpp"

namespace jamshield {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void softmax2_inplace(std::vector<double>& z) {
  const double m = std::max(z[0], z[1]);
  z[0] = std::exp(z[0] - m);
  z[1] = std::exp(z[1] - m);
  const double sum = z[0] + z[1];
  z[0] /= sum;
  z[1] /= sum;
}

// z += M * v, for the gate pre-activations.
void accum_matvec(const Matrix& m, const double* v, std::vector<double>& z) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    z[r] += dot(m.row_ptr(r), v, m.cols());
  }
}

// out += M^T * d.
void accum_matvec_transposed(const Matrix& m, const double* d, std::vector<double>& out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double dr = d[r];
    if (dr == 0.0) continue;
    const double* row = m.row_ptr(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += dr * row[c];
  }
}

// Per-step storage for one layer during backpropagation through time.
struct StepTrace {
  std::vector<double> gates;   // 4H: i, f, g, o post-activation
  std::vector<double> c;       // cell state
  std::vector<double> tanh_c;  // tanh(cell state)
  std::vector<double> h;       // hidden state
};

}  // namespace

void LstmLayer::init(std::size_t input, std::size_t hidden, Rng& rng) {
  if (input == 0 || hidden == 0) throw ContractError("lstm: zero-width layer");
  input_size = input;
  hidden_size = hidden;
  wx = Matrix(4 * hidden, input);
  const double lim_x = std::sqrt(6.0 / static_cast<double>(input + hidden));
  for (double& v : wx.data()) v = rng.uniform(-lim_x, lim_x);
  wh = Matrix(4 * hidden, hidden);
  const double lim_h = std::sqrt(6.0 / static_cast<double>(hidden + hidden));
  for (double& v : wh.data()) v = rng.uniform(-lim_h, lim_h);
  b.assign(4 * hidden, 0.0);
  // Forget-gate bias starts at 1 so early training does not wipe the cell.
  for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;
}

void LstmNet::init(std::size_t input, std::size_t hidden, std::size_t n_layers, Rng& rng) {
  if (n_layers == 0) throw ContractError("lstm: at least one layer required");
  layers.assign(n_layers, LstmLayer{});
  for (std::size_t l = 0; l < n_layers; ++l) {
    layers[l].init(l == 0 ? input : hidden, hidden, rng);
  }
  wo = Matrix(2, hidden);
  const double lim_o = std::sqrt(6.0 / static_cast<double>(hidden + 2));
  for (double& v : wo.data()) v = rng.uniform(-lim_o, lim_o);
  bo.assign(2, 0.0);
}

std::vector<double> LstmNet::forward(const Matrix& window) const {
  if (layers.empty()) throw ContractError("lstm: uninitialized network");
  if (window.rows() == 0 || window.cols() != input_width()) {
    throw ContractError("lstm: window shape mismatch");
  }
  const std::size_t hid = hidden_size();
  std::vector<std::vector<double>> h(layers.size(), std::vector<double>(hid, 0.0));
  std::vector<std::vector<double>> c(layers.size(), std::vector<double>(hid, 0.0));
  std::vector<double> z(4 * hid);
  std::vector<double> lower;

  for (std::size_t t = 0; t < window.rows(); ++t) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const LstmLayer& layer = layers[l];
      const double* input = (l == 0) ? window.row_ptr(t) : lower.data();
      z.assign(layer.b.begin(), layer.b.end());
      accum_matvec(layer.wx, input, z);
      accum_matvec(layer.wh, h[l].data(), z);
      for (std::size_t k = 0; k < hid; ++k) {
        const double gi = sigmoid(z[k]);
        const double gf = sigmoid(z[hid + k]);
        const double gg = std::tanh(z[2 * hid + k]);
        const double go = sigmoid(z[3 * hid + k]);
        c[l][k] = gf * c[l][k] + gi * gg;
        h[l][k] = go * std::tanh(c[l][k]);
      }
      lower = h[l];
    }
  }

  std::vector<double> logits(2, 0.0);
  for (std::size_t r = 0; r < 2; ++r) {
    logits[r] = bo[r] + dot(wo.row_ptr(r), h.back().data(), hid);
  }
  softmax2_inplace(logits);
  return logits;
}

double LstmNet::loss(const std::vector<Matrix>& windows, const std::vector<int>& y) const {
  if (windows.empty() || windows.size() != y.size()) {
    throw ContractError("lstm: loss needs non-empty aligned windows");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const std::vector<double> probs = forward(windows[i]);
    total += -std::log(std::max(probs[static_cast<std::size_t>(y[i])], 1e-300));
  }
  return total / static_cast<double>(windows.size());
}

std::size_t LstmNet::param_count() const {
  std::size_t count = 0;
  for (const LstmLayer& layer : layers) {
    count += layer.wx.data().size() + layer.wh.data().size() + layer.b.size();
  }
  count += wo.data().size() + bo.size();
  return count;
}

std::vector<double> LstmNet::flat_params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const LstmLayer& layer : layers) {
    flat.insert(flat.end(), layer.wx.data().begin(), layer.wx.data().end());
    flat.insert(flat.end(), layer.wh.data().begin(), layer.wh.data().end());
    flat.insert(flat.end(), layer.b.begin(), layer.b.end());
  }
  flat.insert(flat.end(), wo.data().begin(), wo.data().end());
  flat.insert(flat.end(), bo.begin(), bo.end());
  return flat;
}

void LstmNet::set_flat_params(const std::vector<double>& flat) {
  if (flat.size() != param_count()) throw ContractError("lstm: flat parameter size mismatch");
  std::size_t off = 0;
  auto take = [&flat, &off](double* dst, std::size_t n) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + n), dst);
    off += n;
  };
  for (LstmLayer& layer : layers) {
    take(layer.wx.data().data(), layer.wx.data().size());
    take(layer.wh.data().data(), layer.wh.data().size());
    take(layer.b.data(), layer.b.size());
  }
  take(wo.data().data(), wo.data().size());
  take(bo.data(), bo.size());
}

void LstmNet::add_scaled(const std::vector<double>& delta, double scale) {
  if (delta.size() != param_count()) throw ContractError("lstm: flat delta size mismatch");
  std::size_t off = 0;
  auto apply = [&delta, &off, scale](double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += scale * delta[off + i];
    off += n;
  };
  for (LstmLayer& layer : layers) {
    apply(layer.wx.data().data(), layer.wx.data().size());
    apply(layer.wh.data().data(), layer.wh.data().size());
    apply(layer.b.data(), layer.b.size());
  }
  apply(wo.data().data(), wo.data().size());
  apply(bo.data(), bo.size());
}

double LstmNet::loss_and_grad(const std::vector<Matrix>& windows, const std::vector<int>& y,
                              std::vector<double>& grad) const {
  if (windows.empty() || windows.size() != y.size()) {
    throw ContractError("lstm: gradient needs non-empty aligned windows");
  }
  const std::size_t n_layers = layers.size();
  const std::size_t hid = hidden_size();
  grad.assign(param_count(), 0.0);

  // Flat offsets of each layer's blocks (wx, wh, b), then the read-out.
  std::vector<std::size_t> layer_off(n_layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    layer_off[l] = off;
    off += layers[l].wx.data().size() + layers[l].wh.data().size() + layers[l].b.size();
  }
  const std::size_t wo_off = off;
  const std::size_t bo_off = wo_off + wo.data().size();

  double total_loss = 0.0;
  std::vector<std::vector<StepTrace>> trace(n_layers);

  for (std::size_t w = 0; w < windows.size(); ++w) {
    const Matrix& window = windows[w];
    if (window.rows() == 0 || window.cols() != input_width()) {
      throw ContractError("lstm: window shape mismatch");
    }
    const std::size_t steps = window.rows();

    // Forward, recording every gate and state.
    for (std::size_t l = 0; l < n_layers; ++l) trace[l].assign(steps, StepTrace{});
    std::vector<double> z(4 * hid);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t l = 0; l < n_layers; ++l) {
        const LstmLayer& layer = layers[l];
        const double* input = (l == 0) ? window.row_ptr(t) : trace[l - 1][t].h.data();
        const double* h_prev = (t == 0) ? nullptr : trace[l][t - 1].h.data();
        const double* c_prev = (t == 0) ? nullptr : trace[l][t - 1].c.data();
        z.assign(layer.b.begin(), layer.b.end());
        accum_matvec(layer.wx, input, z);
        if (h_prev != nullptr) accum_matvec(layer.wh, h_prev, z);
        StepTrace& st = trace[l][t];
        st.gates.resize(4 * hid);
        st.c.resize(hid);
        st.tanh_c.resize(hid);
        st.h.resize(hid);
        for (std::size_t k = 0; k < hid; ++k) {
          const double gi = sigmoid(z[k]);
          const double gf = sigmoid(z[hid + k]);
          const double gg = std::tanh(z[2 * hid + k]);
          const double go = sigmoid(z[3 * hid + k]);
          st.gates[k] = gi;
          st.gates[hid + k] = gf;
          st.gates[2 * hid + k] = gg;
          st.gates[3 * hid + k] = go;
          const double cp = (c_prev == nullptr) ? 0.0 : c_prev[k];
          st.c[k] = gf * cp + gi * gg;
          st.tanh_c[k] = std::tanh(st.c[k]);
          st.h[k] = go * st.tanh_c[k];
        }
      }
    }

    std::vector<double> probs(2, 0.0);
    const std::vector<double>& h_final = trace[n_layers - 1][steps - 1].h;
    for (std::size_t r = 0; r < 2; ++r) {
      probs[r] = bo[r] + dot(wo.row_ptr(r), h_final.data(), hid);
    }
    softmax2_inplace(probs);
    total_loss += -std::log(std::max(probs[static_cast<std::size_t>(y[w])], 1e-300));

    // Read-out gradients and the seed of the backward pass.
    std::vector<double> d_logits = probs;
    d_logits[static_cast<std::size_t>(y[w])] -= 1.0;
    for (std::size_t r = 0; r < 2; ++r) {
      double* grow = grad.data() + wo_off + r * hid;
      for (std::size_t k = 0; k < hid; ++k) grow[k] += d_logits[r] * h_final[k];
      grad[bo_off + r] += d_logits[r];
    }

    // dh_above[t]: gradient arriving at each step's hidden output from the
    // layer above (or the read-out, for the top layer at the final step).
    std::vector<std::vector<double>> dh_above(steps, std::vector<double>(hid, 0.0));
    for (std::size_t k = 0; k < hid; ++k) {
      dh_above[steps - 1][k] =
          d_logits[0] * wo.at(0, k) + d_logits[1] * wo.at(1, k);
    }

    std::vector<double> dz(4 * hid);
    for (std::size_t l = n_layers; l-- > 0;) {
      const LstmLayer& layer = layers[l];
      double* gwx = grad.data() + layer_off[l];
      double* gwh = gwx + layer.wx.data().size();
      double* gb = gwh + layer.wh.data().size();
      std::vector<std::vector<double>> dh_below;
      if (l > 0) dh_below.assign(steps, std::vector<double>(hid, 0.0));

      std::vector<double> dh_next(hid, 0.0);
      std::vector<double> dc_next(hid, 0.0);
      for (std::size_t t = steps; t-- > 0;) {
        const StepTrace& st = trace[l][t];
        const double* c_prev = (t == 0) ? nullptr : trace[l][t - 1].c.data();
        for (std::size_t k = 0; k < hid; ++k) {
          const double gi = st.gates[k];
          const double gf = st.gates[hid + k];
          const double gg = st.gates[2 * hid + k];
          const double go = st.gates[3 * hid + k];
          const double tc = st.tanh_c[k];
          const double dh = dh_above[t][k] + dh_next[k];
          const double dct = dc_next[k] + dh * go * (1.0 - tc * tc);
          const double d_o = dh * tc;
          const double d_i = dct * gg;
          const double d_f = dct * ((c_prev == nullptr) ? 0.0 : c_prev[k]);
          const double d_g = dct * gi;
          dc_next[k] = dct * gf;
          dz[k] = d_i * gi * (1.0 - gi);
          dz[hid + k] = d_f * gf * (1.0 - gf);
          dz[2 * hid + k] = d_g * (1.0 - gg * gg);
          dz[3 * hid + k] = d_o * go * (1.0 - go);
        }

        const double* input = (l == 0) ? window.row_ptr(t) : trace[l - 1][t].h.data();
        const std::size_t in_w = layer.input_size;
        for (std::size_t r4 = 0; r4 < 4 * hid; ++r4) {
          const double dr = dz[r4];
          gb[r4] += dr;
          if (dr == 0.0) continue;
          double* grow = gwx + r4 * in_w;
          for (std::size_t cidx = 0; cidx < in_w; ++cidx) grow[cidx] += dr * input[cidx];
          if (t > 0) {
            const double* h_prev = trace[l][t - 1].h.data();
            double* ghrow = gwh + r4 * hid;
            for (std::size_t cidx = 0; cidx < hid; ++cidx) ghrow[cidx] += dr * h_prev[cidx];
          }
        }

        if (l > 0) accum_matvec_transposed(layer.wx, dz.data(), dh_below[t]);
        dh_next.assign(hid, 0.0);
        accum_matvec_transposed(layer.wh, dz.data(), dh_next);
      }
      if (l > 0) dh_above = std::move(dh_below);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(windows.size());
  for (double& g : grad) g *= inv_n;
  return total_loss * inv_n;
}

Matrix window_ending_at(const Matrix& x, std::size_t start, std::size_t window_len) {
  if (x.rows() == 0 || start >= x.rows()) {
    throw ContractError("lstm: window start outside the matrix");
  }
  if (window_len == 0) throw ContractError("lstm: window length must be positive");
  Matrix window(window_len, x.cols());
  for (std::size_t k = 0; k < window_len; ++k) {
    const std::size_t back = window_len - 1 - k;
    const std::size_t src = (start >= back) ? start - back : 0;
    std::copy(x.row_ptr(src), x.row_ptr(src) + x.cols(), window.row_ptr(k));
  }
  return window;
}

LstmModel::LstmModel(LstmParams params, LstmNet net)
    : params_(params), net_(std::move(net)) {
  if (params_.window < 1) throw ContractError("lstm: window must be >= 1");
}

double LstmModel::score(const std::vector<double>& x) const {
  if (x.size() != net_.input_width()) {
    throw InputError("lstm: query width " + std::to_string(x.size()) +
                     " does not match training width " + std::to_string(net_.input_width()));
  }
  Matrix window(static_cast<std::size_t>(params_.window), x.size());
  for (std::size_t t = 0; t < window.rows(); ++t) {
    std::copy(x.begin(), x.end(), window.row_ptr(t));
  }
  return net_.forward(window)[1];
}

double LstmModel::score_sequence(const Matrix& history) const {
  if (history.rows() == 0) throw InputError("lstm: empty history");
  if (history.cols() != net_.input_width()) {
    throw InputError("lstm: history width " + std::to_string(history.cols()) +
                     " does not match training width " + std::to_string(net_.input_width()));
  }
  const Matrix window =
      window_ending_at(history, history.rows() - 1, static_cast<std::size_t>(params_.window));
  return net_.forward(window)[1];
}

}  // namespace jamshield
