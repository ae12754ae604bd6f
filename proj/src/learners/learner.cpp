#include "jamshield/learners.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "jamshield/common.hpp"
#include "jamshield/learners/knn.hpp"
#include "jamshield/learners/lstm.hpp"
#include "jamshield/learners/net.hpp"
#include "jamshield/learners/svm.hpp"
#include "jamshield/learners/tree.hpp"

namespace jamshield {

using nlohmann::json;

const std::vector<Algo> kAutoCmAlgos = {Algo::Knn, Algo::Dt,  Algo::Lstm,
                                        Algo::Svm, Algo::Mlp, Algo::Rf};

std::string algo_to_string(Algo algo) {
  switch (algo) {
    case Algo::Knn: return "knn";
    case Algo::Dt: return "dt";
    case Algo::Lstm: return "lstm";
    case Algo::Svm: return "svm";
    case Algo::Mlp: return "mlp";
    case Algo::Rf: return "rf";
    case Algo::Comp1: return "comp1";
    case Algo::Comp2: return "comp2";
    case Algo::Comp3: return "comp3";
  }
  throw ContractError("unknown algorithm tag");
}

Algo algo_from_string(const std::string& text) {
  if (text == "knn") return Algo::Knn;
  if (text == "dt") return Algo::Dt;
  if (text == "lstm") return Algo::Lstm;
  if (text == "svm") return Algo::Svm;
  if (text == "mlp") return Algo::Mlp;
  if (text == "rf") return Algo::Rf;
  if (text == "comp1") return Algo::Comp1;
  if (text == "comp2") return Algo::Comp2;
  if (text == "comp3") return Algo::Comp3;
  throw InputError("unknown algorithm '" + text +
                   "' (expected knn, dt, lstm, svm, mlp, rf, comp1, comp2, or comp3)");
}

LearnerSpec LearnerSpec::defaults(Algo algo, std::uint64_t seed) {
  LearnerSpec spec;
  spec.algo = algo;
  spec.seed = seed;
  switch (algo) {
    case Algo::Comp1:
      spec.net.hidden = {453, 207, 374};
      break;
    case Algo::Comp2:
      spec.net.hidden = {128, 128};
      break;
    case Algo::Comp3:
      spec.net.hidden = {1000, 1000, 1000, 1000, 1000};
      spec.net.dropout = 0.3;
      spec.net.lr = 0.01;
      spec.net.batch = 64;
      break;
    default:
      break;
  }
  return spec;
}

double Model::score_sequence(const Matrix&) const {
  throw ContractError("model does not score sequences");
}

Prediction predict(const Model& model, const std::vector<double>& x) {
  if (x.size() != model.input_width()) {
    throw InputError("predict: sample width " + std::to_string(x.size()) +
                     " does not match model width " + std::to_string(model.input_width()));
  }
  const double s = std::clamp(model.score(x), 0.0, 1.0);
  return Prediction{s >= 0.5, s};
}

Prediction predict_sequence(const Model& model, const Matrix& window) {
  if (!model.is_sequence()) {
    throw ContractError("predict_sequence: model scores single samples only");
  }
  if (window.cols() != model.input_width()) {
    throw InputError("predict_sequence: window width " + std::to_string(window.cols()) +
                     " does not match model width " + std::to_string(model.input_width()));
  }
  if (window.rows() < model.window_length()) {
    throw InputError("predict_sequence: short window (" + std::to_string(window.rows()) +
                     " rows, need " + std::to_string(model.window_length()) + ")");
  }
  const double s = std::clamp(model.score_sequence(window), 0.0, 1.0);
  return Prediction{s >= 0.5, s};
}

namespace {

constexpr double kEarlyStopDelta = 1e-5;
constexpr int kEarlyStopPatience = 5;

void validate_training_input(const Matrix& x, const std::vector<int>& y) {
  if (x.rows() == 0 || x.cols() == 0) {
    throw InputError("train: empty feature matrix");
  }
  if (x.rows() != y.size()) {
    throw InputError("train: " + std::to_string(x.rows()) + " rows but " +
                     std::to_string(y.size()) + " labels");
  }
  std::size_t attack = 0;
  for (int label : y) {
    if (label != 0 && label != 1) {
      throw InputError("train: labels must be 0 (benign) or 1 (attack)");
    }
    attack += static_cast<std::size_t>(label);
  }
  if (attack == 0 || attack == y.size()) {
    throw InputError("train: training data contains a single class");
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw InputError("train: training data contains non-finite values");
  }
}

std::vector<std::size_t> dense_layer_sizes(std::size_t input, const NetParams& params) {
  std::vector<std::size_t> sizes;
  sizes.push_back(input);
  for (int h : params.hidden) {
    if (h < 1) throw InputError("train: hidden layer sizes must be positive");
    sizes.push_back(static_cast<std::size_t>(h));
  }
  sizes.push_back(2);
  return sizes;
}

// Shared mini-batch SGD loop with best-loss early stopping. Returns the
// per-epoch mean training loss trace.
std::vector<double> train_dense(DenseNet& net, const NetParams& params, const Matrix& x,
                                const std::vector<int>& y, Rng& shuffle_rng, Rng* drop_rng) {
  const std::size_t n = x.rows();
  const std::size_t batch =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(params.batch, 1)), 1, n);
  const int epochs = std::max(params.epochs, 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> history;
  std::vector<double> grad;
  double best = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t size = std::min(batch, n - start);
      Matrix xb(size, x.cols());
      std::vector<int> yb(size);
      for (std::size_t i = 0; i < size; ++i) {
        const std::size_t src = order[start + i];
        std::copy(x.row_ptr(src), x.row_ptr(src) + x.cols(), xb.row_ptr(i));
        yb[i] = y[src];
      }
      const double loss = net.loss_and_grad(xb, yb, grad, params.dropout, drop_rng);
      net.add_scaled(grad, -params.lr);
      epoch_loss += loss * static_cast<double>(size);
    }
    epoch_loss /= static_cast<double>(n);
    history.push_back(epoch_loss);

    if (best - epoch_loss < kEarlyStopDelta) {
      ++stall;
    } else {
      stall = 0;
    }
    best = std::min(best, epoch_loss);
    if (stall >= kEarlyStopPatience) break;
  }
  return history;
}

std::vector<double> train_lstm_net(LstmNet& net, const LstmParams& params, const Matrix& x,
                                   const std::vector<int>& y, Rng& shuffle_rng) {
  const std::size_t n = x.rows();
  const std::size_t window = static_cast<std::size_t>(std::max(params.window, 1));
  const std::size_t batch =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(params.batch, 1)), 1, n);
  const int epochs = std::max(params.epochs, 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> history;
  std::vector<double> grad;
  double best = std::numeric_limits<double>::infinity();
  int stall = 0;

  std::vector<Matrix> windows;
  std::vector<int> yb;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t size = std::min(batch, n - start);
      windows.clear();
      yb.resize(size);
      for (std::size_t i = 0; i < size; ++i) {
        const std::size_t src = order[start + i];
        windows.push_back(window_ending_at(x, src, window));
        yb[i] = y[src];
      }
      const double loss = net.loss_and_grad(windows, yb, grad);
      net.add_scaled(grad, -params.lr);
      epoch_loss += loss * static_cast<double>(size);
    }
    epoch_loss /= static_cast<double>(n);
    history.push_back(epoch_loss);

    if (best - epoch_loss < kEarlyStopDelta) {
      ++stall;
    } else {
      stall = 0;
    }
    best = std::min(best, epoch_loss);
    if (stall >= kEarlyStopPatience) break;
  }
  return history;
}

int forest_mtry(std::size_t width) {
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(width))));
}

}  // namespace

std::unique_ptr<Model> train(const LearnerSpec& spec, const Matrix& x,
                             const std::vector<int>& y) {
  validate_training_input(x, y);

  switch (spec.algo) {
    case Algo::Knn:
      return std::make_unique<KnnModel>(spec.knn, x, y);

    case Algo::Dt: {
      std::vector<std::size_t> rows(x.rows());
      std::iota(rows.begin(), rows.end(), 0);
      TreeStructure tree = build_tree(x, y, rows, SplitCriterion::Entropy,
                                      spec.dt.max_depth, spec.dt.min_samples_split,
                                      /*mtry=*/0, nullptr);
      return std::make_unique<TreeModel>(spec.dt, std::move(tree), x.cols());
    }

    case Algo::Rf: {
      if (spec.rf.trees < 1) throw InputError("train: rf needs at least one tree");
      const std::size_t n = x.rows();
      const int mtry = forest_mtry(x.cols());
      std::vector<TreeStructure> trees;
      trees.reserve(static_cast<std::size_t>(spec.rf.trees));
      std::vector<std::size_t> rows(n);
      for (int t = 0; t < spec.rf.trees; ++t) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(t)));
        for (std::size_t i = 0; i < n; ++i) rows[i] = rng.uniform_index(n);
        trees.push_back(build_tree(x, y, rows, SplitCriterion::Gini, spec.rf.max_depth,
                                   spec.rf.min_samples_split, mtry, &rng));
      }
      return std::make_unique<ForestModel>(spec.rf, std::move(trees), x.cols());
    }

    case Algo::Svm:
      return smo_train(spec.svm, x, y, rbf_gamma_scale(x));

    case Algo::Mlp:
    case Algo::Comp1:
    case Algo::Comp3: {
      DenseNet net;
      Rng init_rng(derive_seed(spec.seed, 0));
      net.init(dense_layer_sizes(x.cols(), spec.net), init_rng);
      Rng shuffle_rng(derive_seed(spec.seed, 1));
      Rng drop_rng(derive_seed(spec.seed, 2));
      std::vector<double> history =
          train_dense(net, spec.net, x, y, shuffle_rng,
                      spec.net.dropout > 0.0 ? &drop_rng : nullptr);
      auto model = std::make_unique<MlpModel>(spec.algo, spec.net, std::move(net));
      model->set_loss_history(std::move(history));
      return model;
    }

    case Algo::Comp2: {
      DenseNet net;
      Rng init_rng(derive_seed(spec.seed, 0));
      net.init(dense_layer_sizes(x.cols(), spec.net), init_rng);
      Rng shuffle_rng(derive_seed(spec.seed, 1));
      Rng drop_rng(derive_seed(spec.seed, 2));
      train_dense(net, spec.net, x, y, shuffle_rng,
                  spec.net.dropout > 0.0 ? &drop_rng : nullptr);
      const std::size_t embed_width = net.sizes[net.sizes.size() - 2];
      Matrix embedded(x.rows(), embed_width);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const std::vector<double> h = dense_hidden_activations(net, x.row(r));
        std::copy(h.begin(), h.end(), embedded.row_ptr(r));
      }
      std::unique_ptr<SvmModel> svm =
          smo_train(spec.svm, embedded, y, rbf_gamma_scale(embedded));
      return std::make_unique<HybridNetSvmModel>(spec.net, std::move(net), std::move(svm));
    }

    case Algo::Lstm: {
      if (spec.lstm.layers < 1 || spec.lstm.hidden < 1 || spec.lstm.window < 1) {
        throw InputError("train: lstm layers, hidden size, and window must be positive");
      }
      LstmNet net;
      Rng init_rng(derive_seed(spec.seed, 0));
      net.init(x.cols(), static_cast<std::size_t>(spec.lstm.hidden),
               static_cast<std::size_t>(spec.lstm.layers), init_rng);
      Rng shuffle_rng(derive_seed(spec.seed, 1));
      std::vector<double> history = train_lstm_net(net, spec.lstm, x, y, shuffle_rng);
      auto model = std::make_unique<LstmModel>(spec.lstm, std::move(net));
      model->set_loss_history(std::move(history));
      return model;
    }
  }
  throw ContractError("train: unknown algorithm");
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kBase64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const std::uint32_t v = (static_cast<std::uint32_t>(bytes[i]) << 16) |
                            (static_cast<std::uint32_t>(bytes[i + 1]) << 8) |
                            static_cast<std::uint32_t>(bytes[i + 2]);
    out.push_back(kBase64Chars[(v >> 18) & 63]);
    out.push_back(kBase64Chars[(v >> 12) & 63]);
    out.push_back(kBase64Chars[(v >> 6) & 63]);
    out.push_back(kBase64Chars[v & 63]);
    i += 3;
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = static_cast<std::uint32_t>(bytes[i]) << 16;
    out.push_back(kBase64Chars[(v >> 18) & 63]);
    out.push_back(kBase64Chars[(v >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (rest == 2) {
    const std::uint32_t v = (static_cast<std::uint32_t>(bytes[i]) << 16) |
                            (static_cast<std::uint32_t>(bytes[i + 1]) << 8);
    out.push_back(kBase64Chars[(v >> 18) & 63]);
    out.push_back(kBase64Chars[(v >> 12) & 63]);
    out.push_back(kBase64Chars[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

int base64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw InputError("model payload: base64 length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) {
          throw InputError("model payload: misplaced base64 padding");
        }
        vals[k] = 0;
        ++pad;
      } else {
        if (pad > 0) throw InputError("model payload: data after base64 padding");
        vals[k] = base64_value(c);
        if (vals[k] < 0) throw InputError("model payload: invalid base64 character");
      }
    }
    const std::uint32_t v = (static_cast<std::uint32_t>(vals[0]) << 18) |
                            (static_cast<std::uint32_t>(vals[1]) << 12) |
                            (static_cast<std::uint32_t>(vals[2]) << 6) |
                            static_cast<std::uint32_t>(vals[3]);
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 255));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 255));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 255));
  }
  return out;
}

json doubles_to_payload(const double* values, std::size_t count, std::size_t rows,
                        std::size_t cols) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(count * 8);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(values[i]);
    for (int shift = 0; shift < 64; shift += 8) {
      bytes.push_back(static_cast<std::uint8_t>((u >> shift) & 255));
    }
  }
  return json{{"rows", rows}, {"cols", cols}, {"dtype", "f64le"}, {"data", base64_encode(bytes)}};
}

json matrix_to_payload(const Matrix& m) {
  return doubles_to_payload(m.data().data(), m.data().size(), m.rows(), m.cols());
}

json vector_to_payload(const std::vector<double>& v) {
  return doubles_to_payload(v.data(), v.size(), 1, v.size());
}

void payload_shape(const json& j, std::size_t& rows, std::size_t& cols,
                   std::vector<double>& values) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("dtype") ||
      !j.contains("data")) {
    throw InputError("model payload: expected {rows, cols, dtype, data}");
  }
  if (j.at("dtype").get<std::string>() != "f64le") {
    throw InputError("model payload: unsupported dtype (expected f64le)");
  }
  rows = j.at("rows").get<std::size_t>();
  cols = j.at("cols").get<std::size_t>();
  const std::vector<std::uint8_t> bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != rows * cols * 8) {
    throw InputError("model payload: byte count does not match rows*cols");
  }
  values.resize(rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t u = 0;
    for (int k = 7; k >= 0; --k) {
      u = (u << 8) | bytes[i * 8 + static_cast<std::size_t>(k)];
    }
    values[i] = std::bit_cast<double>(u);
  }
}

Matrix payload_to_matrix(const json& j) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  payload_shape(j, rows, cols, values);
  Matrix m(rows, cols);
  m.data() = std::move(values);
  return m;
}

std::vector<double> payload_to_vector(const json& j) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  payload_shape(j, rows, cols, values);
  if (rows != 1) throw InputError("model payload: expected a single-row vector");
  return values;
}

json tree_to_json(const TreeStructure& tree) {
  const std::size_t n = tree.nodes.size();
  json feature = json::array();
  json left = json::array();
  json right = json::array();
  json count = json::array();
  std::vector<double> thresholds(n);
  std::vector<double> p_attack(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TreeNode& node = tree.nodes[i];
    feature.push_back(node.feature);
    left.push_back(node.left);
    right.push_back(node.right);
    count.push_back(node.count);
    thresholds[i] = node.threshold;
    p_attack[i] = node.p_attack;
  }
  return json{{"feature", feature},   {"left", left},
              {"right", right},       {"count", count},
              {"threshold", vector_to_payload(thresholds)},
              {"p_attack", vector_to_payload(p_attack)}};
}

TreeStructure tree_from_json(const json& j) {
  const auto& feature = j.at("feature");
  const auto& left = j.at("left");
  const auto& right = j.at("right");
  const auto& count = j.at("count");
  const std::vector<double> thresholds = payload_to_vector(j.at("threshold"));
  const std::vector<double> p_attack = payload_to_vector(j.at("p_attack"));
  const std::size_t n = feature.size();
  if (left.size() != n || right.size() != n || count.size() != n || thresholds.size() != n ||
      p_attack.size() != n || n == 0) {
    throw InputError("model file: inconsistent tree arrays");
  }
  TreeStructure tree;
  tree.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    TreeNode& node = tree.nodes[i];
    node.feature = feature.at(i).get<int>();
    node.left = left.at(i).get<int>();
    node.right = right.at(i).get<int>();
    node.count = count.at(i).get<std::uint32_t>();
    node.threshold = thresholds[i];
    node.p_attack = p_attack[i];
    const int limit = static_cast<int>(n);
    if (node.feature >= 0 && (node.left < 0 || node.left >= limit || node.right < 0 ||
                              node.right >= limit)) {
      throw InputError("model file: tree child index out of range");
    }
  }
  return tree;
}

json dense_net_to_json(const DenseNet& net) {
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    weights.push_back(matrix_to_payload(net.weights[l]));
    biases.push_back(vector_to_payload(net.biases[l]));
  }
  return json{{"sizes", net.sizes}, {"weights", weights}, {"biases", biases}};
}

DenseNet dense_net_from_json(const json& j) {
  DenseNet net;
  net.sizes = j.at("sizes").get<std::vector<std::size_t>>();
  if (net.sizes.size() < 2) throw InputError("model file: network needs >= 2 layer sizes");
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != net.sizes.size() - 1 || biases.size() != weights.size()) {
    throw InputError("model file: layer count mismatch");
  }
  for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
    Matrix w = payload_to_matrix(weights.at(l));
    std::vector<double> b = payload_to_vector(biases.at(l));
    if (w.rows() != net.sizes[l + 1] || w.cols() != net.sizes[l] ||
        b.size() != net.sizes[l + 1]) {
      throw InputError("model file: weight shape does not match layer sizes");
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

json net_params_to_json(const NetParams& p) {
  return json{{"hidden", p.hidden}, {"lr", p.lr},          {"batch", p.batch},
              {"epochs", p.epochs}, {"dropout", p.dropout}};
}

NetParams net_params_from_json(const json& j) {
  NetParams p;
  p.hidden = j.at("hidden").get<std::vector<int>>();
  p.lr = j.at("lr").get<double>();
  p.batch = j.at("batch").get<int>();
  p.epochs = j.at("epochs").get<int>();
  p.dropout = j.at("dropout").get<double>();
  return p;
}

json svm_params_to_json(const SvmParams& p) {
  return json{{"c", p.c}, {"tol", p.tol}, {"max_passes", p.max_passes}};
}

SvmParams svm_params_from_json(const json& j) {
  SvmParams p;
  p.c = j.at("c").get<double>();
  p.tol = j.at("tol").get<double>();
  p.max_passes = j.at("max_passes").get<int>();
  return p;
}

json svm_model_to_json(const SvmModel& m) {
  json j = svm_params_to_json(m.params());
  j["gamma"] = m.gamma();
  j["bias"] = m.bias();
  j["support"] = matrix_to_payload(m.support());
  j["coef"] = vector_to_payload(m.coef());
  return j;
}

std::unique_ptr<SvmModel> svm_model_from_json(const json& j) {
  const SvmParams params = svm_params_from_json(j);
  Matrix support = payload_to_matrix(j.at("support"));
  std::vector<double> coef = payload_to_vector(j.at("coef"));
  if (support.rows() != coef.size()) {
    throw InputError("model file: svm support/coefficient count mismatch");
  }
  return std::make_unique<SvmModel>(params, std::move(support), std::move(coef),
                                    j.at("bias").get<double>(), j.at("gamma").get<double>());
}

json model_payload(const Model& model) {
  switch (model.algo()) {
    case Algo::Knn: {
      const auto& knn = static_cast<const KnnModel&>(model);
      return json{{"k", knn.params().k},
                  {"train_y", knn.train_y()},
                  {"train_x", matrix_to_payload(knn.train_x())}};
    }
    case Algo::Dt: {
      const auto& dt = static_cast<const TreeModel&>(model);
      return json{{"max_depth", dt.params().max_depth},
                  {"min_samples_split", dt.params().min_samples_split},
                  {"width", dt.input_width()},
                  {"tree", tree_to_json(dt.tree())}};
    }
    case Algo::Rf: {
      const auto& rf = static_cast<const ForestModel&>(model);
      json trees = json::array();
      for (const TreeStructure& tree : rf.trees()) trees.push_back(tree_to_json(tree));
      return json{{"trees", rf.params().trees},
                  {"max_depth", rf.params().max_depth},
                  {"min_samples_split", rf.params().min_samples_split},
                  {"width", rf.input_width()},
                  {"forest", trees}};
    }
    case Algo::Svm:
      return svm_model_to_json(static_cast<const SvmModel&>(model));
    case Algo::Mlp:
    case Algo::Comp1:
    case Algo::Comp3: {
      const auto& mlp = static_cast<const MlpModel&>(model);
      json j = dense_net_to_json(mlp.net());
      j["params"] = net_params_to_json(mlp.params());
      j["loss_history"] = vector_to_payload(mlp.loss_history());
      return j;
    }
    case Algo::Comp2: {
      const auto& hybrid = static_cast<const HybridNetSvmModel&>(model);
      return json{{"params", net_params_to_json(hybrid.params())},
                  {"net", dense_net_to_json(hybrid.net())},
                  {"svm", svm_model_to_json(hybrid.svm())}};
    }
    case Algo::Lstm: {
      const auto& lstm = static_cast<const LstmModel&>(model);
      const LstmNet& net = lstm.net();
      json layers = json::array();
      for (const LstmLayer& layer : net.layers) {
        layers.push_back(json{{"wx", matrix_to_payload(layer.wx)},
                              {"wh", matrix_to_payload(layer.wh)},
                              {"b", vector_to_payload(layer.b)}});
      }
      return json{{"layers", lstm.params().layers},
                  {"hidden", lstm.params().hidden},
                  {"lr", lstm.params().lr},
                  {"batch", lstm.params().batch},
                  {"epochs", lstm.params().epochs},
                  {"window", lstm.params().window},
                  {"input", net.input_width()},
                  {"cells", layers},
                  {"wo", matrix_to_payload(net.wo)},
                  {"bo", vector_to_payload(net.bo)},
                  {"loss_history", vector_to_payload(lstm.loss_history())}};
    }
  }
  throw ContractError("serialize: unknown algorithm");
}

std::unique_ptr<Model> model_from_payload(Algo algo, const json& j) {
  switch (algo) {
    case Algo::Knn: {
      KnnParams params;
      params.k = j.at("k").get<int>();
      Matrix x = payload_to_matrix(j.at("train_x"));
      std::vector<int> y = j.at("train_y").get<std::vector<int>>();
      if (x.rows() != y.size()) throw InputError("model file: knn rows/labels mismatch");
      return std::make_unique<KnnModel>(params, std::move(x), std::move(y));
    }
    case Algo::Dt: {
      DtParams params;
      params.max_depth = j.at("max_depth").get<int>();
      params.min_samples_split = j.at("min_samples_split").get<int>();
      return std::make_unique<TreeModel>(params, tree_from_json(j.at("tree")),
                                         j.at("width").get<std::size_t>());
    }
    case Algo::Rf: {
      RfParams params;
      params.trees = j.at("trees").get<int>();
      params.max_depth = j.at("max_depth").get<int>();
      params.min_samples_split = j.at("min_samples_split").get<int>();
      std::vector<TreeStructure> trees;
      for (const json& tj : j.at("forest")) trees.push_back(tree_from_json(tj));
      return std::make_unique<ForestModel>(params, std::move(trees),
                                           j.at("width").get<std::size_t>());
    }
    case Algo::Svm:
      return svm_model_from_json(j);
    case Algo::Mlp:
    case Algo::Comp1:
    case Algo::Comp3: {
      auto model = std::make_unique<MlpModel>(algo, net_params_from_json(j.at("params")),
                                              dense_net_from_json(j));
      model->set_loss_history(payload_to_vector(j.at("loss_history")));
      return model;
    }
    case Algo::Comp2: {
      return std::make_unique<HybridNetSvmModel>(net_params_from_json(j.at("params")),
                                                 dense_net_from_json(j.at("net")),
                                                 svm_model_from_json(j.at("svm")));
    }
    case Algo::Lstm: {
      LstmParams params;
      params.layers = j.at("layers").get<int>();
      params.hidden = j.at("hidden").get<int>();
      params.lr = j.at("lr").get<double>();
      params.batch = j.at("batch").get<int>();
      params.epochs = j.at("epochs").get<int>();
      params.window = j.at("window").get<int>();
      LstmNet net;
      const std::size_t hid = static_cast<std::size_t>(params.hidden);
      const std::size_t input = j.at("input").get<std::size_t>();
      const auto& cells = j.at("cells");
      if (static_cast<int>(cells.size()) != params.layers) {
        throw InputError("model file: lstm layer count mismatch");
      }
      for (std::size_t l = 0; l < cells.size(); ++l) {
        LstmLayer layer;
        layer.wx = payload_to_matrix(cells.at(l).at("wx"));
        layer.wh = payload_to_matrix(cells.at(l).at("wh"));
        layer.b = payload_to_vector(cells.at(l).at("b"));
        layer.input_size = (l == 0) ? input : hid;
        layer.hidden_size = hid;
        if (layer.wx.rows() != 4 * hid || layer.wx.cols() != layer.input_size ||
            layer.wh.rows() != 4 * hid || layer.wh.cols() != hid || layer.b.size() != 4 * hid) {
          throw InputError("model file: lstm weight shape mismatch");
        }
        net.layers.push_back(std::move(layer));
      }
      net.wo = payload_to_matrix(j.at("wo"));
      net.bo = payload_to_vector(j.at("bo"));
      if (net.wo.rows() != 2 || net.wo.cols() != hid || net.bo.size() != 2) {
        throw InputError("model file: lstm read-out shape mismatch");
      }
      auto model = std::make_unique<LstmModel>(params, std::move(net));
      model->set_loss_history(payload_to_vector(j.at("loss_history")));
      return model;
    }
  }
  throw ContractError("deserialize: unknown algorithm");
}

json parse_json_or_throw(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InputError(what + ": not valid JSON");
  return j;
}

json spec_to_json(const LearnerSpec& spec) {
  return json{{"algo", algo_to_string(spec.algo)},
              {"seed", spec.seed},
              {"knn", json{{"k", spec.knn.k}}},
              {"dt", json{{"max_depth", spec.dt.max_depth},
                          {"min_samples_split", spec.dt.min_samples_split}}},
              {"rf", json{{"trees", spec.rf.trees},
                          {"max_depth", spec.rf.max_depth},
                          {"min_samples_split", spec.rf.min_samples_split}}},
              {"svm", svm_params_to_json(spec.svm)},
              {"net", net_params_to_json(spec.net)},
              {"lstm", json{{"layers", spec.lstm.layers},
                            {"hidden", spec.lstm.hidden},
                            {"lr", spec.lstm.lr},
                            {"batch", spec.lstm.batch},
                            {"epochs", spec.lstm.epochs},
                            {"window", spec.lstm.window}}}};
}

LearnerSpec spec_from_json(const json& j) {
  LearnerSpec spec;
  spec.algo = algo_from_string(j.at("algo").get<std::string>());
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.knn.k = j.at("knn").at("k").get<int>();
  spec.dt.max_depth = j.at("dt").at("max_depth").get<int>();
  spec.dt.min_samples_split = j.at("dt").at("min_samples_split").get<int>();
  spec.rf.trees = j.at("rf").at("trees").get<int>();
  spec.rf.max_depth = j.at("rf").at("max_depth").get<int>();
  spec.rf.min_samples_split = j.at("rf").at("min_samples_split").get<int>();
  spec.svm = svm_params_from_json(j.at("svm"));
  spec.net = net_params_from_json(j.at("net"));
  spec.lstm.layers = j.at("lstm").at("layers").get<int>();
  spec.lstm.hidden = j.at("lstm").at("hidden").get<int>();
  spec.lstm.lr = j.at("lstm").at("lr").get<double>();
  spec.lstm.batch = j.at("lstm").at("batch").get<int>();
  spec.lstm.epochs = j.at("lstm").at("epochs").get<int>();
  spec.lstm.window = j.at("lstm").at("window").get<int>();
  return spec;
}

json scaler_to_json(const StandardScaler& scaler) {
  return json{{"mean", vector_to_payload(scaler.mean)},
              {"stddev", vector_to_payload(scaler.stddev)}};
}

StandardScaler scaler_from_json(const json& j) {
  StandardScaler scaler;
  scaler.mean = payload_to_vector(j.at("mean"));
  scaler.stddev = payload_to_vector(j.at("stddev"));
  if (scaler.mean.size() != scaler.stddev.size() || scaler.mean.empty()) {
    throw InputError("bundle file: scaler mean/stddev size mismatch");
  }
  return scaler;
}

}  // namespace

std::string model_to_json_text(const Model& model) {
  const json j = {{"version", 1},
                  {"algo", algo_to_string(model.algo())},
                  {"model", model_payload(model)}};
  return j.dump();
}

std::unique_ptr<Model> model_from_json_text(const std::string& text) {
  const json j = parse_json_or_throw(text, "model file");
  try {
    if (!j.contains("version") || j.at("version").get<int>() != 1) {
      throw InputError("model file: unsupported version (expected 1)");
    }
    const Algo algo = algo_from_string(j.at("algo").get<std::string>());
    return model_from_payload(algo, j.at("model"));
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
}

std::string scaler_content_id(const StandardScaler& scaler) {
  return hash_hex(fnv1a(scaler_to_json(scaler).dump()));
}

Prediction ModelBundle::predict_raw(const std::vector<double>& raw) const {
  if (!model) throw ContractError("bundle: no model loaded");
  if (raw.size() != scaler.size()) {
    throw InputError("bundle: sample width " + std::to_string(raw.size()) +
                     " does not match scaler width " + std::to_string(scaler.size()));
  }
  std::vector<double> scaled = scaler.transform(raw);
  const std::vector<double> masked = apply_mask(mask, scaled);
  return predict(*model, masked);
}

void ModelBundle::save(const std::string& path) const {
  if (!model) throw ContractError("bundle: no model to save");
  const json j = {{"version", 1},
                  {"spec", spec_to_json(spec)},
                  {"scaler", scaler_to_json(scaler)},
                  {"mask", parse_json_or_throw(mask.to_json_text(), "mask")},
                  {"model", parse_json_or_throw(model_to_json_text(*model), "model")},
                  {"scaler_id", scaler_content_id(scaler)},
                  {"mask_id", mask.content_id()}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing '" + path + "'");
}

ModelBundle ModelBundle::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const json j = parse_json_or_throw(buffer.str(), "bundle file '" + path + "'");
  try {
    if (!j.contains("version") || j.at("version").get<int>() != 1) {
      throw InputError("bundle file: unsupported version (expected 1)");
    }
    ModelBundle bundle;
    bundle.spec = spec_from_json(j.at("spec"));
    bundle.scaler = scaler_from_json(j.at("scaler"));
    bundle.mask = SelectionMask::from_json_text(j.at("mask").dump());
    bundle.model = model_from_json_text(j.at("model").dump());
    bundle.scaler_id = j.at("scaler_id").get<std::string>();
    bundle.mask_id = j.at("mask_id").get<std::string>();
    if (bundle.scaler_id != scaler_content_id(bundle.scaler)) {
      throw InputError("bundle file: scaler content id does not match its payload");
    }
    if (bundle.mask_id != bundle.mask.content_id()) {
      throw InputError("bundle file: mask content id does not match its payload");
    }
    if (bundle.mask.n_features != bundle.scaler.size()) {
      throw InputError("bundle file: mask width does not match scaler width");
    }
    if (bundle.model->input_width() != bundle.mask.selected.size()) {
      throw InputError("bundle file: model width does not match mask output");
    }
    return bundle;
  } catch (const json::exception& e) {
    throw InputError(std::string("bundle file: ") + e.what());
  }
}

double inference_time(const Model& model, const Matrix& batch) {
  if (batch.rows() == 0) throw ContractError("inference timing needs a non-empty batch");
  if (batch.cols() != model.input_width()) {
    throw InputError("inference timing: batch width does not match model width");
  }
  using clock = std::chrono::steady_clock;
  const std::size_t n = batch.rows();

  std::vector<Matrix> windows;
  std::vector<std::vector<double>> rows;
  if (model.is_sequence()) {
    windows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      windows.push_back(window_ending_at(batch, i, model.window_length()));
    }
  } else {
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rows.push_back(batch.row(i));
  }

  volatile double sink = 0.0;
  auto run_pass = [&]() {
    double acc = 0.0;
    if (model.is_sequence()) {
      for (const Matrix& w : windows) acc += model.score_sequence(w);
    } else {
      for (const std::vector<double>& r : rows) acc += model.score(r);
    }
    sink = sink + acc;
  };

  // Calibrate the number of passes so each repetition spans >= 10 ms.
  run_pass();  // warm-up
  auto t0 = clock::now();
  run_pass();
  double once = std::chrono::duration<double>(clock::now() - t0).count();
  std::size_t passes = 1;
  if (once < 0.010) {
    passes = static_cast<std::size_t>(0.010 / std::max(once, 1e-9)) + 1;
  }

  constexpr int kReps = 3;
  double total_mean = 0.0;
  for (int rep = 0; rep < kReps; ++rep) {
    t0 = clock::now();
    for (std::size_t p = 0; p < passes; ++p) run_pass();
    const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
    total_mean += elapsed / (static_cast<double>(passes) * static_cast<double>(n));
  }
  return total_mean / static_cast<double>(kReps);
}

}  // namespace jamshield
