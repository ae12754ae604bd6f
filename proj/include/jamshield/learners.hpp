// The six adaptive-module classifiers (knn, dt, lstm, svm, mlp, rf) plus the
// three comparison baselines, behind one train/predict contract with JSON
// model serialization.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "jamshield/common.hpp"
#include "jamshield/dataset.hpp"
#include "jamshield/matrix.hpp"
#include "jamshield/selection.hpp"

namespace jamshield {

enum class Algo { Knn, Dt, Lstm, Svm, Mlp, Rf, Comp1, Comp2, Comp3 };

// The six adaptive-module algorithms in their fixed tie-break order.
extern const std::vector<Algo> kAutoCmAlgos;

std::string algo_to_string(Algo algo);
Algo algo_from_string(const std::string& text);

struct KnnParams {
  int k = 10;  // distance-weighted, Euclidean metric
};

struct DtParams {
  int max_depth = 15;
  int min_samples_split = 10;  // entropy criterion
};

struct RfParams {
  int trees = 150;
  int max_depth = 20;
  int min_samples_split = 5;  // gini criterion; mtry = ceil(sqrt(width))
};

struct SvmParams {
  double c = 1.0;          // box constraint
  double tol = 1e-3;       // KKT tolerance
  int max_passes = 10000;  // SMO outer-loop bound
};

struct NetParams {
  std::vector<int> hidden = {100, 50, 25};  // relu hidden, softmax output
  double lr = 0.01;
  int batch = 128;
  int epochs = 50;       // early stop: loss gain < 1e-5 for 5 epochs
  double dropout = 0.0;  // training-time inverted dropout on hidden layers
};

struct LstmParams {
  int layers = 2;
  int hidden = 50;
  double lr = 0.001;
  int batch = 128;
  int epochs = 50;
  int window = 10;  // consecutive ticks per sequence, stride 1
};

struct LearnerSpec {
  Algo algo = Algo::Knn;
  std::uint64_t seed = 0;
  KnnParams knn;
  DtParams dt;
  RfParams rf;
  SvmParams svm;
  NetParams net;
  LstmParams lstm;

  // Spec with each algorithm's pinned defaults (baselines get their fixed
  // layer layouts: comp1 [453,207,374]; comp2 [128,128] + stacked rbf svm;
  // comp3 five hidden layers of 1000 with dropout 0.3, lr 0.01, batch 64).
  static LearnerSpec defaults(Algo algo, std::uint64_t seed);
};

// A fitted classifier. score() returns the probability of the attack class.
class Model {
public:
  virtual ~Model() = default;
  virtual Algo algo() const = 0;
  virtual std::size_t input_width() const = 0;
  virtual double score(const std::vector<double>& x) const = 0;
  virtual bool is_sequence() const { return false; }
  // Ticks of history a sequence model wants per prediction (1 otherwise).
  virtual std::size_t window_length() const { return 1; }
  // Sequence models score a window of consecutive ticks (rows) and attribute
  // the result to the final row. Non-sequence models reject this call.
  virtual double score_sequence(const Matrix& window) const;
};

struct Prediction {
  bool attack = false;
  double score = 0.0;  // probability of attack
};

// class = (score >= 0.5); the tie goes to attack.
Prediction predict(const Model& model, const std::vector<double>& x);
Prediction predict_sequence(const Model& model, const Matrix& window);

// Trains the spec'd algorithm. Requires >= 2 samples of each class, finite
// inputs; deterministic under spec.seed.
std::unique_ptr<Model> train(const LearnerSpec& spec, const Matrix& x,
                             const std::vector<int>& y);

// Serialization: versioned JSON with weight matrices as little-endian f64
// row-major binary payloads (base64 in the JSON). Round-trips exactly.
std::string model_to_json_text(const Model& model);
std::unique_ptr<Model> model_from_json_text(const std::string& text);

// A deployable unit: the fitted model plus the scaler and mask it was trained
// under, with content identifiers for provenance checks.
struct ModelBundle {
  LearnerSpec spec;
  StandardScaler scaler;
  SelectionMask mask;
  std::shared_ptr<const Model> model;

  std::string scaler_id;  // content hash of the scaler
  std::string mask_id;    // content hash of the mask

  // Scale -> mask -> predict for one raw manifest-width sample.
  Prediction predict_raw(const std::vector<double>& raw) const;

  void save(const std::string& path) const;
  static ModelBundle load(const std::string& path);
};

std::string scaler_content_id(const StandardScaler& scaler);

// Mean wall-clock seconds per sample over at least 3 repetitions.
double inference_time(const Model& model, const Matrix& batch);

// Gradient verification for the neural learners: trains nothing, builds the
// spec'd network at its random init on the given data (dense nets get a small
// parameter jitter so no ReLU pre-activation sits exactly on the kink), and
// compares analytic gradients against central finite differences (step h).
// Returns the maximum relative error over all parameters.
double gradient_check(const LearnerSpec& spec, const Matrix& x,
                      const std::vector<int>& y, double h = 1e-5);

}  // namespace jamshield
