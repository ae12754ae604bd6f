#include "jamshield/learners/svm.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "jamshield/common.hpp"

namespace jamshield {

SvmModel::SvmModel(SvmParams params, Matrix support, std::vector<double> coef, double bias,
                   double gamma)
    : params_(params),
      support_(std::move(support)),
      coef_(std::move(coef)),
      bias_(bias),
      gamma_(gamma) {
  if (support_.rows() != coef_.size() || support_.rows() == 0) {
    throw ContractError("svm: support vectors and dual coefficients must be non-empty and aligned");
  }
  if (!(gamma_ > 0.0)) throw ContractError("svm: gamma must be positive");
}

double SvmModel::decision(const std::vector<double>& x) const {
  if (x.size() != support_.cols()) {
    throw InputError("svm: query width " + std::to_string(x.size()) +
                     " does not match training width " + std::to_string(support_.cols()));
  }
  double f = bias_;
  for (std::size_t i = 0; i < support_.rows(); ++i) {
    const double d2 = squared_distance(support_.row_ptr(i), x.data(), support_.cols());
    f += coef_[i] * std::exp(-gamma_ * d2);
  }
  return f;
}

double SvmModel::score(const std::vector<double>& x) const {
  return 1.0 / (1.0 + std::exp(-decision(x)));
}

double rbf_gamma_scale(const Matrix& x) {
  if (x.empty()) throw ContractError("svm: gamma scale needs a non-empty matrix");
  const std::size_t n = x.data().size();
  double mean = 0.0;
  for (double v : x.data()) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double d = static_cast<double>(x.cols());
  if (var > 0.0) return 1.0 / (d * var);
  return 1.0 / d;
}

namespace {

struct SmoState {
  const Matrix& x;
  std::vector<double> y;      // -1 / +1
  std::vector<double> alpha;  // dual coefficients in [0, C]
  std::vector<double> err;    // err[i] = f(x_i) - y_i, maintained incrementally
  std::vector<double> krow_i; // kernel row buffers for the working pair
  std::vector<double> krow_j;
  double b = 0.0;
  double c = 1.0;
  double tol = 1e-3;
  double gamma = 1.0;

  explicit SmoState(const Matrix& features) : x(features) {}

  double kernel(std::size_t i, std::size_t j) const {
    return std::exp(-gamma * squared_distance(x.row_ptr(i), x.row_ptr(j), x.cols()));
  }

  void fill_kernel_row(std::size_t i, std::vector<double>& out) const {
    out.resize(x.rows());
    for (std::size_t m = 0; m < x.rows(); ++m) {
      out[m] = std::exp(-gamma * squared_distance(x.row_ptr(i), x.row_ptr(m), x.cols()));
    }
  }

  bool violates_kkt(std::size_t i) const {
    const double r = err[i] * y[i];
    return (r < -tol && alpha[i] < c) || (r > tol && alpha[i] > 0.0);
  }

  // Second working-set choice: maximize |E_i - E_j|, ties to the lower index.
  std::size_t choose_second(std::size_t i) const {
    std::size_t best = (i == 0) ? 1 : 0;
    double best_gap = -1.0;
    for (std::size_t j = 0; j < err.size(); ++j) {
      if (j == i) continue;
      const double gap = std::fabs(err[i] - err[j]);
      if (gap > best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    return best;
  }

  bool take_step(std::size_t i, std::size_t j) {
    if (i == j) return false;
    const double ai_old = alpha[i];
    const double aj_old = alpha[j];
    const double yi = y[i];
    const double yj = y[j];

    double lo = 0.0;
    double hi = 0.0;
    if (yi != yj) {
      lo = std::max(0.0, aj_old - ai_old);
      hi = std::min(c, c + aj_old - ai_old);
    } else {
      lo = std::max(0.0, ai_old + aj_old - c);
      hi = std::min(c, ai_old + aj_old);
    }
    if (lo >= hi) return false;

    const double kii = 1.0;  // RBF: K(x, x) = 1
    const double kjj = 1.0;
    const double kij = kernel(i, j);
    const double eta = 2.0 * kij - kii - kjj;
    if (eta >= 0.0) return false;

    double aj_new = aj_old - yj * (err[i] - err[j]) / eta;
    aj_new = std::clamp(aj_new, lo, hi);
    if (std::fabs(aj_new - aj_old) < 1e-10) return false;

    const double ai_new = ai_old + yi * yj * (aj_old - aj_new);
    const double di = yi * (ai_new - ai_old);
    const double dj = yj * (aj_new - aj_old);

    const double b1 = b - err[i] - di * kii - dj * kij;
    const double b2 = b - err[j] - di * kij - dj * kjj;
    double b_new = 0.0;
    if (ai_new > 0.0 && ai_new < c) {
      b_new = b1;
    } else if (aj_new > 0.0 && aj_new < c) {
      b_new = b2;
    } else {
      b_new = 0.5 * (b1 + b2);
    }

    fill_kernel_row(i, krow_i);
    fill_kernel_row(j, krow_j);
    const double db = b_new - b;
    for (std::size_t m = 0; m < err.size(); ++m) {
      err[m] += di * krow_i[m] + dj * krow_j[m] + db;
    }

    alpha[i] = ai_new;
    alpha[j] = aj_new;
    b = b_new;
    return true;
  }

  // Try to make progress on a KKT-violating example. The best-gap partner can
  // fail (degenerate curvature, clipped box, or a vanishing step), so fall back
  // to scanning the non-bound examples and then every example, in ascending
  // index order for determinism. Only when no partner admits a step is the
  // violation left for a later pass.
  bool examine_example(std::size_t i) {
    if (take_step(i, choose_second(i))) return true;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] > 0.0 && alpha[j] < c && take_step(i, j)) return true;
    }
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (take_step(i, j)) return true;
    }
    return false;
  }

  // One pass over the examples (all of them, or only the non-bound ones).
  std::size_t sweep(bool examine_all) {
    std::size_t changed = 0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (!examine_all && (alpha[i] <= 0.0 || alpha[i] >= c)) continue;
      if (!violates_kkt(i)) continue;
      if (examine_example(i)) ++changed;
    }
    return changed;
  }
};

}  // namespace

std::unique_ptr<SvmModel> smo_train(const SvmParams& params, const Matrix& x,
                                    const std::vector<int>& y, double gamma) {
  const std::size_t n = x.rows();
  if (n < 2 || y.size() != n) {
    throw ContractError("svm: need at least two aligned samples");
  }
  if (!(gamma > 0.0)) throw ContractError("svm: gamma must be positive");

  SmoState state(x);
  state.c = params.c;
  state.tol = params.tol;
  state.gamma = gamma;
  state.y.resize(n);
  state.alpha.assign(n, 0.0);
  state.err.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    state.y[i] = (y[i] != 0) ? 1.0 : -1.0;
    state.err[i] = -state.y[i];  // f = 0 everywhere at the start
  }

  // Platt's outer loop: full sweeps alternate with sweeps over non-bound
  // examples; convergence is a full sweep with no updates.
  bool examine_all = true;
  for (int pass = 0; pass < params.max_passes; ++pass) {
    const std::size_t changed = state.sweep(examine_all);
    if (examine_all) {
      if (changed == 0) break;
      examine_all = false;
    } else if (changed == 0) {
      examine_all = true;
    }
  }

  std::size_t n_support = 0;
  for (double a : state.alpha) {
    if (a > 0.0) ++n_support;
  }
  if (n_support == 0) {
    // Happens only for degenerate data (for example every sample identical),
    // where no pair admits a step and the zero vector satisfies the tolerance.
    throw InputError("svm: optimization produced no support vectors; data is degenerate");
  }

  Matrix support(n_support, x.cols());
  std::vector<double> coef(n_support);
  std::size_t w = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (state.alpha[i] <= 0.0) continue;
    std::copy(x.row_ptr(i), x.row_ptr(i) + x.cols(), support.row_ptr(w));
    coef[w] = state.alpha[i] * state.y[i];
    ++w;
  }
  return std::make_unique<SvmModel>(params, std::move(support), std::move(coef), state.b, gamma);
}

}  // namespace jamshield
