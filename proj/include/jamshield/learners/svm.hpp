// Soft-margin SVM with an RBF kernel, trained by sequential minimal
// optimization. Stores only the support vectors (alpha > 0).
#pragma once

#include "jamshield/learners.hpp"

namespace jamshield {

class SvmModel : public Model {
public:
  // support: one row per support vector; coef[i] = alpha_i * y_i with
  // y in {-1 benign, +1 attack}; bias b; kernel K(a,b)=exp(-gamma*|a-b|^2).
  SvmModel(SvmParams params, Matrix support, std::vector<double> coef, double bias,
           double gamma);

  Algo algo() const override { return Algo::Svm; }
  std::size_t input_width() const override { return support_.cols(); }
  // Decision value f(x) mapped through a logistic squash 1/(1+exp(-f)) so the
  // score lands in [0,1] with 0.5 exactly on the margin boundary.
  double score(const std::vector<double>& x) const override;

  // Raw decision value f(x) = sum_i coef_i K(s_i, x) + b.
  double decision(const std::vector<double>& x) const;

  const SvmParams& params() const { return params_; }
  const Matrix& support() const { return support_; }
  const std::vector<double>& coef() const { return coef_; }
  double bias() const { return bias_; }
  double gamma() const { return gamma_; }

private:
  SvmParams params_;
  Matrix support_;
  std::vector<double> coef_;
  double bias_ = 0.0;
  double gamma_ = 1.0;
};

// gamma = 1 / (n_features * pooled population variance of all entries of x);
// falls back to 1 / n_features when the variance is not strictly positive.
double rbf_gamma_scale(const Matrix& x);

// Sequential minimal optimization on the dual problem. Labels are 0/1 and are
// mapped to -1/+1 internally. Deterministic: the first working-set index comes
// from ordered sweeps, the second maximizes |E1 - E2| with lower-index
// tie-break. Converges when a full sweep leaves every KKT condition satisfied
// within params.tol, or stops at params.max_passes sweeps.
std::unique_ptr<SvmModel> smo_train(const SvmParams& params, const Matrix& x,
                                    const std::vector<int>& y, double gamma);

}  // namespace jamshield
