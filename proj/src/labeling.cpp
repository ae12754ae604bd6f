#include "jamshield/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace jamshield {
namespace {

constexpr double kVarianceFloor = 1e-6;
constexpr double kLlGainTol = 1e-6;
constexpr int kMaxKmeansIters = 300;
constexpr int kMaxEmIters = 200;

bool rows_equal(const Matrix& x, std::size_t a, std::size_t b) {
  return squared_distance(x.row_ptr(a), x.row_ptr(b), x.cols()) == 0.0;
}

// Requires at least `k` distinct rows; scans until it has seen that many.
void require_distinct_rows(const Matrix& x, int k) {
  std::vector<std::size_t> distinct;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    bool seen = false;
    for (std::size_t d : distinct) {
      if (rows_equal(x, i, d)) {
        seen = true;
        break;
      }
    }
    if (!seen) {
      distinct.push_back(i);
      if (distinct.size() >= static_cast<std::size_t>(k)) return;
    }
  }
  throw InputError("kmeans: input has fewer than " + std::to_string(k) +
                   " distinct points");
}

// D^2-weighted seeding: each next center is drawn with probability
// proportional to the squared distance to the nearest center chosen so far.
Matrix kmeanspp_seed(const Matrix& x, int k, Rng& rng) {
  const std::size_t n = x.rows();
  const std::size_t width = x.cols();
  Matrix centers(static_cast<std::size_t>(k), width);

  const std::size_t first = rng.uniform_index(n);
  for (std::size_t d = 0; d < width; ++d) centers.at(0, d) = x.at(first, d);

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = squared_distance(x.row_ptr(i), centers.row_ptr(0), width);
  }

  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > u && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      // All points coincide with chosen centers; the distinct-rows precheck
      // makes this unreachable, but stay deterministic if it ever happens.
      throw InputError("kmeans: seeding ran out of distinct points");
    }
    for (std::size_t d = 0; d < width; ++d) {
      centers.at(static_cast<std::size_t>(c), d) = x.at(pick, d);
    }
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(
          d2[i], squared_distance(x.row_ptr(i),
                                  centers.row_ptr(static_cast<std::size_t>(c)),
                                  width));
    }
  }
  return centers;
}

std::size_t nearest_center(const Matrix& centers, const double* row,
                           std::size_t width) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(row, centers.row_ptr(c), width);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Sufficient statistics of one mixture component under soft responsibilities.
struct ComponentStats {
  double weight_sum = 0.0;
  std::vector<double> mean;
  std::vector<double> variance;
};

}  // namespace

Matrix kmeans_fit(const Matrix& x, int k, std::uint64_t seed) {
  if (k < 1) throw ContractError("kmeans: k must be at least 1");
  if (x.rows() == 0 || x.cols() == 0) {
    throw InputError("kmeans: empty input matrix");
  }
  require_distinct_rows(x, k);

  const std::size_t n = x.rows();
  const std::size_t width = x.cols();
  const std::size_t kk = static_cast<std::size_t>(k);

  Rng rng(seed);
  Matrix centers = kmeanspp_seed(x, k, rng);

  std::vector<std::size_t> assign(n, 0);
  std::vector<std::size_t> prev(n, kk);  // sentinel: differs from any cluster
  for (int iter = 0; iter < kMaxKmeansIters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = nearest_center(centers, x.row_ptr(i), width);
    }
    if (assign == prev) break;
    prev = assign;

    Matrix sums(kk, width);
    std::vector<std::size_t> counts(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = assign[i];
      ++counts[c];
      for (std::size_t d = 0; d < width; ++d) sums.at(c, d) += x.at(i, d);
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] > 0) {
        for (std::size_t d = 0; d < width; ++d) {
          centers.at(c, d) = sums.at(c, d) / static_cast<double>(counts[c]);
        }
      } else {
        // Re-seed an emptied cluster with the point farthest from its own
        // center (ties to the lower index), which keeps the run deterministic.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = squared_distance(
              x.row_ptr(i), centers.row_ptr(assign[i]), width);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        for (std::size_t d = 0; d < width; ++d) centers.at(c, d) = x.at(far, d);
      }
    }
  }
  return centers;
}

std::array<double, 2> ClusterModel::posteriors(const double* row,
                                               std::size_t width) const {
  if (width != means.cols()) {
    throw InputError("cluster model: sample width " + std::to_string(width) +
                     " does not match the fitted width " +
                     std::to_string(means.cols()));
  }
  std::array<double, 2> logp{};
  for (std::size_t c = 0; c < 2; ++c) {
    double acc = std::log(weights[c]);
    for (std::size_t d = 0; d < width; ++d) {
      const double v = variances.at(c, d);
      const double diff = row[d] - means.at(c, d);
      acc += -0.5 * std::log(2.0 * M_PI * v) - diff * diff / (2.0 * v);
    }
    logp[c] = acc;
  }
  const double m = std::max(logp[0], logp[1]);
  const double e0 = std::exp(logp[0] - m);
  const double e1 = std::exp(logp[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

ClusterModel em_refine(const Matrix& x, const Matrix& centroids,
                       const std::vector<std::size_t>& distress_columns) {
  if (centroids.rows() != 2) {
    throw InputError("em: expected exactly 2 centroids, got " +
                     std::to_string(centroids.rows()));
  }
  if (centroids.cols() != x.cols()) {
    throw InputError("em: centroid width " + std::to_string(centroids.cols()) +
                     " does not match data width " + std::to_string(x.cols()));
  }
  if (x.rows() == 0) throw InputError("em: empty input matrix");
  for (std::size_t d : distress_columns) {
    if (d >= x.cols()) {
      throw ContractError("em: distress column index out of range");
    }
  }

  const std::size_t n = x.rows();
  const std::size_t width = x.cols();

  ClusterModel model;
  model.centroids = centroids;
  model.means = Matrix(2, width);
  model.variances = Matrix(2, width);

  // Global column variances back a component that ends up with no mass.
  const std::vector<double> global_var = column_variances(x);

  // resp[i] = responsibility of component 1 for sample i (component 0 gets
  // the complement). Initialized from the hard nearest-centroid partition.
  std::vector<double> resp(n);
  for (std::size_t i = 0; i < n; ++i) {
    resp[i] =
        (nearest_center(centroids, x.row_ptr(i), width) == 1) ? 1.0 : 0.0;
  }

  auto m_step = [&]() {
    for (std::size_t c = 0; c < 2; ++c) {
      double nc = 0.0;
      std::vector<double> mean(width, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = (c == 1) ? resp[i] : 1.0 - resp[i];
        nc += r;
        for (std::size_t d = 0; d < width; ++d) mean[d] += r * x.at(i, d);
      }
      if (nc < 1e-12) {
        // A component with no mass keeps the centroid as its mean and falls
        // back to the global spread; its weight is floored so it stays a
        // valid (if negligible) mixture member.
        model.weights[c] = 1e-12;
        for (std::size_t d = 0; d < width; ++d) {
          model.means.at(c, d) = centroids.at(c, d);
          model.variances.at(c, d) = std::max(global_var[d], kVarianceFloor);
        }
        continue;
      }
      model.weights[c] = nc / static_cast<double>(n);
      for (std::size_t d = 0; d < width; ++d) {
        model.means.at(c, d) = mean[d] / nc;
      }
      std::vector<double> var(width, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = (c == 1) ? resp[i] : 1.0 - resp[i];
        if (r == 0.0) continue;
        for (std::size_t d = 0; d < width; ++d) {
          const double diff = x.at(i, d) - model.means.at(c, d);
          var[d] += r * diff * diff;
        }
      }
      for (std::size_t d = 0; d < width; ++d) {
        model.variances.at(c, d) = std::max(var[d] / nc, kVarianceFloor);
      }
    }
    const double wsum = model.weights[0] + model.weights[1];
    model.weights[0] /= wsum;
    model.weights[1] /= wsum;
  };

  m_step();

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kMaxEmIters; ++iter) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::array<double, 2> logp{};
      for (std::size_t c = 0; c < 2; ++c) {
        double acc = std::log(model.weights[c]);
        for (std::size_t d = 0; d < width; ++d) {
          const double v = model.variances.at(c, d);
          const double diff = x.at(i, d) - model.means.at(c, d);
          acc += -0.5 * std::log(2.0 * M_PI * v) - diff * diff / (2.0 * v);
        }
        logp[c] = acc;
      }
      const double m = std::max(logp[0], logp[1]);
      const double lse = m + std::log(std::exp(logp[0] - m) +
                                      std::exp(logp[1] - m));
      ll += lse;
      resp[i] = std::exp(logp[1] - lse);
    }
    model.ll_trace.push_back(ll);
    if (iter > 0 && ll - prev_ll < kLlGainTol) break;
    prev_ll = ll;
    m_step();
  }

  // The attack component is the one whose mean looks more distressed; an
  // exact tie resolves to component 1.
  double score[2] = {0.0, 0.0};
  for (std::size_t c = 0; c < 2; ++c) {
    if (distress_columns.empty()) {
      for (std::size_t d = 0; d < width; ++d) score[c] += model.means.at(c, d);
      score[c] /= static_cast<double>(width);
    } else {
      for (std::size_t d : distress_columns) score[c] += model.means.at(c, d);
      score[c] /= static_cast<double>(distress_columns.size());
    }
  }
  model.attack_component = (score[1] >= score[0]) ? 1 : 0;
  return model;
}

std::vector<std::size_t> distress_feature_indices(
    const FeatureManifest& manifest) {
  static const char* kTokens[] = {"retry", "fail", "fcs",
                                  "drop",  "timeout", "loss"};
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const FeatureDef& f = manifest.feature(i);
    if (f.layer != FeatureLayer::Link) continue;
    for (const char* token : kTokens) {
      if (f.name.find(token) != std::string::npos) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

std::vector<PseudoLabel> assign_labels(const ClusterModel& model,
                                       const Matrix& x) {
  std::vector<PseudoLabel> out;
  out.reserve(x.rows());
  const std::size_t attack =
      static_cast<std::size_t>(model.attack_component);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const std::array<double, 2> p = model.posteriors(x.row_ptr(i), x.cols());
    const double pa = p[attack];
    PseudoLabel label;
    if (pa >= 0.5) {
      label.label = 1;
      label.confidence = pa;
    } else {
      label.label = 0;
      label.confidence = 1.0 - pa;
    }
    out.push_back(label);
  }
  return out;
}

std::vector<PseudoLabel> pseudo_label(
    const Matrix& scaled, const std::vector<std::size_t>& distress_columns,
    std::uint64_t seed) {
  const Matrix centroids = kmeans_fit(scaled, 2, seed);
  const ClusterModel model = em_refine(scaled, centroids, distress_columns);
  return assign_labels(model, scaled);
}

}  // namespace jamshield
