// Tests for PCA (Jacobi eigendecomposition), mutual information, and the
// weighted-vote feature selection, against closed-form oracles.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jamshield/common.hpp"
#include "jamshield/mutual_info.hpp"
#include "jamshield/pca.hpp"
#include "jamshield/selection.hpp"

using namespace jamshield;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.gaussian();
  return m;
}

}  // namespace

TEST_CASE("jacobi reproduces a closed-form 2x2 eigensystem") {
  // [[2,1],[1,2]] has eigenvalues 3 and 1 with eigenvectors (1,1)/sqrt(2)
  // and (1,-1)/sqrt(2).
  Matrix m = Matrix::from_rows({{2, 1}, {1, 2}});
  std::vector<double> eig;
  Matrix vec;
  jacobi_eigen(m, eig, vec);
  std::vector<double> sorted_eig = eig;
  std::sort(sorted_eig.begin(), sorted_eig.end());
  CHECK(sorted_eig[0] == doctest::Approx(1.0));
  CHECK(sorted_eig[1] == doctest::Approx(3.0));
}

TEST_CASE("perfectly correlated pair gives first component (1,1)/sqrt(2)") {
  Rng rng(5);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 100; ++i) {
    const double x = rng.gaussian();
    rows.push_back({x, x});
  }
  const PcaModel model = pca_fit(Matrix::from_rows(rows));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(model.components.at(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-6));
  CHECK(model.components.at(0, 1) == doctest::Approx(inv_sqrt2).epsilon(1e-6));
  CHECK(model.explained_variance_ratio[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("axis-aligned data recovers diagonal eigenvalues 4 and 1") {
  // Construct data with exact population covariance diag(4, 1): x column
  // pattern (+2, -2), y column pattern (+1, -1) arranged orthogonally.
  Matrix m = Matrix::from_rows({{2, 1}, {2, -1}, {-2, 1}, {-2, -1}});
  const PcaModel model = pca_fit(m);
  CHECK(model.explained_variance[0] == doctest::Approx(4.0));
  CHECK(model.explained_variance[1] == doctest::Approx(1.0));
  // Axis-aligned components with the positive-entry sign convention.
  CHECK(std::abs(model.components.at(0, 0)) == doctest::Approx(1.0));
  CHECK(model.components.at(0, 0) > 0.0);
  CHECK(std::abs(model.components.at(1, 1)) == doctest::Approx(1.0));
  CHECK(model.components.at(1, 1) > 0.0);
}

TEST_CASE("pca on full-rank 40-d data: orthonormal, ratios sum to 1") {
  Matrix m = random_matrix(300, 40, 9);
  const PcaModel model = pca_fit(m);
  // Orthonormality within 1e-8.
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j) {
      const double d = dot(model.components.row_ptr(i), model.components.row_ptr(j), 40);
      CHECK(std::abs(d - (i == j ? 1.0 : 0.0)) < 1e-8);
    }
  double sum = std::accumulate(model.explained_variance_ratio.begin(),
                               model.explained_variance_ratio.end(), 0.0);
  CHECK(std::abs(sum - 1.0) < 1e-9);
  for (std::size_t c = 1; c < 40; ++c)
    CHECK(model.explained_variance[c] <= model.explained_variance[c - 1] + 1e-12);
}

TEST_CASE("pca reconstruction with all components is near-exact") {
  Matrix m = random_matrix(120, 12, 10);
  const PcaModel model = pca_fit(m);
  const Matrix projected = pca_project(model, m);
  const Matrix back = pca_reconstruct(model, projected);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    num += (back.data()[i] - m.data()[i]) * (back.data()[i] - m.data()[i]);
    den += m.data()[i] * m.data()[i];
  }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("projected data has diagonal covariance") {
  Matrix m = random_matrix(250, 8, 11);
  const PcaModel model = pca_fit(m);
  const Matrix projected = pca_project(model, m);
  const Matrix cov = covariance(projected);
  const double largest = model.explained_variance[0];
  for (std::size_t i = 0; i < cov.rows(); ++i)
    for (std::size_t j = 0; j < cov.cols(); ++j)
      if (i != j) CHECK(std::abs(cov.at(i, j)) < 1e-6 * largest);
}

TEST_CASE("pca_fit needs at least 2 samples") {
  CHECK_THROWS_AS(pca_fit(Matrix::from_rows({{1, 2}})), InputError);
}

TEST_CASE("feature scores with all components retained sum to 1") {
  Matrix m = random_matrix(200, 10, 12);
  const PcaModel model = pca_fit(m);
  const auto scores = pca_feature_scores(model, 10);
  const double sum = std::accumulate(scores.begin(), scores.end(), 0.0);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  for (const double s : scores) CHECK(s >= 0.0);
}

TEST_CASE("correlated pair with retain=1 scores both features equally") {
  Rng rng(13);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 80; ++i) {
    const double x = rng.gaussian();
    rows.push_back({x, x});
  }
  const PcaModel model = pca_fit(Matrix::from_rows(rows));
  const auto scores = pca_feature_scores(model, 1);
  CHECK(scores[0] == doctest::Approx(scores[1]).epsilon(1e-9));
}

TEST_CASE("retain out of range is rejected") {
  Matrix m = random_matrix(50, 4, 14);
  const PcaModel model = pca_fit(m);
  CHECK_THROWS_AS(pca_feature_scores(model, 0), InputError);
  CHECK_THROWS_AS(pca_feature_scores(model, 5), InputError);
}

TEST_CASE("components_for_cumulative returns the smallest covering count") {
  Matrix m = Matrix::from_rows({{2, 1}, {2, -1}, {-2, 1}, {-2, -1}});
  const PcaModel model = pca_fit(m);  // ratios 0.8, 0.2
  CHECK(components_for_cumulative(model, 0.5) == 1);
  CHECK(components_for_cumulative(model, 0.8) == 1);
  CHECK(components_for_cumulative(model, 0.81) == 2);
  CHECK(components_for_cumulative(model, 1.0) == 2);
}

TEST_CASE("mi of a feature identical to a balanced label is ln 2") {
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 5000; ++i) {
    x.push_back(i % 2);
    y.push_back(i % 2);
  }
  CHECK(mi_feature(x, y) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(label_entropy(y) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("mi of an independent feature is near zero") {
  Rng rng(77);
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 10000; ++i) {
    x.push_back(rng.gaussian());
    y.push_back(i % 2);
  }
  CHECK(mi_feature(x, y) < 0.02);
  CHECK(mi_feature(x, y) >= 0.0);
}

TEST_CASE("mi matches the closed-form value on an exact discrete pmf") {
  // Joint pmf p(0,0)=0.4, p(0,1)=0.1, p(1,0)=0.1, p(1,1)=0.4 realized exactly
  // with 1000 samples. Oracle: direct sum p*ln(p/(px*py)).
  std::vector<double> x;
  std::vector<int> y;
  const int counts[2][2] = {{400, 100}, {100, 400}};
  for (int xv = 0; xv < 2; ++xv)
    for (int yv = 0; yv < 2; ++yv)
      for (int i = 0; i < counts[xv][yv]; ++i) {
        x.push_back(xv);
        y.push_back(yv);
      }
  double oracle = 0.0;
  for (int xv = 0; xv < 2; ++xv)
    for (int yv = 0; yv < 2; ++yv) {
      const double p = counts[xv][yv] / 1000.0;
      oracle += p * std::log(p / (0.5 * 0.5));
    }
  CHECK(oracle == doctest::Approx(0.1927).epsilon(1e-3));
  CHECK(mi_feature(x, y) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("mi is bounded by the label entropy") {
  Rng rng(21);
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 3000; ++i) {
    const int label = rng.uniform() < 0.25 ? 1 : 0;
    x.push_back(label * 3.0 + rng.gaussian() * 0.1);
    y.push_back(label);
  }
  const double mi = mi_feature(x, y);
  CHECK(mi <= label_entropy(y) + 1e-12);
  CHECK(mi >= -1e-12);
}

TEST_CASE("mi is invariant under strictly monotone transforms") {
  Rng rng(31);
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 4000; ++i) {
    const int label = i % 2;
    x.push_back(label + rng.gaussian() * 0.8);
    y.push_back(label);
  }
  std::vector<double> exp_x(x.size()), cube_x(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    exp_x[i] = std::exp(x[i]);
    cube_x[i] = x[i] * x[i] * x[i];
  }
  const double base = mi_feature(x, y);
  CHECK(mi_feature(exp_x, y) == doctest::Approx(base).epsilon(1e-9));
  CHECK(mi_feature(cube_x, y) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("mi with a single class present is rejected") {
  std::vector<double> x = {1, 2, 3};
  std::vector<int> y = {1, 1, 1};
  CHECK_THROWS_AS(mi_feature(x, y), InputError);
}

TEST_CASE("rank scores map best to 1, worst to 0, ties to lower index first") {
  const auto rs = rank_scores({0.5, 0.9, 0.1, 0.9});
  CHECK(rs[1] == doctest::Approx(1.0));          // first of the tied pair
  CHECK(rs[3] == doctest::Approx(2.0 / 3.0));    // second of the tied pair
  CHECK(rs[0] == doctest::Approx(1.0 / 3.0));
  CHECK(rs[2] == doctest::Approx(0.0));
  for (const double v : rs) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("weighted vote keeps the top-k of an agreed ranking") {
  std::vector<double> pca(40), mi(40);
  for (std::size_t i = 0; i < 40; ++i) {
    pca[i] = 40.0 - static_cast<double>(i);
    mi[i] = 4000.0 - static_cast<double>(i);  // same ordering, different scale
  }
  const SelectionMask a = weighted_vote_select(pca, mi, 20, 0.5, 0.5);
  const SelectionMask b = weighted_vote_select(pca, mi, 20, 0.9, 0.1);
  REQUIRE(a.selected.size() == 20);
  CHECK(a.selected == b.selected);
  for (std::size_t i = 0; i < 20; ++i) CHECK(a.selected[i] == i);
}

TEST_CASE("combined tie at the cut selects the lower index") {
  // Nineteen features outrank everything; features 7 and 31 hold symmetric
  // ranks in the two methods (7 is 20th by PCA and 21st by MI, 31 the
  // reverse), giving them exactly equal combined scores at the k=20 cut.
  std::vector<double> pca(40), mi(40);
  for (std::size_t i = 0; i < 40; ++i) {
    if (i < 20 && i != 7) {
      pca[i] = mi[i] = 1000.0 - static_cast<double>(i);
    } else {
      pca[i] = mi[i] = 100.0 - static_cast<double>(i);
    }
  }
  pca[7] = 500.0;
  mi[7] = 400.0;
  pca[31] = 400.0;
  mi[31] = 500.0;
  const SelectionMask mask = weighted_vote_select(pca, mi, 20, 0.5, 0.5);
  CHECK(mask.combined_score[7] == mask.combined_score[31]);
  const bool has7 = std::find(mask.selected.begin(), mask.selected.end(), 7) !=
                    mask.selected.end();
  const bool has31 = std::find(mask.selected.begin(), mask.selected.end(), 31) !=
                     mask.selected.end();
  CHECK(has7);
  CHECK_FALSE(has31);
}

TEST_CASE("invalid selection arguments are rejected") {
  std::vector<double> s(40, 1.0);
  CHECK_THROWS_AS(weighted_vote_select(s, s, 0, 0.5, 0.5), InputError);
  CHECK_THROWS_AS(weighted_vote_select(s, s, 41, 0.5, 0.5), InputError);
  CHECK_THROWS_AS(weighted_vote_select(s, s, 20, 0.0, 0.0), InputError);
  CHECK_THROWS_AS(weighted_vote_select(s, s, 20, -1.0, 0.5), InputError);
}

TEST_CASE("apply_mask follows mask order and validates width") {
  SelectionMask mask;
  mask.n_features = 5;
  mask.selected = {3, 0, 4};
  const std::vector<double> values = {10, 11, 12, 13, 14};
  const auto out = apply_mask(mask, values);
  CHECK(out == std::vector<double>{13, 10, 14});
  CHECK_THROWS_AS(apply_mask(mask, std::vector<double>{1, 2}), InputError);
}

TEST_CASE("mask scatter/gather round-trip restores masked positions") {
  SelectionMask mask;
  mask.n_features = 6;
  mask.selected = {5, 1, 2};
  const std::vector<double> values = {0.5, 1.5, 2.5, 3.5, 4.5, 5.5};
  const auto packed = apply_mask(mask, values);
  std::vector<double> scattered(6, 0.0);
  for (std::size_t i = 0; i < mask.selected.size(); ++i)
    scattered[mask.selected[i]] = packed[i];
  for (const std::size_t i : mask.selected)
    CHECK(scattered[i] == values[i]);
}

TEST_CASE("mask serialization is deterministic and round-trips") {
  std::vector<double> pca(40), mi(40);
  Rng rng(3);
  for (std::size_t i = 0; i < 40; ++i) {
    pca[i] = rng.uniform();
    mi[i] = rng.uniform();
  }
  SelectionMask mask = weighted_vote_select(pca, mi, 20, 0.6, 0.4);
  mask.dataset_hash = "deadbeef";
  mask.seed = 42;
  const std::string text1 = mask.to_json_text();
  const SelectionMask re = SelectionMask::from_json_text(text1);
  CHECK(re.to_json_text() == text1);
  CHECK(re.selected == mask.selected);
  CHECK(re.w_pca == mask.w_pca);
  CHECK(re.dataset_hash == "deadbeef");
  const SelectionMask again = weighted_vote_select(pca, mi, 20, 0.6, 0.4);
  SelectionMask again2 = again;
  again2.dataset_hash = "deadbeef";
  again2.seed = 42;
  CHECK(again2.to_json_text() == text1);
}

TEST_CASE("mask JSON with duplicate indices is rejected") {
  SelectionMask mask;
  mask.n_features = 40;
  mask.selected = {1, 1};
  mask.pca_score.assign(40, 0.0);
  mask.mi_score.assign(40, 0.0);
  mask.combined_score.assign(40, 0.0);
  CHECK_THROWS_AS(SelectionMask::from_json_text(mask.to_json_text()), InputError);
}
