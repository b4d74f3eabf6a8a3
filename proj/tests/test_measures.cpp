#include "sigdr/measures.hpp"
#include "sigdr/rng.hpp"
#include "sigdr/signature.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>

using namespace sigdr;

namespace {

TimeSeries series_1d(std::initializer_list<double> values) {
  Eigen::VectorXd t(static_cast<int>(values.size()));
  Eigen::MatrixXd v(static_cast<int>(values.size()), 1);
  int i = 0;
  for (double x : values) {
    t[i] = static_cast<double>(i);
    v(i, 0) = x;
    ++i;
  }
  return TimeSeries(std::move(t), std::move(v));
}

EmpiricalMeasure random_group(int members, int length, int dim, std::mt19937_64& rng) {
  std::vector<TimeSeries> series;
  for (int p = 0; p < members; ++p) {
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(length, 0.0, 1.0);
    Eigen::MatrixXd v(length, dim);
    v.row(0).setZero();
    for (int i = 1; i < length; ++i)
      for (int c = 0; c < dim; ++c) v(i, c) = v(i - 1, c) + 0.3 * uniform(rng, -1.0, 1.0);
    series.emplace_back(std::move(t), std::move(v));
  }
  return EmpiricalMeasure(std::move(series));
}

}  // namespace

TEST_CASE("expected signature of simple groups") {
  const EmpiricalMeasure singleton({series_1d({0.0, 0.5, 1.2})});
  CHECK(expected_signature(singleton, 3).coeffs() ==
        signature(singleton.series[0], 3).coeffs());

  const EmpiricalMeasure pair({series_1d({0.0, 1.0}), series_1d({0.0, 3.0})});
  const TruncatedTensor es = expected_signature(pair, 2);
  CHECK(es.coeff({}) == doctest::Approx(1.0));
  CHECK(es.coeff({0}) == doctest::Approx(2.0));
  CHECK(es.coeff({0, 0}) == doctest::Approx(2.5));

  const EmpiricalMeasure clones({series_1d({0.0, 1.0, 0.5}), series_1d({0.0, 1.0, 0.5})});
  CHECK(expected_signature(clones, 3).coeffs() ==
        signature(clones.series[0], 3).coeffs());
}

TEST_CASE("pathwise expected signature on a shared grid") {
  const EmpiricalMeasure single({series_1d({0.0, 1.0, 3.0})});
  const TensorSeries ps = pathwise_expected_signature(single, 2);
  const auto direct = pathwise_signature(single.series[0], 2);
  REQUIRE(ps.steps.size() == direct.size());
  for (std::size_t k = 0; k < direct.size(); ++k)
    CHECK(ps.steps[k].coeffs() == direct[k].coeffs());

  const EmpiricalMeasure pair({series_1d({0.0, 1.0, 3.0}), series_1d({0.0, 3.0, 9.0})});
  const TensorSeries pes = pathwise_expected_signature(pair, 1);
  REQUIRE(pes.steps.size() == 3);
  CHECK(pes.steps[0].coeffs() == Eigen::Vector2d(1.0, 0.0));
  CHECK(pes.steps[1].coeffs() == Eigen::Vector2d(1.0, 2.0));
  CHECK(pes.steps[2].coeffs() == Eigen::Vector2d(1.0, 6.0));

  // Final step coincides with the expected signature, exactly.
  auto rng = derive_rng(51, 0);
  const EmpiricalMeasure group = random_group(6, 12, 2, rng);
  const TensorSeries full = pathwise_expected_signature(group, 3);
  CHECK(full.steps.back().coeffs() == expected_signature(group, 3).coeffs());
  CHECK(full.steps.front().coeffs() == TruncatedTensor::unit(2, 3).coeffs());
}

TEST_CASE("pathwise expected signature aligns unequal grids by interpolation") {
  Eigen::VectorXd ta(3), tb(4);
  ta << 0.0, 1.0, 2.0;
  tb << 0.0, 0.5, 1.5, 2.0;
  Eigen::MatrixXd va(3, 1), vb(4, 1);
  va << 0.0, 2.0, 1.0;
  vb << 1.0, 1.5, 0.0, 4.0;
  const EmpiricalMeasure group({TimeSeries(ta, va), TimeSeries(tb, vb)});

  const TensorSeries pes = pathwise_expected_signature(group, 2);
  CHECK(pes.times.size() == 5);  // union {0, 0.5, 1, 1.5, 2}
  // The union grid adds collinear knots only, so the final step agrees with
  // the expected signature of the raw members to rounding.
  const TruncatedTensor es = expected_signature(group, 2);
  CHECK((pes.steps.back().coeffs() - es.coeffs()).lpNorm<Eigen::Infinity>() < 1e-12);

  Eigen::VectorXd tc(2);
  tc << 0.5, 2.0;  // starts after the union grid begins
  Eigen::MatrixXd vc(2, 1);
  vc << 0.0, 1.0;
  const EmpiricalMeasure bad({TimeSeries(ta, va), TimeSeries(tc, vc)});
  CHECK_THROWS_WITH_AS(pathwise_expected_signature(bad, 2), doctest::Contains("series 1"),
                       std::invalid_argument);
}

TEST_CASE("ses feature shapes and degenerate groups") {
  CHECK(ses_feature_count(2, 2, 2) == 43);  // c = 7 - 1 = 6, 1 + 6 + 36

  auto rng = derive_rng(53, 0);
  const EmpiricalMeasure group = random_group(3, 8, 2, rng);
  const FeatureVector fv = ses_features(group, 2, 2);
  CHECK(fv.coefficients.size() == 43);
  CHECK(fv.coefficients[0] == doctest::Approx(1.0));

  // Constant members give a constant pathwise expected signature, whose
  // outer signature is the unit vector.
  const EmpiricalMeasure constant({series_1d({2.0, 2.0, 2.0}), series_1d({2.0, 2.0, 2.0})});
  const FeatureVector flat = ses_features(constant, 2, 2);
  CHECK(flat.coefficients[0] == doctest::Approx(1.0));
  CHECK(flat.coefficients.tail(flat.coefficients.size() - 1).lpNorm<Eigen::Infinity>() == 0.0);

  // Singleton 1-d group at inner and outer level 1: the single channel is
  // the running increment, whose own level-1 term is the total increment.
  const EmpiricalMeasure lone({series_1d({0.5, 1.0, 2.5})});
  const FeatureVector tiny = ses_features(lone, 1, 1);
  REQUIRE(tiny.coefficients.size() == 2);
  CHECK(tiny.coefficients[0] == doctest::Approx(1.0));
  CHECK(tiny.coefficients[1] == doctest::Approx(2.0));  // x_T - x_0

  SesOptions tight;
  tight.feature_cap = 10;
  CHECK_THROWS_WITH_AS(ses_features(group, 2, 2, tight), doctest::Contains("43"),
                       std::invalid_argument);
}

TEST_CASE("group-level results are exchangeable in the members") {
  auto rng = derive_rng(59, 0);
  EmpiricalMeasure group = random_group(7, 10, 2, rng);
  EmpiricalMeasure shuffled = group;
  std::reverse(shuffled.series.begin(), shuffled.series.end());
  std::swap(shuffled.series[0], shuffled.series[3]);

  CHECK((expected_signature(group, 3).coeffs() - expected_signature(shuffled, 3).coeffs())
            .lpNorm<Eigen::Infinity>() < 1e-12);
  const TensorSeries a = pathwise_expected_signature(group, 2);
  const TensorSeries b = pathwise_expected_signature(shuffled, 2);
  for (std::size_t k = 0; k < a.steps.size(); ++k)
    CHECK((a.steps[k].coeffs() - b.steps[k].coeffs()).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((ses_features(group, 2, 2).coefficients - ses_features(shuffled, 2, 2).coefficients)
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("ses features vary continuously with the input values") {
  auto rng = derive_rng(61, 0);
  const EmpiricalMeasure group = random_group(4, 10, 2, rng);
  const double eps = 1e-6;
  EmpiricalMeasure bumped = group;
  for (auto& ts : bumped.series) ts.values.array() += eps;
  const Eigen::VectorXd f0 = ses_features(group, 2, 2).coefficients;
  const Eigen::VectorXd f1 = ses_features(bumped, 2, 2).coefficients;
  CHECK((f1 - f0).lpNorm<Eigen::Infinity>() / eps < 1e3);
}

TEST_CASE("feature matrix assembly and CSV round trip") {
  auto rng = derive_rng(67, 0);
  std::vector<EmpiricalMeasure> groups;
  for (int g = 0; g < 4; ++g) groups.push_back(random_group(3, 8, 2, rng));
  const Eigen::MatrixXd features = ses_feature_matrix(groups, 2, 2);
  CHECK(features.rows() == 4);
  CHECK(features.cols() == 43);
  for (int g = 0; g < 4; ++g)
    CHECK((features.row(g).transpose() - ses_features(groups[g], 2, 2).coefficients)
              .lpNorm<Eigen::Infinity>() == 0.0);

  const auto dir = std::filesystem::temp_directory_path() / "sigdr_features_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "features.csv").string();
  save_feature_matrix_csv(features, path);
  const Eigen::MatrixXd back = load_feature_matrix_csv(path);
  CHECK(back == features);
}
