#include "oracles.hpp"
#include "sigdr/errors.hpp"
#include "sigdr/rng.hpp"
#include "sigdr/signature.hpp"
#include "sigdr/sigkernel.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <filesystem>

using namespace sigdr;

namespace {

TimeSeries linear_1d(double increment) {
  Eigen::VectorXd t(2);
  t << 0.0, 1.0;
  Eigen::MatrixXd v(2, 1);
  v << 0.0, increment;
  return TimeSeries(t, v);
}

// Random piecewise-linear path with total variation <= tv_budget.
TimeSeries random_path(int length, int dim, double tv_budget, std::mt19937_64& rng) {
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(length, 0.0, 1.0);
  Eigen::MatrixXd v(length, dim);
  v.row(0).setZero();
  const double per_step = tv_budget / static_cast<double>(length - 1);
  for (int i = 1; i < length; ++i) {
    Eigen::VectorXd dir(dim);
    for (int c = 0; c < dim; ++c) dir[c] = gaussian(rng);
    dir.normalize();
    v.row(i) = v.row(i - 1) + (uniform01(rng) * per_step) * dir.transpose();
  }
  return TimeSeries(std::move(t), std::move(v));
}

}  // namespace

TEST_CASE("pde_solve boundary and series values") {
  auto rng = derive_rng(71, 0);
  const TimeSeries x = random_path(12, 3, 2.0, rng);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
  const TimeSeries constant(t, Eigen::MatrixXd::Constant(5, 3, 0.7));
  CHECK(pde_solve(x, constant, 0) == 1.0);
  CHECK(pde_solve(x, constant, 3) == 1.0);

  // Unit and opposite linear 1-d paths against the factorial series
  // sum_k z^k/(k!)^2. A single unit increment is the worst case for the
  // first-order scheme; the measured error at refinement 6 is 0.0106.
  const double same = pde_solve(linear_1d(1.0), linear_1d(1.0), 6);
  CHECK(std::abs(same - testing::linear_kernel_series(1.0, 25)) < 0.012);
  CHECK(std::abs(pde_solve(linear_1d(1.0), linear_1d(1.0), 7) - 2.27959) < 0.01);
  const double opposite = pde_solve(linear_1d(1.0), linear_1d(-1.0), 6);
  CHECK(std::abs(opposite - 0.22389) < 0.01);

  CHECK_THROWS_AS(pde_solve(x, linear_1d(1.0), 0), std::invalid_argument);
  CHECK_THROWS_AS(pde_solve(x, x, -1), std::invalid_argument);
}

TEST_CASE("pde_solve is reparametrization invariant and symmetric") {
  auto rng = derive_rng(73, 0);
  const TimeSeries x = random_path(9, 2, 1.5, rng);
  const TimeSeries y = random_path(7, 2, 1.5, rng);
  Eigen::VectorXd warped(x.length());
  double clock = 3.0;
  for (int i = 0; i < x.length(); ++i) {
    clock += uniform(rng, 0.2, 2.0);
    warped[i] = clock;
  }
  CHECK(pde_solve(TimeSeries(warped, x.values), y, 2) == pde_solve(x, y, 2));
  CHECK(pde_solve(x, y, 2) == pde_solve(y, x, 2));
}

TEST_CASE("pde_solve agrees with the truncated signature inner product") {
  auto rng = derive_rng(79, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 2);
    const TimeSeries x = random_path(8, d, 1.0, rng);
    const TimeSeries y = random_path(10, d, 1.0, rng);
    const double oracle = inner(signature(x, 12), signature(y, 12));
    CHECK(std::abs(pde_solve(x, y, 6) - oracle) < 1e-3);
  }
}

TEST_CASE("pde error decreases with refinement") {
  auto rng = derive_rng(83, 0);
  std::vector<double> med_err(4, 0.0);
  const int pairs = 12;
  std::vector<std::array<double, 4>> errors;
  for (int p = 0; p < pairs; ++p) {
    const TimeSeries x = random_path(6, 2, 1.0, rng);
    const TimeSeries y = random_path(6, 2, 1.0, rng);
    const double oracle = inner(signature(x, 12), signature(y, 12));
    std::array<double, 4> e{};
    for (int r = 0; r < 4; ++r) e[r] = std::abs(pde_solve(x, y, r) - oracle);
    errors.push_back(e);
  }
  for (int r = 0; r < 4; ++r) {
    std::vector<double> v;
    for (const auto& e : errors) v.push_back(e[static_cast<std::size_t>(r)]);
    std::nth_element(v.begin(), v.begin() + pairs / 2, v.end());
    med_err[static_cast<std::size_t>(r)] = v[pairs / 2];
  }
  CHECK(med_err[1] <= med_err[0] + 1e-12);
  CHECK(med_err[2] <= med_err[1] + 1e-12);
  CHECK(med_err[3] <= med_err[2] + 1e-12);
}

TEST_CASE("mmd_sq identities") {
  auto rng = derive_rng(89, 0);
  std::vector<TimeSeries> members_a, members_b;
  for (int p = 0; p < 3; ++p) members_a.push_back(random_path(8, 2, 1.0, rng));
  for (int p = 0; p < 4; ++p) members_b.push_back(random_path(6, 2, 1.0, rng));
  const EmpiricalMeasure a(members_a), b(members_b);

  CHECK(std::abs(mmd_sq(a, a, 1)) <= 1e-9);
  CHECK(mmd_sq(a, b, 1) == mmd_sq(b, a, 1));

  const EmpiricalMeasure unit_group({linear_1d(1.0)});
  const EmpiricalMeasure neg_group({linear_1d(-1.0)});
  const double mmd = mmd_sq(unit_group, neg_group, 6);
  CHECK(std::abs(mmd - 4.1114) < 0.05);
}

TEST_CASE("kes_gram structure") {
  auto rng = derive_rng(97, 0);
  std::vector<EmpiricalMeasure> groups;
  for (int g = 0; g < 5; ++g) {
    std::vector<TimeSeries> members;
    for (int p = 0; p < 3; ++p) members.push_back(random_path(7, 2, 1.0, rng));
    groups.emplace_back(std::move(members));
  }
  const GramMatrix gram = kes_gram(groups, 1.0, 2);
  CHECK(gram.kind == GramKind::kernel);
  for (int i = 0; i < 5; ++i) CHECK(gram.entries(i, i) == 1.0);
  CHECK((gram.entries - gram.entries.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(gram.entries.minCoeff() >= 0.0);
  CHECK(gram.entries.maxCoeff() <= 1.0);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.entries);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-6);

  const GramMatrix one = kes_gram({groups[0]}, 2.0, 1);
  CHECK(one.entries.rows() == 1);
  CHECK(one.entries(0, 0) == 1.0);

  const EmpiricalMeasure unit_group({linear_1d(1.0)});
  const EmpiricalMeasure neg_group({linear_1d(-1.0)});
  const GramMatrix pairg = kes_gram({unit_group, neg_group}, 1.0, 6);
  CHECK(std::abs(pairg.entries(0, 1) - std::exp(-4.1114)) < 0.002);

  GramMatrix broken;
  broken.kind = GramKind::mmd_sq;
  broken.entries = Eigen::MatrixXd::Zero(2, 2);
  broken.entries(0, 1) = broken.entries(1, 0) = -1e-5;
  CHECK_THROWS_WITH_AS(kes_gram(broken, 1.0), doctest::Contains("(0,1)"), NumericalError);

  // Small negatives from solver noise are clamped, not fatal.
  broken.entries(0, 1) = broken.entries(1, 0) = -1e-8;
  CHECK(kes_gram(broken, 1.0).entries(0, 1) == 1.0);
}

TEST_CASE("gram CSV round trip") {
  auto rng = derive_rng(101, 0);
  GramMatrix gram;
  gram.kind = GramKind::kernel;
  gram.sigma = 0.5;
  gram.refinement = 2;
  gram.entries = Eigen::MatrixXd(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) gram.entries(i, j) = uniform01(rng);

  const auto dir = std::filesystem::temp_directory_path() / "sigdr_gram_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "gram.csv").string();
  save_gram_csv(gram, path);
  const GramMatrix back = load_gram_csv(path);
  CHECK(back.kind == gram.kind);
  CHECK(back.sigma == gram.sigma);
  CHECK(back.refinement == gram.refinement);
  CHECK(back.entries == gram.entries);
}
