#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rankdte/mathutil.hpp"
#include "rankdte/qr_engine.hpp"
#include "rankdte/rng.hpp"

using namespace rankdte;

namespace {

DesignMatrix intercept_only(Eigen::Index n) {
  return DesignMatrix::with_intercept(Mat(n, 0), {});
}

DesignMatrix random_design(Eigen::Index n, Eigen::Index k, rng::Stream& s) {
  Mat covs(n, k);
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < k; ++j) {
    names.push_back("x" + std::to_string(j));
    for (Eigen::Index i = 0; i < n; ++i) covs(i, j) = s.uniform(-2.0, 2.0);
  }
  return DesignMatrix::with_intercept(covs, names);
}

}  // namespace

TEST_CASE("intercept-only median is the sample median") {
  const auto X = intercept_only(5);
  Vec y(5);
  y << 1, 2, 3, 4, 5;
  const auto fit = qr::fit_quantile(X, y, 0.5);
  CHECK(fit.coefficients[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.converged);
  CHECK(fit.kkt_inf <= 1e-8);
}

TEST_CASE("intercept-only 0.8 quantile with an outlier") {
  const auto X = intercept_only(5);
  Vec y(5);
  y << 0, 0, 0, 0, 10;
  const auto fit = qr::fit_quantile(X, y, 0.8);
  CHECK(fit.coefficients[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("random instances match the exhaustive LP oracle") {
  rng::Stream s(20240401);
  for (int rep = 0; rep < 25; ++rep) {
    const Eigen::Index n = 8 + static_cast<Eigen::Index>(s.uniform_int(13));
    const Eigen::Index k = static_cast<Eigen::Index>(s.uniform_int(3));
    const auto X = random_design(n, k, s);
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = s.uniform(-5.0, 5.0);
    const double tau = 0.1 + 0.1 * static_cast<double>(s.uniform_int(9));

    const auto oracle = testing::lp_oracle(X.rows, y, tau);
    const auto fit = qr::fit_quantile(X, y, tau);
    CHECK(fit.objective == doctest::Approx(oracle.objective).epsilon(1e-9));
    CHECK(std::abs(fit.objective - oracle.objective) < 1e-6);
    CHECK(fit.kkt_inf <= 1e-8);
  }
}

TEST_CASE("n=12 p=2 instance agrees with the LP oracle within 1e-6") {
  rng::Stream s(7);
  const auto X = random_design(12, 1, s);
  Vec y(12);
  for (Eigen::Index i = 0; i < 12; ++i) y[i] = s.uniform(-3.0, 3.0);
  const auto oracle = testing::lp_oracle(X.rows, y, 0.25);
  const auto fit = qr::fit_quantile(X, y, 0.25);
  CHECK(std::abs(fit.objective - oracle.objective) < 1e-6);
}

TEST_CASE("perturbing any coefficient never improves the objective") {
  rng::Stream s(99);
  for (int rep = 0; rep < 10; ++rep) {
    const auto X = random_design(40, 2, s);
    Vec y(40);
    for (Eigen::Index i = 0; i < 40; ++i) y[i] = s.uniform(-10.0, 10.0);
    const double tau = 0.3;
    const auto fit = qr::fit_quantile(X, y, tau);
    const double scale = std::max(1.0, fit.coefficients.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
      for (double sign : {1.0, -1.0}) {
        Vec b = fit.coefficients;
        b[j] += sign * 1e-4 * scale;
        const double obj = testing::pinball_objective(X.rows, y, b, tau);
        CHECK(obj >= fit.objective - 1e-9);
      }
    }
  }
}

TEST_CASE("affine equivariance of the fit") {
  rng::Stream s(31);
  const auto X = random_design(60, 2, s);
  Vec y(60);
  for (Eigen::Index i = 0; i < 60; ++i) y[i] = s.uniform(-4.0, 4.0);
  for (double tau : {0.2, 0.5, 0.8}) {
    const auto base = qr::fit_quantile(X, y, tau);
    const double a = 2.5, b = -7.0;
    const auto scaled = qr::fit_quantile(X, Vec(a * y.array() + b), tau);
    Vec expected = a * base.coefficients;
    expected[0] += b;
    for (Eigen::Index j = 0; j < expected.size(); ++j)
      CHECK(scaled.coefficients[j] == doctest::Approx(expected[j]).epsilon(1e-7));
  }
}

TEST_CASE("rank-deficient design is rejected") {
  Mat covs(10, 2);
  rng::Stream s(5);
  for (Eigen::Index i = 0; i < 10; ++i) {
    covs(i, 0) = s.uniform(0.0, 1.0);
    covs(i, 1) = 3.0 * covs(i, 0);  // collinear
  }
  const auto X = DesignMatrix::with_intercept(covs, {"a", "b"});
  Vec y = Vec::Random(10);
  CHECK_THROWS_AS(qr::fit_quantile(X, y, 0.5), RankDeficientError);
  CHECK_THROWS_AS(qr::fit_ols(X, y), RankDeficientError);
}

TEST_CASE("fit_process on constant outcome returns constant intercept path") {
  rng::Stream s(12);
  const auto X = random_design(30, 2, s);
  const Vec y = Vec::Constant(30, 4.25);
  const auto proc = qr::fit_process(X, y, {0.1, 0.5, 0.9});
  for (Eigen::Index t = 0; t < proc.grid_size(); ++t) {
    CHECK(proc.coefficients(t, 0) == doctest::Approx(4.25).epsilon(1e-9));
    CHECK(std::abs(proc.coefficients(t, 1)) < 1e-9);
    CHECK(std::abs(proc.coefficients(t, 2)) < 1e-9);
  }
}

TEST_CASE("fit_process location shift moves only the intercept path") {
  rng::Stream s(13);
  const auto X = random_design(80, 1, s);
  Vec y(80);
  for (Eigen::Index i = 0; i < 80; ++i) y[i] = s.uniform(-2.0, 2.0);
  const std::vector<double> grid = {0.25, 0.5, 0.75};
  const auto base = qr::fit_process(X, y, grid);
  const double delta = 11.5;
  const auto shifted = qr::fit_process(X, Vec(y.array() + delta), grid);
  for (Eigen::Index t = 0; t < base.grid_size(); ++t) {
    CHECK(shifted.coefficients(t, 0) ==
          doctest::Approx(base.coefficients(t, 0) + delta).epsilon(1e-6));
    CHECK(shifted.coefficients(t, 1) ==
          doctest::Approx(base.coefficients(t, 1)).epsilon(1e-6));
  }
}

TEST_CASE("fit_process recovers a linear quantile DGP") {
  // Location-scale model: beta(tau) = (a0 + b0 q(tau), a1 + b1 q(tau)).
  rng::Stream s(2024);
  const Eigen::Index n = 4000;
  Mat covs(n, 1);
  Vec y(n);
  const double a0 = 1.0, a1 = 0.5, b0 = 1.0, b1 = 0.3;
  for (Eigen::Index i = 0; i < n; ++i) {
    covs(i, 0) = s.uniform(0.0, 1.0);
    const double z = s.normal();
    y[i] = a0 + a1 * covs(i, 0) + (b0 + b1 * covs(i, 0)) * z;
  }
  const auto X = DesignMatrix::with_intercept(covs, {"x"});
  const std::vector<double> grid = {0.2, 0.35, 0.5, 0.65, 0.8};
  const auto proc = qr::fit_process(X, y, grid);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    const double q = normal_quantile(grid[t]);
    CHECK(proc.coefficients(static_cast<Eigen::Index>(t), 0) ==
          doctest::Approx(a0 + b0 * q).epsilon(0.12));
    CHECK(std::abs(proc.coefficients(static_cast<Eigen::Index>(t), 1) -
                   (a1 + b1 * q)) < 0.25);
  }
}

TEST_CASE("rearrangement sorts the predicted curve") {
  qr::QuantileProcess proc;
  proc.tau_grid = {0.25, 0.5, 0.75};
  proc.coefficients.resize(3, 1);
  proc.coefficients << 5, 3, 4;  // intercept-only, deliberately crossing
  const auto fixed = qr::rearrange(proc);
  Vec x(1);
  x << 1.0;
  const Vec curve = fixed.monotone_curve(x);
  CHECK(curve[0] == 3.0);
  CHECK(curve[1] == 4.0);
  CHECK(curve[2] == 5.0);

  SUBCASE("idempotent on monotone input") {
    qr::QuantileProcess mono;
    mono.tau_grid = {0.25, 0.5, 0.75};
    mono.coefficients.resize(3, 1);
    mono.coefficients << 1, 2, 3;
    const auto out = qr::rearrange(mono);
    const Vec c = out.monotone_curve(x);
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 2.0);
    CHECK(c[2] == 3.0);
  }
  SUBCASE("double rearrangement is rejected") {
    CHECK_THROWS(qr::rearrange(fixed));
  }
}

TEST_CASE("rearranged processes are monotone at sample covariates") {
  rng::Stream s(555);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = 25;
    const auto X = random_design(n, 2, s);
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = s.uniform(-1.0, 1.0);
    const auto proc =
        qr::rearrange(qr::fit_process(X, y, {0.1, 0.3, 0.5, 0.7, 0.9}));
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec curve = proc.monotone_curve(X.rows.row(i).transpose());
      for (Eigen::Index k = 1; k < curve.size(); ++k)
        CHECK(curve[k] >= curve[k - 1]);
    }
  }
}

TEST_CASE("rearrangement never increases the marginal pinball loss at anchors") {
  rng::Stream s(77);
  const Eigen::Index n = 30;
  const auto X = random_design(n, 2, s);
  Vec y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = s.uniform(-1.0, 1.0);
  const std::vector<double> grid = {0.1, 0.25, 0.5, 0.75, 0.9};
  const auto raw = qr::fit_process(X, y, grid);
  const auto fixed = qr::rearrange(raw);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    double loss_raw = 0.0, loss_fixed = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec x = X.rows.row(i).transpose();
      const double pr = raw.raw_curve(x)[static_cast<Eigen::Index>(t)];
      const double pf = fixed.monotone_curve(x)[static_cast<Eigen::Index>(t)];
      const auto rho = [&](double v) {
        const double u = y[i] - v;
        return u * (grid[t] - (u < 0.0 ? 1.0 : 0.0));
      };
      loss_raw += rho(pr);
      loss_fixed += rho(pf);
    }
    CHECK(loss_fixed <= loss_raw + 1e-10);
  }
}

TEST_CASE("predict_quantile interpolates the grid") {
  qr::QuantileProcess proc;
  proc.tau_grid = {0.2, 0.4, 0.6, 0.8};
  proc.coefficients.resize(4, 1);
  proc.coefficients << 1, 2, 4, 8;
  const auto fixed = qr::rearrange(proc);
  Vec x(1);
  x << 1.0;
  CHECK(qr::predict_quantile(fixed, x, 0.4) == doctest::Approx(2.0));
  CHECK(qr::predict_quantile(fixed, x, 0.5) == doctest::Approx(3.0));
  CHECK(qr::predict_quantile(fixed, x, 0.05) == doctest::Approx(1.0));  // clamp
  CHECK(qr::predict_quantile(fixed, x, 0.95) == doctest::Approx(8.0));  // clamp

  SUBCASE("unrearranged prediction is rejected") {
    CHECK_THROWS_AS(qr::predict_quantile(proc, x, 0.5), std::logic_error);
  }
}

TEST_CASE("predicted values stay inside the adjacent grid predictions") {
  rng::Stream s(404);
  const auto X = random_design(50, 2, s);
  Vec y(50);
  for (Eigen::Index i = 0; i < 50; ++i) y[i] = s.uniform(-6.0, 6.0);
  const auto proc = qr::rearrange(qr::fit_process(X, y, qr::default_tau_grid()));
  const auto& grid = proc.tau_grid;
  for (int rep = 0; rep < 1000; ++rep) {
    Vec x(3);
    x << 1.0, s.uniform(-2.0, 2.0), s.uniform(-2.0, 2.0);
    const double tau = s.uniform(grid.front(), grid.back());
    const Vec curve = proc.monotone_curve(x);
    const double v = qr::predict_quantile(proc, x, tau);
    const auto it = std::upper_bound(grid.begin(), grid.end(), tau);
    const auto hi = std::min<std::size_t>(
        static_cast<std::size_t>(it - grid.begin()), grid.size() - 1);
    const std::size_t lo = hi == 0 ? 0 : hi - 1;
    CHECK(v >= curve[static_cast<Eigen::Index>(lo)] - 1e-12);
    CHECK(v <= curve[static_cast<Eigen::Index>(hi)] + 1e-12);
  }
}

TEST_CASE("conditional_cdf round trip and clamping") {
  rng::Stream s(808);
  const auto X = random_design(120, 1, s);
  Vec y(120);
  for (Eigen::Index i = 0; i < 120; ++i)
    y[i] = 2.0 + X.rows(i, 1) + s.normal();
  const auto proc = qr::rearrange(qr::fit_process(X, y, qr::default_tau_grid()));
  Vec x(2);
  x << 1.0, 0.4;

  SUBCASE("round trip within one grid step") {
    for (double tau : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      const double v = qr::predict_quantile(proc, x, tau);
      CHECK(std::abs(qr::conditional_cdf(proc, x, v) - tau) <= 0.011);
    }
  }
  SUBCASE("clamping below and above the curve") {
    CHECK(qr::conditional_cdf(proc, x, -1e9) == doctest::Approx(0.01));
    CHECK(qr::conditional_cdf(proc, x, 1e9) == doctest::Approx(0.99));
  }
}

TEST_CASE("conditional_cdf converges to the analytic conditional law") {
  // y | x ~ N(x, 1): F(y|x) = Phi(y - x).
  auto rmse_at = [&](Eigen::Index n, std::uint64_t seed) {
    rng::Stream s(seed);
    Mat covs(n, 1);
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      covs(i, 0) = s.uniform(-1.0, 1.0);
      y[i] = covs(i, 0) + s.normal();
    }
    const auto X = DesignMatrix::with_intercept(covs, {"x"});
    const auto proc =
        qr::rearrange(qr::fit_process(X, y, qr::default_tau_grid()));
    double se = 0.0;
    int count = 0;
    for (double xv : {-0.5, 0.0, 0.5}) {
      Vec x(2);
      x << 1.0, xv;
      for (double yv = -1.5; yv <= 1.5; yv += 0.25) {
        const double truth = normal_cdf(yv - xv);
        const double est = qr::conditional_cdf(proc, x, xv + yv - xv);
        se += (est - normal_cdf(yv - xv)) * (est - truth);
        ++count;
      }
    }
    return std::sqrt(se / count);
  };
  const double small = rmse_at(150, 42);
  const double large = rmse_at(3000, 43);
  CHECK(large < small);
  CHECK(large < 0.05);
}

TEST_CASE("fit_ols matches exact interpolation and the normal equations") {
  SUBCASE("exactly linear data") {
    rng::Stream s(3);
    const auto X = random_design(25, 2, s);
    Vec beta(3);
    beta << 1.0, -2.0, 0.5;
    const Vec y = X.rows * beta;
    const Vec est = qr::fit_ols(X, y);
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(est[j] == doctest::Approx(beta[j]).epsilon(1e-9));
  }
  SUBCASE("intercept-only gives the mean") {
    const auto X = intercept_only(4);
    Vec y(4);
    y << 1, 2, 3, 6;
    CHECK(qr::fit_ols(X, y)[0] == doctest::Approx(3.0));
  }
  SUBCASE("random instance matches an explicit p x p solve") {
    rng::Stream s(17);
    const auto X = random_design(40, 2, s);
    Vec y(40);
    for (Eigen::Index i = 0; i < 40; ++i) y[i] = s.uniform(-2.0, 2.0);
    const Vec est = qr::fit_ols(X, y);
    const Mat XtX = X.rows.transpose() * X.rows;
    const Vec expected = XtX.fullPivLu().solve(X.rows.transpose() * y);
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(est[j] == doctest::Approx(expected[j]).epsilon(1e-8));
    const Vec resid = y - X.rows * est;
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(std::abs(X.rows.col(j).dot(resid)) /
                static_cast<double>(X.n()) <
            1e-8);
  }
}

TEST_CASE("default tau grid is 99 equally spaced points") {
  const auto grid = qr::default_tau_grid();
  CHECK(grid.size() == 99);
  CHECK(grid.front() == doctest::Approx(0.01));
  CHECK(grid.back() == doctest::Approx(0.99));
}
