#ifndef RANKDTE_TESTS_ORACLES_HPP
#define RANKDTE_TESTS_ORACLES_HPP

// Independent brute-force oracles used by the tests.  These deliberately
// avoid the library's solver internals: the pinball oracle enumerates every
// interpolation basis and the band oracle recomputes order statistics from
// scratch.

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <vector>

namespace rankdte::testing {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double pinball_objective(const Mat& X, const Vec& y, const Vec& beta,
                                double tau) {
  const Vec r = y - X * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    total += r[i] * (tau - (r[i] < 0.0 ? 1.0 : 0.0));
  return total / static_cast<double>(r.size());
}

struct LpOracleResult {
  Vec coefficients;
  double objective = std::numeric_limits<double>::infinity();
};

// Exact pinball minimization by exhaustive vertex enumeration: some optimal
// solution interpolates p observations, so trying every nonsingular
// p-subset finds the optimum.  Only feasible for small n and p.
inline LpOracleResult lp_oracle(const Mat& X, const Vec& y, double tau) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  LpOracleResult best;

  std::vector<Eigen::Index> subset(static_cast<std::size_t>(p));
  const auto evaluate = [&]() {
    Mat XH(p, p);
    Vec yH(p);
    for (Eigen::Index k = 0; k < p; ++k) {
      XH.row(k) = X.row(subset[static_cast<std::size_t>(k)]);
      yH[k] = y[subset[static_cast<std::size_t>(k)]];
    }
    const Eigen::FullPivLU<Mat> lu(XH);
    if (!lu.isInvertible()) return;
    const Vec beta = lu.solve(yH);
    const double obj = pinball_objective(X, y, beta, tau);
    if (obj < best.objective) {
      best.objective = obj;
      best.coefficients = beta;
    }
  };

  // Lexicographic enumeration of all p-subsets of {0, ..., n-1}.
  for (Eigen::Index k = 0; k < p; ++k) subset[static_cast<std::size_t>(k)] = k;
  while (true) {
    evaluate();
    Eigen::Index i = p - 1;
    while (i >= 0 &&
           subset[static_cast<std::size_t>(i)] == n - p + i)
      --i;
    if (i < 0) break;
    ++subset[static_cast<std::size_t>(i)];
    for (Eigen::Index k = i + 1; k < p; ++k)
      subset[static_cast<std::size_t>(k)] = subset[static_cast<std::size_t>(k - 1)] + 1;
  }
  return best;
}

// Order-statistic band oracle: plain sort and index, no interpolation
// conventions shared with the implementation.
inline std::pair<double, double> order_stat_interval(std::vector<double> draws,
                                                     double level) {
  std::sort(draws.begin(), draws.end());
  const double alpha = 1.0 - level;
  const auto n = static_cast<double>(draws.size());
  auto at = [&](double q) {
    const double h = q * (n - 1.0);
    const auto lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, draws.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return draws[lo] * (1.0 - frac) + draws[hi] * frac;
  };
  return {at(alpha / 2.0), at(1.0 - alpha / 2.0)};
}

}  // namespace rankdte::testing

#endif  // RANKDTE_TESTS_ORACLES_HPP
