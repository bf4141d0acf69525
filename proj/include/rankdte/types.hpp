#ifndef RANKDTE_TYPES_HPP
#define RANKDTE_TYPES_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rankdte/errors.hpp"

namespace rankdte {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Regression design: n x p with a leading column of ones.
struct DesignMatrix {
  Mat rows;
  std::vector<std::string> column_names;

  Eigen::Index n() const { return rows.rows(); }
  Eigen::Index p() const { return rows.cols(); }

  // Enforces the structural invariants (intercept column, no all-zero
  // column, n >= p).  Rank is checked numerically by the solvers.
  void validate() const;

  // [1, covariates] design.
  static DesignMatrix with_intercept(const Mat& covariates,
                                     const std::vector<std::string>& names);
};

// Two-period panel, one row per unit.
struct Panel {
  std::vector<std::string> unit_ids;
  std::vector<int> treated;  // 0/1
  Vec y_t;
  Vec y_tm1;
  Mat covariates;  // n x k, no intercept
  std::vector<std::string> covariate_names;

  Eigen::Index n() const { return y_t.size(); }
  std::vector<Eigen::Index> treated_indices() const;
  std::vector<Eigen::Index> untreated_indices() const;
  Panel subset(const std::vector<Eigen::Index>& idx) const;
  void validate() const;
};

// One treated unit's observed outcome matched with its imputed
// counterfactual.
struct ImputedPair {
  std::string unit_id;
  double y1 = 0.0;
  double y0_hat = 0.0;
  double rank_tm1 = 0.0;
  Vec covariates;
};

// CDF sampled on an increasing support grid.
struct DistributionCurve {
  Vec support;
  Vec cdf;

  void validate() const;
  // Generalized (left-continuous) inverse: smallest support point with
  // cdf >= tau; the last point if tau exceeds every cdf value.
  double quantile(double tau) const;
  double evaluate(double y) const;  // step interpolation, cdf at largest support <= y
};

// Empirical CDF of `values` sampled on `support`.
DistributionCurve empirical_cdf(const std::vector<double>& values,
                                const Vec& support);

// Equally spaced support over the pooled outcome range with an extra grid
// point at zero when the range straddles it (treated second-period earnings
// can have an atom at exactly zero).
Vec make_support(const std::vector<double>& values, int n_points = 400);

Vec linspace(double lo, double hi, int n);

// Per-treated-unit effects with aligned covariates and imputed baselines.
struct EffectSample {
  Vec deltas;     // y1 - y0_hat
  Mat covariates; // aligned, no intercept
  std::vector<std::string> covariate_names;
  Vec y0_hat;

  Eigen::Index n() const { return deltas.size(); }
  void validate() const;
};

EffectSample to_effect_sample(const std::vector<ImputedPair>& pairs,
                              const std::vector<std::string>& covariate_names);

}  // namespace rankdte

#endif  // RANKDTE_TYPES_HPP
