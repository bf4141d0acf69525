#ifndef RANKDTE_ROBUSTNESS_HPP
#define RANKDTE_ROBUSTNESS_HPP

#include <cstdint>
#include <vector>

#include "rankdte/counterfactual.hpp"
#include "rankdte/qr_engine.hpp"
#include "rankdte/types.hpp"

namespace rankdte::robust {

// Rank correlation with mid-rank tie handling.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

struct PlaceboOptions {
  std::vector<double> tau_grid = qr::default_tau_grid();
  qr::FitOptions fit;
  int support_points = 400;
};

// Rank-invariance placebo: imputes untreated units' period-t outcome from
// their own period-(t-1) conditional rank (all processes fit on untreated
// data) and compares the dispersion of the resulting placebo effects with
// the dispersion of the treated effect estimates.
struct PlaceboHeterogeneity {
  double sd_effect_treated = 0.0;
  double sd_effect_untreated = 0.0;
  double spearman_treated = 0.0;    // rank correlation of (y_{t-1}, y_t)
  double spearman_untreated = 0.0;
  // CDFs of |effect - group mean| on a shared support.
  DistributionCurve heterogeneity_treated;
  DistributionCurve heterogeneity_untreated;
  std::vector<double> effects_treated;
  std::vector<double> effects_untreated;
};

PlaceboHeterogeneity placebo_heterogeneity(const Panel& panel,
                                           const PlaceboOptions& opts = {});

struct RtmOptions {
  int n_pseudo_treated = 0;
  int R = 1000;
  std::uint64_t seed = 0;
  std::vector<double> second_stage_taus;  // defaults to 0.1..0.9
  std::vector<double> first_stage_grid = qr::default_tau_grid();
  qr::FitOptions fit;
  double max_failure_share = 0.10;
};

// Regression-to-the-mean placebo: repeatedly relabels a random subset of
// untreated units as pseudo-treated, reruns the imputation pipeline, and
// records the second-stage coefficients of effects on the imputed
// counterfactual outcome.  Under true rank persistence the placebo slopes
// center on zero; mean reversion pushes them negative.
struct RtmResult {
  std::vector<double> taus;
  Mat qr_slopes;   // successful replicates x |taus|
  Vec ols_slopes;  // successful replicates
  Vec mean_qr_slope, p05_qr_slope, p95_qr_slope;
  double mean_ols_slope = 0.0, p05_ols_slope = 0.0, p95_ols_slope = 0.0;
  int n_failed = 0;
};

RtmResult rtm_placebo(const Panel& panel, const RtmOptions& opts);

struct RotheWiedOptions {
  std::vector<double> tau_grid = qr::default_tau_grid();
  qr::FitOptions fit;
  int B = 100;
  std::uint64_t seed = 0;
  int max_eval_n = 1500;  // evaluation axes are subsampled beyond this
  double max_failure_share = 0.10;
};

// Cramer-von Mises specification test for the linear quantile regression
// model: compares the model-implied conditional CDF against the empirical
// joint law over evaluation pairs (y_j, x_i),
//   T = sum_{(j,i)} [ n^{-1} sum_k (1{y_k <= y_j} - F_hat(y_j|x_k))
//                              * 1{x_k <= x_i componentwise} ]^2,
// with the p-value from recentered nonparametric bootstrap replicates that
// re-estimate the quantile process on every resample.
struct RotheWiedResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> boot_stats;
  std::vector<std::string> warnings;
};

RotheWiedResult rothe_wied_test(const DesignMatrix& X, const Vec& y,
                                const RotheWiedOptions& opts);

// Full report for one panel (drives the CLI robustness command).
struct PlaceboReport {
  PlaceboHeterogeneity heterogeneity;
  RtmResult rtm;
  std::uint64_t seed = 0;
};

}  // namespace rankdte::robust

#endif  // RANKDTE_ROBUSTNESS_HPP
