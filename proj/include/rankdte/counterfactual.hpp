#ifndef RANKDTE_COUNTERFACTUAL_HPP
#define RANKDTE_COUNTERFACTUAL_HPP

#include <vector>

#include "rankdte/qr_engine.hpp"
#include "rankdte/types.hpp"

namespace rankdte::cf {

struct Algorithm1Options {
  std::vector<double> tau_grid = qr::default_tau_grid();
  qr::FitOptions fit;
  // Diagnostic switch: reuse the treated period-(t-1) process as the
  // counterfactual process, which collapses the imputation to the lagged
  // outcome up to grid resolution.
  bool use_step1_process_for_step4 = false;
};

struct Algorithm1Result {
  std::vector<ImputedPair> pairs;        // one per treated unit, panel order
  qr::QuantileProcess proc_tm1_treated;  // step 1 (rearranged)
  qr::QuantileProcess proc_tm1_untreated;  // step 2 (rearranged)
  qr::QuantileProcess proc_y0_treated;   // step 4 (rearranged)
};

// Five-step imputation estimator:
//   1. QR of y_{t-1} on X over treated units
//   2. QR of y_{t-1} on X over untreated units, inverted to a CDF
//   3. untreated units mapped to the treated period-(t-1) scale at their
//      untreated conditional rank
//   4. QR of (Delta y + step-3 value) on X over untreated units, which is
//      the counterfactual process for treated units
//   5. each treated unit evaluated at its own period-(t-1) conditional rank
Algorithm1Result algorithm1(const Panel& panel,
                            const Algorithm1Options& opts = {});

struct CounterfactualCurves {
  // Mean over treated units' covariates of the conditional counterfactual
  // CDF (the form used for distribution plots).
  DistributionCurve averaged;
  // Empirical CDF of the imputed counterfactual outcomes (the form the
  // effect pipeline consumes).  Agrees with `averaged` up to sampling and
  // grid error.
  DistributionCurve imputed;
};

CounterfactualCurves counterfactual_distribution(const Algorithm1Result& fit,
                                                 const Panel& panel,
                                                 const Vec& support);

// Empirical CDF of observed treated outcomes (never smoothed; keeps any
// mass point at zero intact).
DistributionCurve observed_treated_cdf(const Panel& panel, const Vec& support);

double att(const std::vector<ImputedPair>& pairs);

struct QttCurve {
  std::vector<double> tau_grid;
  Vec effects;  // Q_observed(tau) - Q_counterfactual(tau)
};

QttCurve qtt(const DistributionCurve& observed,
             const DistributionCurve& counterfactual,
             const std::vector<double>& tau_grid);

struct CicOptions {
  std::vector<double> tau_grid = qr::default_tau_grid();
  qr::FitOptions fit;
  bool conditional = true;  // false: intercept-only (unconditional) first step
};

// Change-in-changes imputation: treated units evaluated on the untreated
// period-t process at their untreated period-(t-1) conditional rank.
std::vector<ImputedPair> cic_impute(const Panel& panel,
                                    const CicOptions& opts = {});

// No estimation: the counterfactual is the unit's own lagged outcome.
std::vector<ImputedPair> lagged_impute(const Panel& panel);

}  // namespace rankdte::cf

#endif  // RANKDTE_COUNTERFACTUAL_HPP
