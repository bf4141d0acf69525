#ifndef RANKDTE_EFFECTS_HPP
#define RANKDTE_EFFECTS_HPP

#include <vector>

#include "rankdte/qr_engine.hpp"
#include "rankdte/types.hpp"

namespace rankdte::eff {

// Second-stage regression output: one coefficient row per quantile level
// plus the matching OLS fit.
struct QrEffectCurves {
  std::vector<double> tau_grid;
  Mat coefficients;  // |grid| x p
  Vec ols_coefficients;
  std::vector<std::string> column_names;
};

// Reporting levels used for tables: 0.1, 0.2, ..., 0.9.
std::vector<double> reporting_tau_grid();

DistributionCurve dte_distribution(const EffectSample& sample,
                                   const Vec& support);

// Share of effects strictly above `threshold`.
double fraction_above(const EffectSample& sample, double threshold);

struct EffectsOptions {
  qr::FitOptions fit;
  int y0_poly_degree = 1;  // design columns y0, y0^2, ... for the y0 stage
};

QrEffectCurves qr_effects_on_covariates(const EffectSample& sample,
                                        const std::vector<double>& tau_grid,
                                        const EffectsOptions& opts = {});

QrEffectCurves qr_effects_on_y0(const EffectSample& sample,
                                const std::vector<double>& tau_grid,
                                const EffectsOptions& opts = {});

}  // namespace rankdte::eff

#endif  // RANKDTE_EFFECTS_HPP
