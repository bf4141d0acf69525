#include "rankdte/effects.hpp"

#include <cmath>

#include "rankdte/parallel.hpp"

namespace rankdte::eff {

namespace {

QrEffectCurves fit_curves(const DesignMatrix& design, const Vec& deltas,
                          const std::vector<double>& tau_grid,
                          const qr::FitOptions& fit) {
  const qr::QuantileProcess proc = qr::fit_process(design, deltas, tau_grid, fit);
  QrEffectCurves out;
  out.tau_grid = tau_grid;
  out.coefficients = proc.coefficients;
  out.ols_coefficients = qr::fit_ols(design, deltas, fit.rank_tol);
  out.column_names = design.column_names;
  return out;
}

}  // namespace

std::vector<double> reporting_tau_grid() {
  std::vector<double> grid(9);
  for (int i = 1; i <= 9; ++i) grid[static_cast<std::size_t>(i - 1)] = i / 10.0;
  return grid;
}

DistributionCurve dte_distribution(const EffectSample& sample,
                                   const Vec& support) {
  sample.validate();
  std::vector<double> deltas(sample.deltas.data(),
                             sample.deltas.data() + sample.deltas.size());
  return empirical_cdf(deltas, support);
}

double fraction_above(const EffectSample& sample, double threshold) {
  sample.validate();
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < sample.deltas.size(); ++i)
    if (sample.deltas[i] > threshold) ++count;
  return static_cast<double>(count) / static_cast<double>(sample.deltas.size());
}

QrEffectCurves qr_effects_on_covariates(const EffectSample& sample,
                                        const std::vector<double>& tau_grid,
                                        const EffectsOptions& opts) {
  sample.validate();
  const DesignMatrix design =
      DesignMatrix::with_intercept(sample.covariates, sample.covariate_names);
  return fit_curves(design, sample.deltas, tau_grid, opts.fit);
}

QrEffectCurves qr_effects_on_y0(const EffectSample& sample,
                                const std::vector<double>& tau_grid,
                                const EffectsOptions& opts) {
  sample.validate();
  const double mean = sample.y0_hat.mean();
  const double var = (sample.y0_hat.array() - mean).square().sum();
  if (var <= 0.0)
    throw DegenerateRegressorError("imputed counterfactual outcome is constant");

  const int degree = std::max(1, opts.y0_poly_degree);
  Mat cols(sample.n(), degree);
  std::vector<std::string> names;
  for (int d = 1; d <= degree; ++d) {
    cols.col(d - 1) = sample.y0_hat.array().pow(d);
    names.push_back(d == 1 ? "y0_hat" : "y0_hat^" + std::to_string(d));
  }
  const DesignMatrix design = DesignMatrix::with_intercept(cols, names);
  return fit_curves(design, sample.deltas, tau_grid, opts.fit);
}

}  // namespace rankdte::eff
