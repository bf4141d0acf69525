#ifndef RANKDTE_QR_ENGINE_HPP
#define RANKDTE_QR_ENGINE_HPP

#include <vector>

#include "rankdte/types.hpp"

namespace rankdte::qr {

// One quantile regression at a single level.
struct PinballFit {
  Vec coefficients;
  double tau = 0.5;
  double objective = 0.0;   // mean pinball loss at `coefficients`
  bool converged = true;    // false when the iteration cap was hit
  double kkt_inf = 0.0;     // normalized subgradient certificate (sup norm)
};

// Coefficient curves over a tau grid.  Prediction through a rearranged
// process sorts the per-covariate-vector quantile curve, which repairs any
// quantile crossing without touching the coefficients.
struct QuantileProcess {
  std::vector<double> tau_grid;  // strictly increasing, inside (0,1)
  Mat coefficients;              // |grid| x p
  bool rearranged = false;

  Eigen::Index grid_size() const {
    return static_cast<Eigen::Index>(tau_grid.size());
  }
  Eigen::Index p() const { return coefficients.cols(); }
  // Raw per-grid-point predictions x'beta(tau_k).
  Vec raw_curve(const Vec& x) const;
  // Raw curve, sorted when the process is rearranged.
  Vec monotone_curve(const Vec& x) const;
};

struct FitOptions {
  int irls_max_iter = 200;
  double irls_tol = 1e-11;     // relative coefficient-change tolerance
  // Exact vertex descent runs when n <= exact_threshold; above it the
  // smoothed IRLS solution is returned as-is.
  int exact_threshold = 500;
  double rank_tol = 1e-10;     // sigma_min < rank_tol * sigma_max => error
};

double pinball_loss(const Vec& residuals, double tau);

std::vector<double> default_tau_grid();  // 0.01, 0.02, ..., 0.99

PinballFit fit_quantile(const DesignMatrix& X, const Vec& y, double tau,
                        const FitOptions& opts = {});

QuantileProcess fit_process(const DesignMatrix& X, const Vec& y,
                            const std::vector<double>& tau_grid,
                            const FitOptions& opts = {});

// Marks the process for prediction-time monotone rearrangement.  `anchors`
// are covariate vectors where the monotonicity contract is checked.
QuantileProcess rearrange(const QuantileProcess& proc,
                          const std::vector<Vec>& anchors = {});

// Interpolated quantile at level tau (clamped to the grid range).
double predict_quantile(const QuantileProcess& proc, const Vec& x, double tau);

// Generalized inverse of the predicted quantile curve: the largest grid
// level whose prediction is <= y, interpolated between bracketing grid
// points and clamped to [min grid, max grid].
double conditional_cdf(const QuantileProcess& proc, const Vec& x, double y);

// Same evaluators on a precomputed monotone curve (hot path for per-unit
// loops; `curve` must come from monotone_curve of a rearranged process).
double curve_quantile(const std::vector<double>& tau_grid, const Vec& curve,
                      double tau);
double curve_cdf(const std::vector<double>& tau_grid, const Vec& curve,
                 double y);

Vec fit_ols(const DesignMatrix& X, const Vec& y, double rank_tol = 1e-10);

}  // namespace rankdte::qr

#endif  // RANKDTE_QR_ENGINE_HPP
