#ifndef RANKDTE_DATAIO_HPP
#define RANKDTE_DATAIO_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rankdte/types.hpp"

namespace rankdte::io {

// Column mapping plus categorical encodings for panel CSV files.
struct CovariateSpec {
  std::string column;
  bool categorical = false;
  std::string reference;  // reference level, categorical only
};

struct PanelSchema {
  std::string id;
  std::string treated;
  std::string y_t;
  std::string y_tm1;
  std::string in_labor_force;  // optional column (treated-group filter)
  std::vector<CovariateSpec> covariates;

  static PanelSchema from_json_file(const std::string& path);
  static PanelSchema from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct LoadReport {
  std::int64_t n_rows_read = 0;
  std::int64_t n_dropped_missing_untreated = 0;
  std::int64_t n_dropped_treated_missing_tm1 = 0;
  std::int64_t n_dropped_not_in_labor_force = 0;
  std::int64_t n_zero_coded = 0;
  // categorical column -> ordered non-reference levels (encoding metadata)
  std::map<std::string, std::vector<std::string>> encodings;
};

// Reads a panel CSV applying the retention rules: untreated rows with a
// missing outcome in either period are dropped; treated rows flagged out of
// the labor force are dropped; treated rows in the labor force with missing
// current earnings are coded to 0.
Panel load_panel(const std::string& path, const PanelSchema& schema,
                 LoadReport* report = nullptr);

void write_panel(const Panel& panel, const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic data generator.
//
// Outcomes follow a location-scale model that is linear in the design at
// every quantile level:
//   Y_{t-1} = x'a1 + (x'b1) * Qn(U_{t-1}),   Y_t(0) = x'a2 + (x'b2) * Qn(U_t)
// with Qn the standard normal quantile and a2 = a1 + a_change,
// b2 = b1 + b_change.  Period ranks are coupled through a Gaussian copula
// with parameter kappa; kappa = 1 reproduces the same rank in both periods
// and kappa = 0 draws them independently.  The generator therefore satisfies
// the distributional difference-in-differences and copula restrictions by
// construction, and rank invariance over time exactly when kappa = 1.

enum class EffectRule { Constant, CovariateLinear, Y0Linear };

struct DgpCovariate {
  std::string name;
  bool is_binary = true;
  double p = 0.5;          // binary: P(1) for untreated units
  double p_treated = -1.0; // binary: P(1) for treated units (<0: same as p)
  double lo = -1.0, hi = 1.0;              // continuous range, untreated
  double lo_treated = 0.0, hi_treated = 0.0;  // continuous, treated (lo==hi: same)

  static DgpCovariate binary(std::string name, double p, double p_treated = -1.0);
  static DgpCovariate uniform(std::string name, double lo, double hi);
};

struct DgpConfig {
  int n_treated = 500;
  int n_untreated = 1000;
  std::vector<DgpCovariate> covariates;
  // coefficient curves: value(tau) = a + b * Qn(tau), one entry per design
  // column (intercept first)
  Vec level_a, level_b;       // period t-1
  Vec change_a, change_b;     // added to reach period t
  double kappa = 1.0;         // rank persistence
  EffectRule effect_rule = EffectRule::Constant;
  double effect_constant = -100.0;
  Vec effect_covariate_coef;  // CovariateLinear: effect = x'gamma + noise
  double effect_y0_intercept = 0.0;  // Y0Linear: effect = c0 + c1*y0 + noise
  double effect_y0_slope = 0.0;
  double effect_noise_sd = 0.0;
  double unemployment_prob = 0.0;  // treated: Y_t(1) = 0 with this probability
  std::uint64_t seed = 0;

  static DgpConfig basic(int n_treated, int n_untreated, std::uint64_t seed);
  void validate() const;
};

// Ground truth captured at generation time.
struct TruthRecord {
  std::vector<double> true_y0_treated;  // aligned to treated rows in panel order
  double att = 0.0;
  DistributionCurve dte_cdf;
  double spearman_tm1_t0 = 0.0;  // closed-form rank correlation implied by kappa
  bool analytic_second_stage = false;
  EffectRule effect_rule = EffectRule::Constant;
  Vec effect_covariate_coef;
  double effect_y0_intercept = 0.0;
  double effect_y0_slope = 0.0;
  double effect_noise_sd = 0.0;
  std::uint64_t seed = 0;
  double kappa = 1.0;
};

struct SimulatedPanel {
  Panel panel;
  TruthRecord truth;
};

SimulatedPanel simulate_dgp(const DgpConfig& config);

// Closed-form Spearman rank correlation of the Gaussian rank copula.
double spearman_of_kappa(double kappa);

void write_truth(const TruthRecord& truth, const std::string& path);
TruthRecord load_truth(const std::string& path);

// ---------------------------------------------------------------------------
// Result files.

struct CurveResult {
  std::string name;
  Vec points;
  Vec estimate;
  std::optional<Vec> lo_pw, hi_pw, lo_unif, hi_unif;
};

// Writes `point,estimate,lo_pw,hi_pw,lo_unif,hi_unif`; absent bands repeat
// the estimate column so the row-wise envelope invariant always holds.
void write_curve_csv(const CurveResult& curve, const std::string& path);
CurveResult read_curve_csv(const std::string& path);

}  // namespace rankdte::io

#endif  // RANKDTE_DATAIO_HPP
