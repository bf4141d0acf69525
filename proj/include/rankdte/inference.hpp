#ifndef RANKDTE_INFERENCE_HPP
#define RANKDTE_INFERENCE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rankdte/types.hpp"

namespace rankdte::boot {

struct Band {
  Vec lo, hi;
};

struct BootstrapOptions {
  int B = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;  // confidence level of both bands
  bool stratify_by_treatment = false;
  double max_failure_share = 0.10;
};

struct BootstrapEnvelope {
  Vec point_estimate;
  Mat replicates;  // successful replicates, one row each
  Vec lo_pw, hi_pw;
  Vec lo_unif, hi_unif;
  double level = 0.95;
  std::uint64_t seed = 0;
  int n_failed = 0;
  std::vector<std::string> warnings;
};

// Estimators map a panel to a fixed-length vector (a curve, a scalar, or a
// stacked block of both).
using PanelEstimator = std::function<Vec(const Panel&)>;

// Empirical bootstrap over unit-level resamples.  Each replicate re-runs
// the full estimator on a with-replacement resample drawn from its own
// counter-based stream, so results are reproducible and independent of the
// parallel schedule.  Replicates that throw are recorded and skipped; more
// than `max_failure_share` failures aborts.
BootstrapEnvelope bootstrap(const PanelEstimator& estimator, const Panel& panel,
                            const BootstrapOptions& opts);

// Per-point empirical quantile band at levels (1 -/+ level)/2.
Band pointwise_band(const Mat& replicates, double level);

// Sup-t band: estimate +/- c * sd where c is the `level` quantile over
// replicates of the maximal studentized absolute deviation.  Points with
// zero replicate variance are dropped from the sup (with a warning).  The
// band is then widened to envelop the pointwise band, which keeps the
// containment invariant exact even for skewed replicate distributions.
Band uniform_band(const Mat& replicates, const Vec& estimate, double level,
                  std::vector<std::string>* warnings = nullptr);

}  // namespace rankdte::boot

#endif  // RANKDTE_INFERENCE_HPP
