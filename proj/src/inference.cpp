#include "rankdte/inference.hpp"

#include <algorithm>
#include <cmath>

#include "rankdte/mathutil.hpp"
#include "rankdte/parallel.hpp"
#include "rankdte/rng.hpp"

namespace rankdte::boot {

namespace {

Panel resample_panel(const Panel& panel, rng::Stream& stream, bool stratify) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(panel.n()));
  if (stratify) {
    for (const auto& group :
         {panel.treated_indices(), panel.untreated_indices()}) {
      const auto m = group.size();
      for (std::size_t k = 0; k < m; ++k)
        idx.push_back(group[stream.uniform_int(m)]);
    }
  } else {
    const auto n = static_cast<std::uint64_t>(panel.n());
    for (std::uint64_t k = 0; k < n; ++k)
      idx.push_back(static_cast<Eigen::Index>(stream.uniform_int(n)));
  }
  return panel.subset(idx);
}

Vec column_quantile(const Mat& replicates, double p) {
  const Eigen::Index K = replicates.cols();
  Vec out(K);
  std::vector<double> col(static_cast<std::size_t>(replicates.rows()));
  for (Eigen::Index j = 0; j < K; ++j) {
    for (Eigen::Index b = 0; b < replicates.rows(); ++b)
      col[static_cast<std::size_t>(b)] = replicates(b, j);
    std::sort(col.begin(), col.end());
    out[j] = quantile_sorted(col, p);
  }
  return out;
}

}  // namespace

Band pointwise_band(const Mat& replicates, double level) {
  if (replicates.rows() == 0)
    throw std::invalid_argument("pointwise_band: no replicates");
  const double alpha = 1.0 - level;
  return {column_quantile(replicates, alpha / 2.0),
          column_quantile(replicates, 1.0 - alpha / 2.0)};
}

Band uniform_band(const Mat& replicates, const Vec& estimate, double level,
                  std::vector<std::string>* warnings) {
  const Eigen::Index B = replicates.rows();
  const Eigen::Index K = replicates.cols();
  if (B == 0) throw std::invalid_argument("uniform_band: no replicates");
  if (estimate.size() != K)
    throw std::invalid_argument("uniform_band: estimate length mismatch");

  Vec sd(K);
  int n_zero = 0;
  for (Eigen::Index j = 0; j < K; ++j) {
    const double m = replicates.col(j).mean();
    const double ss = (replicates.col(j).array() - m).square().sum();
    sd[j] = B > 1 ? std::sqrt(ss / static_cast<double>(B - 1)) : 0.0;
    if (sd[j] == 0.0) ++n_zero;
  }
  if (n_zero > 0 && warnings)
    warnings->push_back("uniform band: " + std::to_string(n_zero) +
                        " zero-variance point(s) dropped from the sup");

  std::vector<double> sup(static_cast<std::size_t>(B), 0.0);
  for (Eigen::Index b = 0; b < B; ++b) {
    double mx = 0.0;
    for (Eigen::Index j = 0; j < K; ++j) {
      if (sd[j] == 0.0) continue;
      mx = std::max(mx, std::abs(replicates(b, j) - estimate[j]) / sd[j]);
    }
    sup[static_cast<std::size_t>(b)] = mx;
  }
  std::sort(sup.begin(), sup.end());
  const double crit = quantile_sorted(sup, level);

  Band band;
  band.lo = estimate - crit * sd;
  band.hi = estimate + crit * sd;

  // Envelop the pointwise band so containment holds at every point.
  const Band pw = pointwise_band(replicates, level);
  band.lo = band.lo.cwiseMin(pw.lo);
  band.hi = band.hi.cwiseMax(pw.hi);
  return band;
}

BootstrapEnvelope bootstrap(const PanelEstimator& estimator, const Panel& panel,
                            const BootstrapOptions& opts) {
  if (opts.B < 2) throw std::invalid_argument("bootstrap: B must be >= 2");
  if (!(opts.level > 0.0 && opts.level <= 1.0))
    throw std::invalid_argument("bootstrap: level must lie in (0,1]");

  BootstrapEnvelope env;
  env.level = opts.level;
  env.seed = opts.seed;
  env.point_estimate = estimator(panel);
  const Eigen::Index K = env.point_estimate.size();

  Mat draws(opts.B, K);
  std::vector<char> ok(static_cast<std::size_t>(opts.B), 0);
  std::vector<std::string> errors(static_cast<std::size_t>(opts.B));
  par::for_each_index(opts.B, [&](std::int64_t b) {
    rng::Stream stream(opts.seed, static_cast<std::uint64_t>(b) + 1);
    try {
      const Panel resample =
          resample_panel(panel, stream, opts.stratify_by_treatment);
      const Vec value = estimator(resample);
      if (value.size() != K) throw std::logic_error("estimator length changed");
      draws.row(static_cast<Eigen::Index>(b)) = value.transpose();
      ok[static_cast<std::size_t>(b)] = 1;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(b)] = e.what();
    }
  });

  Eigen::Index n_ok = 0;
  for (char c : ok) n_ok += c;
  env.n_failed = opts.B - static_cast<int>(n_ok);
  if (env.n_failed > opts.max_failure_share * opts.B) {
    std::string first;
    for (std::size_t b = 0; b < errors.size(); ++b)
      if (!ok[b]) {
        first = errors[b];
        break;
      }
    throw ReplicateFailureError(std::to_string(env.n_failed) + " of " +
                                std::to_string(opts.B) +
                                " bootstrap replicates failed; first: " + first);
  }
  for (std::size_t b = 0; b < errors.size(); ++b)
    if (!ok[b])
      env.warnings.push_back("replicate " + std::to_string(b) +
                             " failed: " + errors[b]);

  env.replicates.resize(n_ok, K);
  Eigen::Index r = 0;
  for (Eigen::Index b = 0; b < opts.B; ++b)
    if (ok[static_cast<std::size_t>(b)]) env.replicates.row(r++) = draws.row(b);

  const Band pw = pointwise_band(env.replicates, opts.level);
  env.lo_pw = pw.lo;
  env.hi_pw = pw.hi;
  const Band un =
      uniform_band(env.replicates, env.point_estimate, opts.level, &env.warnings);
  env.lo_unif = un.lo;
  env.hi_unif = un.hi;
  return env;
}

}  // namespace rankdte::boot
