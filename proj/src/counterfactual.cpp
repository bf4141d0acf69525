#include "rankdte/counterfactual.hpp"

#include <algorithm>
#include <cmath>

#include "rankdte/mathutil.hpp"
#include "rankdte/parallel.hpp"

namespace rankdte::cf {

namespace {

struct GroupData {
  DesignMatrix design;
  Vec y_t, y_tm1;
  std::vector<Eigen::Index> rows;  // panel row indices
};

GroupData extract_group(const Panel& panel, bool treated) {
  GroupData g;
  g.rows = treated ? panel.treated_indices() : panel.untreated_indices();
  const auto m = static_cast<Eigen::Index>(g.rows.size());
  Mat covs(m, panel.covariates.cols());
  g.y_t.resize(m);
  g.y_tm1.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index r = g.rows[static_cast<std::size_t>(i)];
    covs.row(i) = panel.covariates.row(r);
    g.y_t[i] = panel.y_t[r];
    g.y_tm1[i] = panel.y_tm1[r];
  }
  g.design = DesignMatrix::with_intercept(covs, panel.covariate_names);
  return g;
}

void require_group_sizes(const Panel& panel) {
  panel.validate();
  const auto p = panel.covariates.cols() + 1;
  const auto n1 = static_cast<Eigen::Index>(panel.treated_indices().size());
  const auto n0 = static_cast<Eigen::Index>(panel.untreated_indices().size());
  if (n1 == 0) throw EmptyGroupError("panel has no treated units");
  if (n0 == 0) throw EmptyGroupError("panel has no untreated units");
  if (n1 < p + 1 || n0 < p + 1)
    throw EmptyGroupError("each treatment group needs at least p+1 units");
}

qr::QuantileProcess fit_rearranged(const DesignMatrix& X, const Vec& y,
                                   const std::vector<double>& grid,
                                   const qr::FitOptions& fit, int step) {
  try {
    return qr::rearrange(qr::fit_process(X, y, grid, fit));
  } catch (const Error& e) {
    throw Error(e.code(),
                "algorithm step " + std::to_string(step) + ": " + e.what());
  }
}

}  // namespace

Algorithm1Result algorithm1(const Panel& panel, const Algorithm1Options& opts) {
  require_group_sizes(panel);
  const GroupData treated = extract_group(panel, true);
  const GroupData untreated = extract_group(panel, false);

  Algorithm1Result out;
  out.proc_tm1_treated =
      fit_rearranged(treated.design, treated.y_tm1, opts.tau_grid, opts.fit, 1);
  out.proc_tm1_untreated = fit_rearranged(untreated.design, untreated.y_tm1,
                                          opts.tau_grid, opts.fit, 2);

  // Step 3: untreated units on the treated period-(t-1) scale.
  const auto n0 = untreated.design.n();
  Vec ytilde_tm1(n0);
  par::for_each_index(n0, [&](std::int64_t i) {
    const Vec x = untreated.design.rows.row(i).transpose();
    const double rank = qr::curve_cdf(opts.tau_grid,
                                      out.proc_tm1_untreated.monotone_curve(x),
                                      untreated.y_tm1[i]);
    ytilde_tm1[i] = qr::curve_quantile(
        opts.tau_grid, out.proc_tm1_treated.monotone_curve(x), rank);
  });

  // Step 4: counterfactual process from untreated outcome changes.
  if (opts.use_step1_process_for_step4) {
    out.proc_y0_treated = out.proc_tm1_treated;
  } else {
    const Vec z = (untreated.y_t - untreated.y_tm1) + ytilde_tm1;
    out.proc_y0_treated =
        fit_rearranged(untreated.design, z, opts.tau_grid, opts.fit, 4);
  }

  // Step 5: treated units at their own period-(t-1) conditional rank.
  const auto n1 = treated.design.n();
  out.pairs.resize(static_cast<std::size_t>(n1));
  par::for_each_index(n1, [&](std::int64_t i) {
    const Vec x = treated.design.rows.row(i).transpose();
    const double rank = qr::curve_cdf(
        opts.tau_grid, out.proc_tm1_treated.monotone_curve(x), treated.y_tm1[i]);
    ImputedPair& pair = out.pairs[static_cast<std::size_t>(i)];
    const Eigen::Index r = treated.rows[static_cast<std::size_t>(i)];
    pair.unit_id = panel.unit_ids[static_cast<std::size_t>(r)];
    pair.y1 = treated.y_t[i];
    pair.rank_tm1 = rank;
    pair.y0_hat = qr::curve_quantile(
        opts.tau_grid, out.proc_y0_treated.monotone_curve(x), rank);
    pair.covariates = panel.covariates.row(r).transpose();
  });
  return out;
}

CounterfactualCurves counterfactual_distribution(const Algorithm1Result& fit,
                                                 const Panel& panel,
                                                 const Vec& support) {
  if (fit.pairs.empty()) throw std::invalid_argument("no imputed pairs");
  const auto n1 = static_cast<Eigen::Index>(fit.pairs.size());
  const auto K = support.size();

  // Conditional counterfactual CDF per treated unit, averaged serially so
  // results do not depend on thread scheduling.
  Mat unit_cdf(n1, K);
  par::for_each_index(n1, [&](std::int64_t i) {
    Vec x(panel.covariates.cols() + 1);
    x[0] = 1.0;
    x.tail(panel.covariates.cols()) =
        fit.pairs[static_cast<std::size_t>(i)].covariates;
    const Vec curve = fit.proc_y0_treated.monotone_curve(x);
    for (Eigen::Index j = 0; j < K; ++j)
      unit_cdf(i, j) = qr::curve_cdf(fit.proc_y0_treated.tau_grid, curve, support[j]);
  });

  CounterfactualCurves out;
  out.averaged.support = support;
  out.averaged.cdf = unit_cdf.colwise().mean().transpose();
  out.averaged.validate();

  std::vector<double> imputations;
  imputations.reserve(fit.pairs.size());
  for (const auto& pair : fit.pairs) imputations.push_back(pair.y0_hat);
  out.imputed = empirical_cdf(imputations, support);
  return out;
}

DistributionCurve observed_treated_cdf(const Panel& panel, const Vec& support) {
  std::vector<double> values;
  for (Eigen::Index i : panel.treated_indices()) values.push_back(panel.y_t[i]);
  if (values.empty()) throw EmptyGroupError("panel has no treated units");
  return empirical_cdf(values, support);
}

double att(const std::vector<ImputedPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("att: no pairs");
  double s = 0.0;
  for (const auto& pair : pairs) s += pair.y1 - pair.y0_hat;
  return s / static_cast<double>(pairs.size());
}

QttCurve qtt(const DistributionCurve& observed,
             const DistributionCurve& counterfactual,
             const std::vector<double>& tau_grid) {
  observed.validate();
  counterfactual.validate();
  QttCurve out;
  out.tau_grid = tau_grid;
  out.effects.resize(static_cast<Eigen::Index>(tau_grid.size()));
  for (std::size_t k = 0; k < tau_grid.size(); ++k)
    out.effects[static_cast<Eigen::Index>(k)] =
        observed.quantile(tau_grid[k]) - counterfactual.quantile(tau_grid[k]);
  return out;
}

std::vector<ImputedPair> cic_impute(const Panel& panel, const CicOptions& opts) {
  require_group_sizes(panel);
  GroupData treated = extract_group(panel, true);
  GroupData untreated = extract_group(panel, false);
  if (!opts.conditional) {
    // Unconditional variant: intercept-only designs.
    const auto strip = [](GroupData& g) {
      g.design = DesignMatrix::with_intercept(Mat(g.design.n(), 0), {});
    };
    strip(treated);
    strip(untreated);
  }

  const auto proc_t0 =
      fit_rearranged(untreated.design, untreated.y_t, opts.tau_grid, opts.fit, 1);
  const auto proc_tm1 = fit_rearranged(untreated.design, untreated.y_tm1,
                                       opts.tau_grid, opts.fit, 2);

  const auto n1 = treated.design.n();
  std::vector<ImputedPair> pairs(static_cast<std::size_t>(n1));
  par::for_each_index(n1, [&](std::int64_t i) {
    const Vec x = treated.design.rows.row(i).transpose();
    const double rank = qr::curve_cdf(opts.tau_grid, proc_tm1.monotone_curve(x),
                                      treated.y_tm1[i]);
    ImputedPair& pair = pairs[static_cast<std::size_t>(i)];
    const Eigen::Index r = treated.rows[static_cast<std::size_t>(i)];
    pair.unit_id = panel.unit_ids[static_cast<std::size_t>(r)];
    pair.y1 = treated.y_t[i];
    pair.rank_tm1 = rank;
    pair.y0_hat = qr::curve_quantile(opts.tau_grid, proc_t0.monotone_curve(x), rank);
    pair.covariates = panel.covariates.row(r).transpose();
  });
  return pairs;
}

std::vector<ImputedPair> lagged_impute(const Panel& panel) {
  panel.validate();
  const auto idx = panel.treated_indices();
  if (idx.empty()) throw EmptyGroupError("panel has no treated units");
  std::vector<double> y_tm1;
  for (Eigen::Index i : idx) y_tm1.push_back(panel.y_tm1[i]);
  const std::vector<double> ranks = mid_ranks(y_tm1);

  std::vector<ImputedPair> pairs(idx.size());
  const double n = static_cast<double>(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Eigen::Index i = idx[k];
    ImputedPair& pair = pairs[k];
    pair.unit_id = panel.unit_ids[static_cast<std::size_t>(i)];
    pair.y1 = panel.y_t[i];
    pair.y0_hat = panel.y_tm1[i];
    pair.rank_tm1 = std::clamp(ranks[k] / (n + 1.0), 0.01, 0.99);
    pair.covariates = panel.covariates.row(i).transpose();
  }
  return pairs;
}

}  // namespace rankdte::cf
